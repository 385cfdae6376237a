#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wmt/tensor.hpp"

namespace wmt {

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Denominator floor for the relative error, so entries whose true
    /// gradient is ~0 are judged on absolute error instead. Central
    /// differences at h = 1e-5 carry roughly 1e-10 of roundoff, so a floor
    /// much below 1e-5 would grade that noise as relative error.
    double magnitude_floor = 1e-5;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    std::size_t entries_checked = 0;
    bool passed = false;
};

/// Compares reverse-mode gradients of `build_loss` against central finite
/// differences for every entry of every tensor in `params`.
///
/// `build_loss` must rebuild the scalar loss from the current parameter
/// values on each call. Relative error per entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, magnitude_floor).
/// Throws NumericError if the loss is not finite.
GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::vector<Tensor> params,
                           const GradCheckOptions& options = {});

}  // namespace wmt
