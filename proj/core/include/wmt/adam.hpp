#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmt/tensor.hpp"

namespace wmt {

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;
};

/// One bias-corrected Adam update of `params` in place. Moment buffers are
/// sized on the first call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Same, reading the gradient stored on the tensor. Throws ContractError when
/// the tensor has no gradient.
void adam_step(Tensor& param, AdamState& state);

/// Adam over a fixed parameter list with a shared learning rate.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor> params, double beta1 = 0.9, double beta2 = 0.98,
                  double epsilon = 1e-9);

    /// Applies one update with the given learning rate. Parameters that never
    /// received a gradient are skipped, but their step counter still advances.
    void step(double learning_rate);
    void zero_grad();

    std::span<const Tensor> params() const noexcept { return params_; }
    std::span<const AdamState> states() const noexcept { return states_; }
    std::span<AdamState> mutable_states() noexcept { return states_; }
    std::uint64_t steps_taken() const noexcept { return steps_; }

private:
    std::vector<Tensor> params_;
    std::vector<AdamState> states_;
    std::uint64_t steps_ = 0;
};

}  // namespace wmt
