#include "wmt/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "wmt/error.hpp"

namespace wmt {

namespace {

double evaluate(const std::function<Tensor()>& build_loss) {
    NoGradScope no_grad;
    const double value = build_loss().item();
    if (!std::isfinite(value)) {
        throw NumericError("grad_check: loss is not finite");
    }
    return value;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& build_loss, std::vector<Tensor> params,
                           const GradCheckOptions& options) {
    for (Tensor& p : params) {
        p.set_requires_grad(true);
        p.clear_grad();
    }
    {
        Tape tape;
        TapeScope scope(tape);
        const Tensor loss = build_loss();
        if (!std::isfinite(loss.item())) {
            throw NumericError("grad_check: loss is not finite");
        }
        tape.backward(loss);
    }

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        const std::vector<double> analytic = p.has_grad()
                                                 ? std::vector<double>(p.grad().begin(), p.grad().end())
                                                 : std::vector<double>(p.size(), 0.0);
        auto values = p.mutable_values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + options.step;
            const double plus = evaluate(build_loss);
            values[i] = saved - options.step;
            const double minus = evaluate(build_loss);
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double abs_err = std::abs(analytic[i] - numeric);
            const double denom =
                std::max({std::abs(analytic[i]), std::abs(numeric), options.magnitude_floor});
            const double rel_err = abs_err / denom;
            report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
            if (rel_err > report.max_relative_error) {
                report.max_relative_error = rel_err;
                report.worst_param = pi;
                report.worst_index = i;
            }
            ++report.entries_checked;
        }
    }
    report.passed = report.max_relative_error < options.tolerance;
    return report;
}

}  // namespace wmt
