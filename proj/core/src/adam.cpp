#include "wmt/adam.hpp"

#include <cmath>
#include <string>

#include "wmt/error.hpp"

namespace wmt {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size()) {
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " params but " +
                             std::to_string(grads.size()) + " grads");
    }
    if (state.first_moment.empty() && state.second_moment.empty()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    }
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
        throw DimensionError("adam_step: moment buffers do not match the parameter size");
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

void adam_step(Tensor& param, AdamState& state) {
    if (!param.has_grad()) {
        throw ContractError("adam_step: parameter has no gradient");
    }
    adam_step(param.mutable_values(), param.grad(), state);
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double beta1, double beta2,
                             double epsilon)
    : params_(std::move(params)), states_(params_.size()) {
    for (AdamState& s : states_) {
        s.beta1 = beta1;
        s.beta2 = beta2;
        s.epsilon = epsilon;
    }
}

void AdamOptimizer::step(double learning_rate) {
    ++steps_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        AdamState& s = states_[i];
        s.learning_rate = learning_rate;
        if (!params_[i].has_grad()) {
            // Keep bias correction aligned with the global step count.
            s.step += 1;
            continue;
        }
        adam_step(params_[i], s);
    }
}

void AdamOptimizer::zero_grad() {
    for (Tensor& p : params_) {
        p.zero_grad();
    }
}

}  // namespace wmt
