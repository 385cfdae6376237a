#include "wmt/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "wmt/error.hpp"

namespace wmt {

namespace {

thread_local Tape* active_tape = nullptr;

}  // namespace

std::size_t shape_size(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor() : node_(std::make_shared<Node>()) {
    node_->values.assign(1, 0.0);
}

Tensor::Tensor(Shape shape, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->values.assign(shape_size(shape), 0.0);
    node_->shape = std::move(shape);
    node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
    if (shape_size(shape) != values.size()) {
        throw DimensionError("tensor shape " + shape_string(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->values = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    for (const auto& row : rows) {
        if (row.size() != n_cols) {
            throw DimensionError("ragged matrix literal");
        }
        values.insert(values.end(), row.begin(), row.end());
    }
    return Tensor(Shape{n_rows, n_cols}, std::move(values), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
    return Tensor(Shape{values.size()}, std::vector<double>(values), requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                             shape_string(shape()));
    }
    return node_->shape[axis];
}

std::size_t Tensor::rows() const {
    if (rank() != 2) {
        throw DimensionError("expected a matrix, got " + shape_string(shape()));
    }
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) {
        throw DimensionError("expected a matrix, got " + shape_string(shape()));
    }
    return node_->shape[1];
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_string(shape()));
    }
    return node_->values[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
    return node_->values[row * cols() + col];
}

std::span<double> Tensor::grad_buffer() const {
    if (node_->grad.empty()) {
        node_->grad.assign(node_->values.size(), 0.0);
    }
    return node_->grad;
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) {
        std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }
}

void Tensor::clear_grad() noexcept {
    node_->grad.clear();
    node_->grad.shrink_to_fit();
}

Tensor Tensor::detach() const {
    return Tensor(node_->shape, node_->values, false);
}

Tape::~Tape() {
    if (active_tape == this) {
        active_tape = nullptr;
    }
}

void Tape::record(Backward backward) {
    entries_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw ContractError("reverse pass needs a scalar loss, got shape " +
                            shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) {
        clear();
        return;
    }
    loss.grad_buffer()[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        (*it)();
    }
    clear();
}

void Tape::clear() noexcept {
    entries_.clear();
}

Tape* Tape::active() noexcept {
    return active_tape;
}

TapeScope::TapeScope(Tape& tape) noexcept : previous_(active_tape) {
    active_tape = &tape;
}

TapeScope::~TapeScope() {
    active_tape = previous_;
}

NoGradScope::NoGradScope() noexcept : previous_(active_tape) {
    active_tape = nullptr;
}

NoGradScope::~NoGradScope() {
    active_tape = previous_;
}

void reverse_pass(const Tensor& loss) {
    Tape* tape = Tape::active();
    if (tape == nullptr) {
        throw ContractError("reverse_pass called without an active tape");
    }
    tape->backward(loss);
}

Tensor record_op(Tensor result, std::span<const Tensor> inputs,
                 std::function<void(std::span<const double>)> backward) {
    Tape* tape = Tape::active();
    if (tape == nullptr) {
        return result;
    }
    const bool needs_grad =
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!needs_grad) {
        return result;
    }
    result.set_requires_grad(true);
    tape->record([out = result, fn = std::move(backward)]() {
        if (!out.has_grad()) {
            return;
        }
        fn(out.grad());
    });
    return result;
}

Tensor record_op(Tensor result, std::initializer_list<Tensor> inputs,
                 std::function<void(std::span<const double>)> backward) {
    return record_op(std::move(result), std::span<const Tensor>(inputs.begin(), inputs.size()),
                     std::move(backward));
}

}  // namespace wmt
