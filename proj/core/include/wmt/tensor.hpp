#pragma once

// Reverse-mode automatic differentiation on a per-forward-pass tape.
//
// A Tensor is a cheap handle to shared storage (values + optional gradient).
// Primitives in ops.hpp record a backward closure on the thread's active Tape
// whenever one of their inputs requires a gradient. Without an active tape
// nothing is recorded, which doubles as inference mode.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wmt {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

class Tensor {
public:
    /// Scalar zero.
    Tensor();
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);
    static Tensor vector(std::initializer_list<double> values, bool requires_grad = false);

    const Shape& shape() const noexcept { return node_->shape; }
    std::size_t rank() const noexcept { return node_->shape.size(); }
    std::size_t size() const noexcept { return node_->values.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> values() const noexcept { return node_->values; }
    std::span<double> mutable_values() noexcept { return node_->values; }
    double item() const;
    double at(std::size_t row, std::size_t col) const;

    bool requires_grad() const noexcept { return node_->requires_grad; }
    void set_requires_grad(bool value) noexcept { node_->requires_grad = value; }

    bool has_grad() const noexcept { return !node_->grad.empty(); }
    std::span<const double> grad() const noexcept { return node_->grad; }
    /// Gradient storage, zero-filled on first access.
    std::span<double> grad_buffer() const;
    void zero_grad();
    void clear_grad() noexcept;

    /// Deep copy of the values; the copy has no gradient and no history.
    Tensor detach() const;
    bool same_storage(const Tensor& other) const noexcept { return node_ == other.node_; }

private:
    struct Node {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Node> node_;
};

/// Ordered list of backward closures for one forward pass.
class Tape {
public:
    using Backward = std::function<void()>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    ~Tape();

    void record(Backward backward);
    /// Seeds d(loss)/d(loss) = 1, runs every closure newest-first, then frees
    /// the recorded graph. Throws ContractError unless loss is a scalar.
    void backward(const Tensor& loss);
    void clear() noexcept;
    std::size_t size() const noexcept { return entries_.size(); }

    static Tape* active() noexcept;

private:
    friend class TapeScope;
    friend class NoGradScope;
    std::vector<Backward> entries_;
};

/// Makes a tape the active one for the current thread.
class TapeScope {
public:
    explicit TapeScope(Tape& tape) noexcept;
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;
    ~TapeScope();

private:
    Tape* previous_;
};

/// Suspends recording on the current thread.
class NoGradScope {
public:
    NoGradScope() noexcept;
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;
    ~NoGradScope();

private:
    Tape* previous_;
};

/// Runs the backward pass of the active tape from a scalar loss.
void reverse_pass(const Tensor& loss);

/// Extension point for primitives: attaches `backward` to `result` on the
/// active tape when any input requires a gradient. `backward` receives the
/// gradient flowing into `result` and must accumulate into its inputs.
Tensor record_op(Tensor result, std::initializer_list<Tensor> inputs,
                 std::function<void(std::span<const double>)> backward);
Tensor record_op(Tensor result, std::span<const Tensor> inputs,
                 std::function<void(std::span<const double>)> backward);

}  // namespace wmt
