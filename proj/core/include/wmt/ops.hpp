#pragma once

// Differentiable primitives. Every forward result is checked for NaN/Inf and
// a NumericError is raised if one appears.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wmt/tensor.hpp"

namespace wmt {

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Adds a length-n vector to every row of an [m x n] matrix.
Tensor add_row_vector(const Tensor& x, const Tensor& row);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Numerically stable softmax along `axis` (max-subtracted).
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

/// Normalizes over the last axis, then applies gamma * xhat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Row lookup: out[i] = table[ids[i]].
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids);
/// Columns [begin, end) of a matrix.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
/// out[i] = x[rows[i], cols[i]], as a vector.
Tensor select_entries(const Tensor& x, std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols);

/// Inverted dropout with a mask drawn from `rng`; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

}  // namespace wmt
