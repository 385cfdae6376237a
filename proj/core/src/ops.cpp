#include "wmt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wmt/error.hpp"
#include "wmt/rng.hpp"

namespace wmt {

namespace {

void ensure_finite(std::span<const double> values, const char* op) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value produced by ") + op);
        }
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
}

void require_matrix(const Tensor& x, const char* op) {
    if (x.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " +
                             shape_string(x.shape()));
    }
}

struct AxisLayout {
    std::size_t outer = 1;
    std::size_t length = 1;
    std::size_t inner = 1;
};

AxisLayout axis_layout(const Shape& shape, std::size_t axis) {
    if (axis >= shape.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " invalid for shape " +
                             shape_string(shape));
    }
    AxisLayout layout;
    for (std::size_t i = 0; i < axis; ++i) {
        layout.outer *= shape[i];
    }
    layout.length = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        layout.inner *= shape[i];
    }
    return layout;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    if (b.rows() != k) {
        throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) +
                             " x " + shape_string(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            const double* brow = bv.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += aip * brow[j];
            }
        }
    }
    ensure_finite(out, "matmul");
    return record_op(Tensor({m, n}, std::move(out)), {a, b},
                     [a, b, m, k, n](std::span<const double> g) {
                         const auto av = a.values();
                         const auto bv = b.values();
                         if (a.requires_grad()) {
                             auto ga = a.grad_buffer();
                             for (std::size_t i = 0; i < m; ++i) {
                                 for (std::size_t p = 0; p < k; ++p) {
                                     double acc = 0.0;
                                     const double* grow = g.data() + i * n;
                                     const double* brow = bv.data() + p * n;
                                     for (std::size_t j = 0; j < n; ++j) {
                                         acc += grow[j] * brow[j];
                                     }
                                     ga[i * k + p] += acc;
                                 }
                             }
                         }
                         if (b.requires_grad()) {
                             auto gb = b.grad_buffer();
                             for (std::size_t i = 0; i < m; ++i) {
                                 const double* grow = g.data() + i * n;
                                 for (std::size_t p = 0; p < k; ++p) {
                                     const double aip = av[i * k + p];
                                     if (aip == 0.0) {
                                         continue;
                                     }
                                     double* gbrow = gb.data() + p * n;
                                     for (std::size_t j = 0; j < n; ++j) {
                                         gbrow[j] += aip * grow[j];
                                     }
                                 }
                             }
                         }
                     });
}

Tensor transpose(const Tensor& x) {
    require_matrix(x, "transpose");
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    std::vector<double> out(m * n);
    const auto xv = x.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = xv[i * n + j];
        }
    }
    return record_op(Tensor({n, m}, std::move(out)), {x}, [x, m, n](std::span<const double> g) {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                gx[i * n + j] += g[j * m + i];
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] + bv[i];
    }
    ensure_finite(out, "add");
    return record_op(Tensor(a.shape(), std::move(out)), {a, b}, [a, b](std::span<const double> g) {
        for (const Tensor* t : {&a, &b}) {
            if (t->requires_grad()) {
                auto gt = t->grad_buffer();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gt[i] += g[i];
                }
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] - bv[i];
    }
    ensure_finite(out, "sub");
    return record_op(Tensor(a.shape(), std::move(out)), {a, b}, [a, b](std::span<const double> g) {
        if (a.requires_grad()) {
            auto ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
            }
        }
        if (b.requires_grad()) {
            auto gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] -= g[i];
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = av[i] * bv[i];
    }
    ensure_finite(out, "mul");
    return record_op(Tensor(a.shape(), std::move(out)), {a, b}, [a, b](std::span<const double> g) {
        const auto av = a.values();
        const auto bv = b.values();
        if (a.requires_grad()) {
            auto ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv[i];
            }
        }
        if (b.requires_grad()) {
            auto gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] += g[i] * av[i];
            }
        }
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (double& v : out) {
        v *= factor;
    }
    ensure_finite(out, "scale");
    return record_op(Tensor(x.shape(), std::move(out)), {x},
                     [x, factor](std::span<const double> g) {
                         auto gx = x.grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             gx[i] += g[i] * factor;
                         }
                     });
}

Tensor add_row_vector(const Tensor& x, const Tensor& row) {
    require_matrix(x, "add_row_vector");
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    if (row.size() != n) {
        throw DimensionError("add_row_vector: row of size " + std::to_string(row.size()) +
                             " for matrix " + shape_string(x.shape()));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    const auto rv = row.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] += rv[j];
        }
    }
    ensure_finite(out, "add_row_vector");
    return record_op(Tensor(x.shape(), std::move(out)), {x, row},
                     [x, row, m, n](std::span<const double> g) {
                         if (x.requires_grad()) {
                             auto gx = x.grad_buffer();
                             for (std::size_t i = 0; i < g.size(); ++i) {
                                 gx[i] += g[i];
                             }
                         }
                         if (row.requires_grad()) {
                             auto gr = row.grad_buffer();
                             for (std::size_t i = 0; i < m; ++i) {
                                 for (std::size_t j = 0; j < n; ++j) {
                                     gr[j] += g[i * n + j];
                                 }
                             }
                         }
                     });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (double& v : out) {
        v = v > 0.0 ? v : 0.0;
    }
    ensure_finite(out, "relu");
    return record_op(Tensor(x.shape(), std::move(out)), {x}, [x](std::span<const double> g) {
        const auto xv = x.values();
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > 0.0) {
                gx[i] += g[i];
            }
        }
    });
}

Tensor tanh(const Tensor& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (double& v : out) {
        v = std::tanh(v);
    }
    Tensor result(x.shape(), std::move(out));
    return record_op(result, {x}, [x, y = result.values()](std::span<const double> g) {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * (1.0 - y[i] * y[i]);
        }
    });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    const AxisLayout L = axis_layout(x.shape(), axis);
    const auto xv = x.values();
    std::vector<double> out(x.size());
    for (std::size_t o = 0; o < L.outer; ++o) {
        for (std::size_t in = 0; in < L.inner; ++in) {
            const std::size_t base = o * L.length * L.inner + in;
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < L.length; ++a) {
                peak = std::max(peak, xv[base + a * L.inner]);
            }
            double total = 0.0;
            for (std::size_t a = 0; a < L.length; ++a) {
                const double e = std::exp(xv[base + a * L.inner] - peak);
                out[base + a * L.inner] = e;
                total += e;
            }
            for (std::size_t a = 0; a < L.length; ++a) {
                out[base + a * L.inner] /= total;
            }
        }
    }
    ensure_finite(out, "softmax");
    Tensor result(x.shape(), std::move(out));
    return record_op(result, {x}, [x, result, L](std::span<const double> g) {
        const auto y = result.values();
        auto gx = x.grad_buffer();
        for (std::size_t o = 0; o < L.outer; ++o) {
            for (std::size_t in = 0; in < L.inner; ++in) {
                const std::size_t base = o * L.length * L.inner + in;
                double dot = 0.0;
                for (std::size_t a = 0; a < L.length; ++a) {
                    const std::size_t idx = base + a * L.inner;
                    dot += g[idx] * y[idx];
                }
                for (std::size_t a = 0; a < L.length; ++a) {
                    const std::size_t idx = base + a * L.inner;
                    gx[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
    const AxisLayout L = axis_layout(x.shape(), axis);
    const auto xv = x.values();
    std::vector<double> out(x.size());
    for (std::size_t o = 0; o < L.outer; ++o) {
        for (std::size_t in = 0; in < L.inner; ++in) {
            const std::size_t base = o * L.length * L.inner + in;
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < L.length; ++a) {
                peak = std::max(peak, xv[base + a * L.inner]);
            }
            double total = 0.0;
            for (std::size_t a = 0; a < L.length; ++a) {
                total += std::exp(xv[base + a * L.inner] - peak);
            }
            const double log_norm = peak + std::log(total);
            for (std::size_t a = 0; a < L.length; ++a) {
                out[base + a * L.inner] = xv[base + a * L.inner] - log_norm;
            }
        }
    }
    ensure_finite(out, "log_softmax");
    Tensor result(x.shape(), std::move(out));
    return record_op(result, {x}, [x, result, L](std::span<const double> g) {
        const auto y = result.values();
        auto gx = x.grad_buffer();
        for (std::size_t o = 0; o < L.outer; ++o) {
            for (std::size_t in = 0; in < L.inner; ++in) {
                const std::size_t base = o * L.length * L.inner + in;
                double g_total = 0.0;
                for (std::size_t a = 0; a < L.length; ++a) {
                    g_total += g[base + a * L.inner];
                }
                for (std::size_t a = 0; a < L.length; ++a) {
                    const std::size_t idx = base + a * L.inner;
                    gx[idx] += g[idx] - std::exp(y[idx]) * g_total;
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    if (x.rank() == 0) {
        throw DimensionError("layer_norm: scalar input");
    }
    const std::size_t width = x.shape().back();
    if (width == 0) {
        throw DimensionError("layer_norm: zero-width axis");
    }
    if (gamma.size() != width || beta.size() != width) {
        throw DimensionError("layer_norm: gamma/beta width " + std::to_string(gamma.size()) + "/" +
                             std::to_string(beta.size()) + " for last axis " +
                             std::to_string(width));
    }
    const std::size_t n_rows = x.size() / width;
    const auto xv = x.values();
    const auto gv = gamma.values();
    const auto bv = beta.values();
    std::vector<double> out(x.size());
    std::vector<double> xhat(x.size());
    std::vector<double> inv_std(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* row = xv.data() + r * width;
        double mu = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            mu += row[j];
        }
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double d = row[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(width);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std[r] = inv;
        for (std::size_t j = 0; j < width; ++j) {
            const double h = (row[j] - mu) * inv;
            xhat[r * width + j] = h;
            out[r * width + j] = gv[j] * h + bv[j];
        }
    }
    ensure_finite(out, "layer_norm");
    return record_op(
        Tensor(x.shape(), std::move(out)), {x, gamma, beta},
        [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), width,
         n_rows](std::span<const double> g) {
            const auto gv = gamma.values();
            if (gamma.requires_grad() || beta.requires_grad()) {
                auto gg = gamma.requires_grad() ? gamma.grad_buffer() : std::span<double>{};
                auto gb = beta.requires_grad() ? beta.grad_buffer() : std::span<double>{};
                for (std::size_t r = 0; r < n_rows; ++r) {
                    for (std::size_t j = 0; j < width; ++j) {
                        const std::size_t idx = r * width + j;
                        if (!gg.empty()) {
                            gg[j] += g[idx] * xhat[idx];
                        }
                        if (!gb.empty()) {
                            gb[j] += g[idx];
                        }
                    }
                }
            }
            if (!x.requires_grad()) {
                return;
            }
            auto gx = x.grad_buffer();
            const double w = static_cast<double>(width);
            for (std::size_t r = 0; r < n_rows; ++r) {
                double sum_d = 0.0;
                double sum_dx = 0.0;
                for (std::size_t j = 0; j < width; ++j) {
                    const std::size_t idx = r * width + j;
                    const double d = g[idx] * gv[j];
                    sum_d += d;
                    sum_dx += d * xhat[idx];
                }
                for (std::size_t j = 0; j < width; ++j) {
                    const std::size_t idx = r * width + j;
                    const double d = g[idx] * gv[j];
                    gx[idx] += inv_std[r] / w * (w * d - sum_d - xhat[idx] * sum_dx);
                }
            }
        });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) {
        total += v;
    }
    ensure_finite(std::span<const double>(&total, 1), "sum");
    return record_op(Tensor::scalar(total), {x}, [x](std::span<const double> g) {
        auto gx = x.grad_buffer();
        for (double& v : gx) {
            v += g[0];
        }
    });
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) {
        throw DimensionError("mean of an empty tensor");
    }
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids) {
    require_matrix(table, "gather_rows");
    const std::size_t n_rows = table.rows();
    const std::size_t width = table.cols();
    std::vector<double> out(ids.size() * width);
    const auto tv = table.values();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= n_rows) {
            throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                                 " outside table of " + std::to_string(n_rows) + " rows");
        }
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * width, width,
                    out.data() + i * width);
    }
    return record_op(Tensor({ids.size(), width}, std::move(out)), {table},
                     [table, idx = std::vector<std::int32_t>(ids.begin(), ids.end()),
                      width](std::span<const double> g) {
                         auto gt = table.grad_buffer();
                         for (std::size_t i = 0; i < idx.size(); ++i) {
                             double* dst = gt.data() + static_cast<std::size_t>(idx[i]) * width;
                             const double* src = g.data() + i * width;
                             for (std::size_t j = 0; j < width; ++j) {
                                 dst[j] += src[j];
                             }
                         }
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    require_matrix(x, "slice_cols");
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    if (begin > end || end > n) {
        throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") outside " + std::to_string(n) + " columns");
    }
    const std::size_t w = end - begin;
    std::vector<double> out(m * w);
    const auto xv = x.values();
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(xv.data() + i * n + begin, w, out.data() + i * w);
    }
    return record_op(Tensor({m, w}, std::move(out)), {x},
                     [x, m, n, w, begin](std::span<const double> g) {
                         auto gx = x.grad_buffer();
                         for (std::size_t i = 0; i < m; ++i) {
                             for (std::size_t j = 0; j < w; ++j) {
                                 gx[i * n + begin + j] += g[i * w + j];
                             }
                         }
                     });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) {
        throw DimensionError("concat_cols: no inputs");
    }
    const std::size_t m = parts.front().rows();
    std::size_t n = 0;
    for (const Tensor& p : parts) {
        if (p.rows() != m) {
            throw DimensionError("concat_cols: row count mismatch");
        }
        n += p.cols();
    }
    std::vector<double> out(m * n);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        const std::size_t w = p.cols();
        const auto pv = p.values();
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(pv.data() + i * w, w, out.data() + i * n + offset);
        }
        offset += w;
    }
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return record_op(Tensor({m, n}, std::move(out)), std::span<const Tensor>(inputs),
                     [inputs, m, n](std::span<const double> g) {
                         std::size_t offset = 0;
                         for (const Tensor& p : inputs) {
                             const std::size_t w = p.cols();
                             if (p.requires_grad()) {
                                 auto gp = p.grad_buffer();
                                 for (std::size_t i = 0; i < m; ++i) {
                                     for (std::size_t j = 0; j < w; ++j) {
                                         gp[i * w + j] += g[i * n + offset + j];
                                     }
                                 }
                             }
                             offset += w;
                         }
                     });
}

Tensor select_entries(const Tensor& x, std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols) {
    require_matrix(x, "select_entries");
    if (rows.size() != cols.size()) {
        throw DimensionError("select_entries: rows/cols length mismatch");
    }
    const std::size_t n = x.cols();
    std::vector<std::size_t> flat(rows.size());
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= x.rows() || cols[i] >= n) {
            throw DimensionError("select_entries: index outside " + shape_string(x.shape()));
        }
        flat[i] = rows[i] * n + cols[i];
        out[i] = x.values()[flat[i]];
    }
    return record_op(Tensor({rows.size()}, std::move(out)), {x},
                     [x, flat = std::move(flat)](std::span<const double> g) {
                         auto gx = x.grad_buffer();
                         for (std::size_t i = 0; i < flat.size(); ++i) {
                             gx[flat[i]] += g[i];
                         }
                     });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) {
        return x;
    }
    if (rate >= 1.0) {
        throw ContractError("dropout rate must be < 1");
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.size());
    for (double& m : mask) {
        m = uniform_unit(rng) < rate ? 0.0 : keep_scale;
    }
    std::vector<double> out(x.size());
    const auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = xv[i] * mask[i];
    }
    return record_op(Tensor(x.shape(), std::move(out)), {x},
                     [x, mask = std::move(mask)](std::span<const double> g) {
                         auto gx = x.grad_buffer();
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             gx[i] += g[i] * mask[i];
                         }
                     });
}

}  // namespace wmt
