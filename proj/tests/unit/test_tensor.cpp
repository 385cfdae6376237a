#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "wmt/adam.hpp"
#include "wmt/error.hpp"
#include "wmt/grad_check.hpp"
#include "wmt/ops.hpp"
#include "wmt/rng.hpp"
#include "wmt/tensor.hpp"

using namespace wmt;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool grad = true) {
    std::vector<double> v(shape_size(shape));
    for (double& x : v) {
        x = 2.0 * uniform_unit(rng) - 1.0;
    }
    return Tensor(std::move(shape), std::move(v), grad);
}

void expect_values(const Tensor& t, std::initializer_list<double> expected, double tol = 1e-12) {
    ASSERT_EQ(t.size(), expected.size());
    std::size_t i = 0;
    for (double e : expected) {
        EXPECT_NEAR(t.values()[i], e, tol) << "index " << i;
        ++i;
    }
}

}  // namespace

TEST(Tensor, ShapeAndStorageAgree) {
    Tensor t({2, 3});
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(Matmul, IdentityZeroAndHandCases) {
    const Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
    const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
    expect_values(matmul(id, m), {1, 2, 3, 4});
    expect_values(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})), {11});
    expect_values(matmul(Tensor::matrix({{0, 0}, {0, 0}}), m), {0, 0, 0, 0});
}

TEST(Matmul, InnerDimensionMismatchThrows) {
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST(Softmax, UniformShiftAndDirectFormula) {
    expect_values(softmax(Tensor::matrix({{0, 0, 0}}), 1), {1.0 / 3, 1.0 / 3, 1.0 / 3});
    for (double c : {-50.0, 0.0, 3.5, 700.0}) {
        expect_values(softmax(Tensor::matrix({{c, c + std::log(2.0)}}), 1), {1.0 / 3, 2.0 / 3},
                      1e-12);
    }
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    expect_values(softmax(Tensor::matrix({{1, 2, 3}}), 1),
                  {std::exp(1.0) / z, std::exp(2.0) / z, std::exp(3.0) / z});
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor({4, 7}, rng, false);
        for (double& v : x.mutable_values()) {
            v *= 30.0;
        }
        const Tensor s = softmax(x, 1);
        Tensor shifted = x.detach();
        for (double& v : shifted.mutable_values()) {
            v += 12.25;
        }
        const Tensor s2 = softmax(shifted, 1);
        for (std::size_t r = 0; r < 4; ++r) {
            double total = 0.0;
            for (std::size_t c = 0; c < 7; ++c) {
                EXPECT_GE(s.at(r, c), 0.0);
                EXPECT_NEAR(s.at(r, c), s2.at(r, c), 1e-9);
                total += s.at(r, c);
            }
            EXPECT_NEAR(total, 1.0, 1e-9);
        }
    }
}

TEST(Softmax, ColumnAxis) {
    const Tensor s = softmax(Tensor::matrix({{0, 1}, {0, 1}}), 0);
    expect_values(s, {0.5, 0.5, 0.5, 0.5});
}

TEST(LayerNorm, HandCases) {
    const Tensor ones = Tensor::vector({1, 1});
    const Tensor zeros = Tensor::vector({0, 0});
    expect_values(layer_norm(Tensor::matrix({{5, 5}}), ones, zeros), {0, 0});
    expect_values(layer_norm(Tensor::matrix({{1, 3}}), ones, zeros, 1e-12), {-1, 1}, 1e-9);
    const Tensor beta = Tensor::vector({0.25, -2});
    expect_values(layer_norm(Tensor::matrix({{7, -3}}), zeros, beta), {0.25, -2});
}

TEST(LayerNorm, MomentsOfNormalizedRows) {
    Rng rng(5);
    const std::size_t width = 9;
    const Tensor gamma(Shape{width}, std::vector<double>(width, 1.0));
    const Tensor beta(Shape{width}, std::vector<double>(width, 0.0));
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor y = layer_norm(random_tensor({3, width}, rng, false), gamma, beta, 1e-5);
        for (std::size_t r = 0; r < 3; ++r) {
            double m = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
                m += y.at(r, c);
            }
            m /= static_cast<double>(width);
            double var = 0.0;
            for (std::size_t c = 0; c < width; ++c) {
                var += (y.at(r, c) - m) * (y.at(r, c) - m);
            }
            var /= static_cast<double>(width);
            EXPECT_LT(std::abs(m), 1e-7);
            EXPECT_NEAR(var, 1.0, 1e-3);
        }
    }
}

TEST(LayerNorm, ZeroWidthThrows) {
    EXPECT_THROW(layer_norm(Tensor({2, 0}), Tensor(Shape{0}), Tensor(Shape{0})), DimensionError);
}

TEST(ReversePass, SumAndSquare) {
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor x = Tensor::matrix({{1, -2, 3}}, true);
        reverse_pass(sum(x));
        expect_values(Tensor({1, 3}, {x.grad().begin(), x.grad().end()}), {1, 1, 1});
    }
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor x = Tensor::matrix({{1, -2, 3}}, true);
        reverse_pass(sum(mul(x, x)));
        expect_values(Tensor({1, 3}, {x.grad().begin(), x.grad().end()}), {2, -4, 6});
    }
}

TEST(ReversePass, NonScalarIsContractError) {
    Tape tape;
    TapeScope scope(tape);
    Tensor x = Tensor::matrix({{1, 2}}, true);
    EXPECT_THROW(reverse_pass(scale(x, 2.0)), ContractError);
}

TEST(ReversePass, NoTapeRecordsNothing) {
    Tape tape;
    {
        TapeScope scope(tape);
        NoGradScope no_grad;
        Tensor x = Tensor::matrix({{1, 2}}, true);
        (void)sum(mul(x, x));
    }
    EXPECT_EQ(tape.size(), 0u);
}

TEST(NumericGuard, NonFiniteForwardThrows) {
    const Tensor big = Tensor::matrix({{1e200}});
    EXPECT_THROW(matmul(big, big), NumericError);
}

// Every primitive against central differences, inputs in [-1, 1].
TEST(GradCheck, EveryPrimitive) {
    Rng rng(2024);
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({4, 2}, rng);
    const Tensor c = random_tensor({3, 4}, rng);
    const Tensor row = random_tensor({4}, rng);
    const Tensor gamma = random_tensor({4}, rng);
    const Tensor beta = random_tensor({4}, rng);
    const Tensor table = random_tensor({5, 4}, rng);
    const Tensor weights = random_tensor({4, 4}, rng, false);
    const std::vector<std::int32_t> ids = {4, 0, 4, 2};
    const std::vector<std::size_t> rows = {0, 2, 1};
    const std::vector<std::size_t> cols = {3, 0, 1};

    const std::vector<std::pair<std::string, std::function<Tensor()>>> cases = {
        {"matmul", [&] { return sum(tanh(matmul(a, b))); }},
        {"transpose", [&] { return sum(mul(transpose(a), transpose(c))); }},
        {"add_sub_mul", [&] { return sum(mul(add(a, c), sub(a, c))); }},
        {"scale", [&] { return sum(tanh(scale(a, -1.7))); }},
        {"add_row_vector", [&] { return sum(tanh(add_row_vector(a, row))); }},
        {"relu", [&] { return sum(mul(relu(a), c)); }},
        {"softmax_rows", [&] { return sum(mul(softmax(a, 1), c)); }},
        {"softmax_cols", [&] { return sum(mul(softmax(a, 0), c)); }},
        {"log_softmax", [&] { return sum(mul(log_softmax(a, 1), c)); }},
        {"layer_norm", [&] { return sum(mul(layer_norm(a, gamma, beta), c)); }},
        {"mean", [&] { return mean(mul(a, a)); }},
        {"gather_rows", [&] { return sum(mul(gather_rows(table, ids), weights)); }},
        {"slice_concat",
         [&] {
             const std::vector<Tensor> parts = {slice_cols(a, 2, 4), slice_cols(a, 0, 2)};
             return sum(mul(concat_cols(parts), c));
         }},
        {"select_entries", [&] { return sum(tanh(select_entries(a, rows, cols))); }},
    };
    for (const auto& [name, f] : cases) {
        const GradCheckReport r = grad_check(f, {a, b, c, row, gamma, beta, table});
        EXPECT_TRUE(r.passed) << name << " max rel " << r.max_relative_error;
        EXPECT_LT(r.max_relative_error, 1e-4) << name;
    }
}

TEST(GradCheck, QuadraticFormIsNearExact) {
    Rng rng(3);
    const Tensor x = random_tensor({1, 5}, rng);
    const Tensor q = random_tensor({5, 5}, rng, false);
    const auto r = grad_check([&] { return sum(mul(matmul(x, q), x)); }, {x});
    EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheck, ThreeLayerMlp) {
    Rng rng(17);
    const Tensor x = random_tensor({6, 4}, rng, false);
    const Tensor w1 = random_tensor({4, 8}, rng);
    const Tensor b1 = random_tensor({8}, rng);
    const Tensor w2 = random_tensor({8, 8}, rng);
    const Tensor b2 = random_tensor({8}, rng);
    const Tensor w3 = random_tensor({8, 3}, rng);
    const auto loss = [&] {
        const Tensor h1 = tanh(add_row_vector(matmul(x, w1), b1));
        const Tensor h2 = tanh(add_row_vector(matmul(h1, w2), b2));
        return mean(log_softmax(matmul(h2, w3), 1));
    };
    const auto r = grad_check(loss, {w1, b1, w2, b2, w3});
    EXPECT_TRUE(r.passed);
    EXPECT_LT(r.max_relative_error, 1e-4);
}

// Harness self-check: a wrong backward rule must be caught.
TEST(GradCheck, CorruptedRuleIsDetected) {
    Rng rng(9);
    const Tensor x = random_tensor({1, 4}, rng);
    const auto broken_square = [](const Tensor& in) {
        std::vector<double> v(in.values().begin(), in.values().end());
        for (double& e : v) {
            e *= e;
        }
        Tensor out(in.shape(), std::move(v));
        Tensor src = in;
        return record_op(out, {in}, [src](std::span<const double> g) {
            auto gb = src.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] += 3.0 * src.values()[i] * g[i];  // should be 2x
            }
        });
    };
    const auto r = grad_check([&] { return sum(broken_square(x)); }, {x});
    EXPECT_FALSE(r.passed);
    EXPECT_GT(r.max_relative_error, 0.1);
}

TEST(GradCheck, NonFiniteLossThrows) {
    const Tensor x = Tensor::matrix({{1.0}}, true);
    EXPECT_THROW(
        grad_check([&] { return Tensor::scalar(std::numeric_limits<double>::quiet_NaN()); }, {x}),
        NumericError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    std::vector<double> p = {1.0, -2.0};
    const std::vector<double> g = {0.0, 0.0};
    AdamState s;
    adam_step(p, g, s);
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], -2.0);
    EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    std::vector<double> p = {0.5};
    const std::vector<double> g = {1.0};
    AdamState s;
    s.learning_rate = 0.01;
    adam_step(p, g, s);
    // m_hat = 1, v_hat = 1, so the step is lr * 1 / (1 + eps).
    EXPECT_NEAR(p[0], 0.5 - 0.01 / (1.0 + s.epsilon), 1e-15);
}

TEST(Adam, DeterministicAndStepCounting) {
    std::vector<double> p1 = {0.3, 0.1, -0.7};
    std::vector<double> p2 = p1;
    const std::vector<double> g = {0.2, -1.5, 0.01};
    AdamState s1;
    AdamState s2;
    for (int i = 0; i < 5; ++i) {
        adam_step(p1, g, s1);
        adam_step(p2, g, s2);
        EXPECT_EQ(s1.step, static_cast<std::uint64_t>(i + 1));
    }
    EXPECT_EQ(p1, p2);
    EXPECT_EQ(s1.first_moment.size(), p1.size());
    EXPECT_EQ(s1.second_moment.size(), p1.size());
}

TEST(Adam, MissingGradientIsContractError) {
    Tensor t = Tensor::matrix({{1.0}}, true);
    AdamState s;
    EXPECT_THROW(adam_step(t, s), ContractError);
}

TEST(Dropout, IdentityAtZeroAndSeeded) {
    Rng rng(1);
    const Tensor x = random_tensor({4, 4}, rng, false);
    std::mt19937_64 r0(5);
    const Tensor same = dropout(x, 0.0, r0);
    EXPECT_TRUE(std::equal(same.values().begin(), same.values().end(), x.values().begin()));
    std::mt19937_64 r1(7);
    std::mt19937_64 r2(7);
    const Tensor d1 = dropout(x, 0.5, r1);
    const Tensor d2 = dropout(x, 0.5, r2);
    EXPECT_TRUE(std::equal(d1.values().begin(), d1.values().end(), d2.values().begin()));
}
