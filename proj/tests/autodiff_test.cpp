#include <gtest/gtest.h>

#include <cmath>

#include "finite_difference.hpp"
#include "sipt/rng.hpp"

using namespace sipt;
using namespace sipt::ad;

namespace {

Tensor random_tensor(int r, int c, std::uint64_t seed, double sd = 1.0) {
    Rng rng = make_rng(seed, 77);
    Tensor t(r, c);
    for (auto& x : t.data) x = normal(rng, 0.0, sd);
    return t;
}

// reduce any matrix to a scalar with fixed, non-uniform weights so every entry matters
Var probe(Var x) {
    Tape& t = *x.tape;
    Tensor w(t.rows(x), t.cols(x));
    for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = std::sin(1.0 + 0.37 * i);
    Var wv = t.leaf(w);
    Var prod = matmul_bt(x, wv);
    return sum(gather_entries(prod, [&] {
        std::vector<std::pair<int, int>> diag;
        for (int i = 0; i < t.rows(x); ++i) diag.emplace_back(i, i);
        return diag;
    }()));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST(Tape, ValuesOfBasicOps) {
    Tape t;
    Tensor a(2, 2);
    a.data = {1, 2, 3, 4};
    Tensor b(2, 2);
    b.data = {5, 6, 7, 8};
    Var va = t.leaf(a), vb = t.leaf(b);
    EXPECT_EQ(t.value(matmul(va, vb)), (std::vector<double>{19, 22, 43, 50}));
    EXPECT_EQ(t.value(matmul_bt(va, vb)), (std::vector<double>{17, 23, 39, 53}));
    EXPECT_EQ(t.value(mean_rows(va)), (std::vector<double>{2, 3}));
    EXPECT_DOUBLE_EQ(t.scalar(mean(va)), 2.5);
    EXPECT_EQ(t.value(slice_cols(va, 1, 1)), (std::vector<double>{2, 4}));
    EXPECT_EQ(t.value(concat_rows({va, vb})).size(), 8u);
    EXPECT_NEAR(t.value(gelu(t.constant(1, 1, 1.0)))[0], 0.8413447460685429, 1e-12);
    auto sm = t.value(softmax_rows(va));
    EXPECT_NEAR(sm[0] + sm[1], 1.0, 1e-15);
    EXPECT_NEAR(sm[1] / sm[0], std::exp(1.0), 1e-12);
}

TEST(Tape, LayerNormNormalizesRows) {
    Tape t;
    Var x = t.leaf(random_tensor(3, 6, 1, 4.0));
    Var ln = layer_norm(x, t.constant(1, 6, 1.0), t.constant(1, 6, 0.0));
    const auto& v = t.value(ln);
    for (int i = 0; i < 3; ++i) {
        double m = 0, s = 0;
        for (int j = 0; j < 6; ++j) m += v[i * 6 + j] / 6;
        for (int j = 0; j < 6; ++j) s += (v[i * 6 + j] - m) * (v[i * 6 + j] - m) / 6;
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(s, 1.0, 1e-5);
    }
}

TEST(Tape, CrossEntropyValue) {
    Tape t;
    Tensor l(2, 3);
    l.data = {0, 0, 0, 1, 2, 3};
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    EXPECT_NEAR(t.scalar(cross_entropy(t.leaf(l), {1, 0})), 0.5 * (std::log(3.0) + lse - 1.0), 1e-12);
}

TEST(Tape, Log1pSumExp) {
    Tape t;
    Tensor x(1, 2);
    x.data = {0.5, -1.0};
    EXPECT_NEAR(t.scalar(log1p_sum_exp(t.leaf(x))), std::log(1 + std::exp(0.5) + std::exp(-1.0)), 1e-12);
    Tensor big(1, 1);
    big.data = {800.0};
    EXPECT_NEAR(t.scalar(log1p_sum_exp(t.leaf(big))), 800.0, 1e-9);
    EXPECT_DOUBLE_EQ(t.scalar(log1p_sum_exp(t.leaf(Tensor(1, 0)))), 0.0);
}

TEST(Tape, UnusedLeafGetsZeroGradient) {
    Tape t;
    Var a = t.leaf(random_tensor(2, 2, 3), true);
    Var b = t.leaf(random_tensor(2, 2, 4), true);
    t.backward(sum(square(a)));
    for (double g : t.gradient_tensor(b).data) EXPECT_EQ(g, 0.0);
    auto ga = t.gradient_tensor(a);
    for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_NEAR(ga.data[i], 2 * t.value(a)[i], 1e-15);
}

TEST(Gradients, Matmuls) {
    EXPECT_LT(fd::check({random_tensor(3, 4, 1), random_tensor(4, 2, 2)},
                        [](Tape&, const std::vector<Var>& p) { return probe(matmul(p[0], p[1])); }),
              kTol);
    EXPECT_LT(fd::check({random_tensor(3, 4, 3), random_tensor(5, 4, 4)},
                        [](Tape&, const std::vector<Var>& p) { return probe(matmul_bt(p[0], p[1])); }),
              kTol);
    // same operand on both sides
    EXPECT_LT(fd::check({random_tensor(3, 4, 5)},
                        [](Tape&, const std::vector<Var>& p) { return probe(matmul_bt(p[0], p[0])); }),
              kTol);
}

TEST(Gradients, Elementwise) {
    auto x = random_tensor(3, 5, 6);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return probe(gelu(p[0])); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return probe(square(p[0])); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return probe(relu(p[0])); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return probe(affine(p[0], -1.5, 0.3)); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return probe(softmax_rows(p[0])); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return log1p_sum_exp(p[0]); }), kTol);
    EXPECT_LT(fd::check({x}, [](Tape&, const std::vector<Var>& p) { return mean(p[0]); }), kTol);
}

TEST(Gradients, Structural) {
    auto a = random_tensor(4, 3, 7), b = random_tensor(4, 3, 8), row = random_tensor(1, 3, 9);
    EXPECT_LT(fd::check({a, b}, [](Tape&, const std::vector<Var>& p) { return probe(add(p[0], p[1])); }), kTol);
    EXPECT_LT(fd::check({a, row}, [](Tape&, const std::vector<Var>& p) { return probe(add_row(p[0], p[1])); }), kTol);
    EXPECT_LT(fd::check({a}, [](Tape&, const std::vector<Var>& p) { return probe(gather_rows(p[0], {3, 0, 3, 1})); }),
              kTol);
    EXPECT_LT(fd::check({a}, [](Tape&, const std::vector<Var>& p) { return probe(slice_rows(p[0], 1, 2)); }), kTol);
    EXPECT_LT(fd::check({a}, [](Tape&, const std::vector<Var>& p) { return probe(slice_cols(p[0], 1, 2)); }), kTol);
    EXPECT_LT(fd::check({a, b},
                        [](Tape&, const std::vector<Var>& p) { return probe(concat_cols({p[0], p[1], p[0]})); }),
              kTol);
    EXPECT_LT(fd::check({a, b}, [](Tape&, const std::vector<Var>& p) { return probe(concat_rows({p[1], p[0]})); }),
              kTol);
    EXPECT_LT(fd::check({a}, [](Tape&, const std::vector<Var>& p) { return probe(mean_rows(p[0])); }), kTol);
    EXPECT_LT(fd::check({a}, [](Tape&, const std::vector<Var>& p) { return probe(gather_entries(p[0], {{0, 1}, {3, 2}, {0, 1}})); }),
              kTol);
}

TEST(Gradients, LayerNormAndLosses) {
    auto x = random_tensor(3, 6, 10, 2.0), g = random_tensor(1, 6, 11), b = random_tensor(1, 6, 12);
    EXPECT_LT(fd::check({x, g, b}, [](Tape&, const std::vector<Var>& p) { return probe(layer_norm(p[0], p[1], p[2])); }),
              kTol);
    EXPECT_LT(fd::check({random_tensor(4, 5, 13)},
                        [](Tape&, const std::vector<Var>& p) { return cross_entropy(p[0], {0, 4, 2, 2}); }),
              kTol);
    EXPECT_LT(fd::check({random_tensor(5, 3, 14)},
                        [](Tape&, const std::vector<Var>& p) { return probe(pair_distances(p[0], {{0, 1}, {2, 4}, {1, 3}})); }),
              kTol);
}

TEST(Gradients, WeightedSumOfScalars) {
    auto a = random_tensor(2, 2, 15), b = random_tensor(2, 2, 16);
    EXPECT_LT(fd::check({a, b},
                        [](Tape&, const std::vector<Var>& p) {
                            return weighted_sum({sum(square(p[0])), mean(p[1]), sum(p[0])}, {0.9, 0.1, -2.0});
                        }),
              kTol);
}

TEST(Gradients, PairDistanceAtZeroIsZero) {
    Tape t;
    Var z = t.leaf(Tensor(2, 3, 1.0), true);
    t.backward(sum(pair_distances(z, {{0, 1}})));
    for (double g : t.gradient_tensor(z).data) EXPECT_EQ(g, 0.0);
}
