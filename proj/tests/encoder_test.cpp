#include <gtest/gtest.h>

#include <cmath>

#include "finite_difference.hpp"
#include "sipt/encoder.hpp"
#include "sipt/losses.hpp"

using namespace sipt;

namespace {

EncoderConfig small_config() {
    EncoderConfig c = EncoderConfig::reference(30, 8);
    return c;
}

std::size_t closed_form_count(const EncoderConfig& c) {
    const std::size_t V = c.vocab_size, d = c.embed_dim, S = c.max_seq_len, F = c.ff_dim, L = c.num_layers;
    const std::size_t per_layer = 4 * d + 4 * d * d + 4 * d + 2 * d * F + F + d;
    return V * d + S * d + L * per_layer + 2 * d + d * V + V;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_pipeline(const EncoderConfig& c) {
    auto p = init_parameters(c, 7);
    // larger weights so the check is not dominated by the near-linear regime
    Rng rng = make_rng(1, 1);
    for (auto& t : p.tensors)
        for (auto& v : t.data) v += normal(rng, 0.0, 0.3);

    std::vector<std::vector<int>> seqs{{0, 1, 2, 3}, {4, 5, 1}, {2, 2, 0, 5}, {3, 1}};
    std::vector<std::vector<int>> masks{{1}, {0, 2}, {3}, {}};
    SIBatch batch;
    batch.members = {0, 1, 2, 3};
    batch.anchors = {0, 1, 2, 3};
    batch.positive_pairs = {{0, 1}, {2, 3}};
    batch.negative_pairs = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};
    batch.edge_pairs = batch.positive_pairs;
    batch.non_edge_pairs = batch.negative_pairs;

    auto closure = [&](ad::Tape&, const std::vector<ad::Var>& vars) {
        std::vector<MaskedRows> parts;
        std::vector<ad::Var> pooled;
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            auto masked = apply_mask(c, seqs[s], masks[s]);
            auto sv = forward(c, vars, masked);
            if (!masks[s].empty()) parts.push_back(masked_rows(sv, seqs[s], masks[s]));
            pooled.push_back(sv.per_sample);
        }
        ad::Var lm = masked_imputation_loss(c, vars, parts);
        ad::Var lsi = multi_similarity_loss(ad::concat_rows(pooled), batch, MultiSimilarityParams{});
        return combined_loss(lm, lsi, LossWeights{});
    };
    EXPECT_LT(fd::check(p.tensors, closure), 1e-4);
}

}  // namespace

TEST(EncoderConfig, ReservedTokensAndValidation) {
    auto c = small_config();
    EXPECT_EQ(c.vocab_size, 32);
    EXPECT_EQ(c.mask_token(), 30);
    EXPECT_EQ(c.cls_token(), 31);
    EXPECT_EQ(c.max_seq_len, 9);
    c.num_heads = 3;
    EXPECT_THROW(c.validate(), Error);
    EXPECT_EQ(pooling_from_string("mean"), Pooling::Mean);
    EXPECT_THROW(pooling_from_string("max"), Error);
}

TEST(EncoderParams, CountMatchesClosedForm) {
    auto c = small_config();
    auto p = init_parameters(c, 0);
    EXPECT_EQ(p.count(), closed_form_count(c));
    // V=32, d=10, S=9, F=40, 2 layers
    EXPECT_EQ(p.count(), 320u + 90u + 2u * 1330u + 20u + 320u + 32u);
    auto big = EncoderConfig::large(30, 8);
    EXPECT_EQ(detail::parameter_shapes(big).size(), p.names.size() + 16u);
}

TEST(EncoderParams, InitIsSeededAndNormGainsAreOne) {
    auto c = small_config();
    auto a = init_parameters(c, 5), b = init_parameters(c, 5), other = init_parameters(c, 6);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, other);
    for (std::size_t i = 0; i < a.names.size(); ++i) {
        const auto& n = a.names[i];
        if (n.find("gain") != std::string::npos) {
            for (double v : a.tensors[i].data) EXPECT_EQ(v, 1.0);
        } else if (n.find("bias") != std::string::npos || n.find(".b") != std::string::npos) {
            for (double v : a.tensors[i].data) EXPECT_EQ(v, 0.0);
        }
    }
    double sq = 0;
    const auto& emb = a.tensors[EncoderParameters::kTokenEmbedding].data;
    for (double v : emb) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq / emb.size()), 0.02, 0.004);
}

TEST(Encode, ShapesAndDeterminism) {
    auto p = init_parameters(small_config(), 1);
    auto out = encode(p, {3, 4, 5});
    ASSERT_EQ(out.per_token.size(), 3u);
    for (const auto& row : out.per_token) EXPECT_EQ(row.size(), 10u);
    EXPECT_EQ(out.per_sample.size(), 10u);
    auto again = encode(p, {3, 4, 5});
    EXPECT_EQ(out.per_sample, again.per_sample);
    EXPECT_EQ(encode_samples(p, {{3, 4, 5}, {1}}).front(), out.per_sample);
}

TEST(Encode, PositionsMatter) {
    auto p = init_parameters(small_config(), 2);
    auto a = encode(p, {7, 7, 2});
    auto b = encode(p, {2, 7, 7});
    EXPECT_GT(max_abs_diff(a.per_sample, b.per_sample), 1e-6);
    // the first "7" sits at different positions
    EXPECT_GT(max_abs_diff(a.per_token[0], b.per_token[1]), 1e-6);
}

TEST(Encode, MeanPoolingAveragesTokens) {
    auto c = small_config();
    c.pooling = Pooling::Mean;
    auto out = encode(init_parameters(c, 3), {1, 2, 3, 4});
    for (int j = 0; j < 10; ++j) {
        double m = 0;
        for (const auto& row : out.per_token) m += row[j] / 4;
        EXPECT_NEAR(out.per_sample[j], m, 1e-14);
    }
}

TEST(Encode, FinalNormOutputs) {
    // with unit gains the final layer norm leaves every row with mean 0
    auto out = encode(init_parameters(small_config(), 4), {0, 9, 18, 27});
    for (const auto& row : out.per_token) {
        double m = 0;
        for (double v : row) m += v / row.size();
        EXPECT_NEAR(m, 0.0, 1e-12);
    }
}

TEST(Encode, RejectsBadInput) {
    auto p = init_parameters(small_config(), 1);
    try {
        encode(p, std::vector<int>(9, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SequenceTooLong);
    }
    try {
        encode(p, {1, 32});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownToken);
    }
    EXPECT_NO_THROW(encode(p, std::vector<int>(8, 1)));
}

TEST(EncoderGradient, ConstantLossGivesZeroGradients) {
    auto p = init_parameters(small_config(), 1);
    auto r = gradient(p, [](ad::Tape& t, const std::vector<ad::Var>&) { return t.constant(1, 1, 3.0); });
    EXPECT_DOUBLE_EQ(r.loss, 3.0);
    for (const auto& g : r.grads)
        for (double v : g.data) EXPECT_EQ(v, 0.0);
}

TEST(EncoderGradient, SumOfSquaresGivesTwiceParams) {
    auto p = init_parameters(small_config(), 1);
    auto r = gradient(p, [](ad::Tape&, const std::vector<ad::Var>& vars) {
        std::vector<ad::Var> parts;
        for (auto v : vars) parts.push_back(ad::sum(ad::square(v)));
        return ad::weighted_sum(parts, std::vector<double>(parts.size(), 1.0));
    });
    for (std::size_t i = 0; i < p.tensors.size(); ++i)
        for (std::size_t j = 0; j < p.tensors[i].size(); ++j) EXPECT_DOUBLE_EQ(r.grads[i].data[j], 2 * p.tensors[i].data[j]);
}

TEST(EncoderGradient, FullPipelineMatchesFiniteDifferences) {
    // reference width: two layers, d = 10, masked imputation plus a multi-similarity term
    check_pipeline(EncoderConfig::reference(6, 4));
}

TEST(EncoderGradient, MultiHeadMatchesFiniteDifferences) {
    EncoderConfig c = EncoderConfig::reference(6, 4);
    c.embed_dim = 4;
    c.num_heads = 2;
    c.ff_dim = 6;
    check_pipeline(c);
}

