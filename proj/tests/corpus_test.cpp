#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sipt/corpus.hpp"

using namespace sipt;

TEST(TopicModel, RowsAreDistributions) {
    auto m = generate_topic_model(5, 40, 0.3, 7);
    ASSERT_EQ(m.topic_token_dists.size(), 5u);
    for (const auto& row : m.topic_token_dists) {
        ASSERT_EQ(row.size(), 40u);
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-9);
        for (double p : row) EXPECT_GE(p, 0.0);
    }
}

TEST(TopicModel, SharpLimitIsNearlyOneHot) {
    int sharp_rows = 0, rows = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto m = generate_topic_model(3, 3, 1e-3, seed);
        for (const auto& row : m.topic_token_dists) {
            ++rows;
            sharp_rows += *std::max_element(row.begin(), row.end()) > 0.99;
        }
    }
    EXPECT_GE(sharp_rows, rows * 95 / 100);
}

TEST(TopicModel, Deterministic) {
    auto a = generate_topic_model(4, 20, 0.5, 3);
    auto b = generate_topic_model(4, 20, 0.5, 3);
    EXPECT_EQ(a.topic_token_dists, b.topic_token_dists);
}

TEST(TopicModel, RejectsBadDimensions) {
    EXPECT_THROW(generate_topic_model(2, 10, 0.5, 0), Error);
    EXPECT_THROW(generate_topic_model(5, 4, 0.5, 0), Error);
    try {
        generate_topic_model(2, 10, 0.5, 0);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidDimension);
    }
}

TEST(SampleCorpus, ShapesAndSimplex) {
    auto m = generate_topic_model(6, 30, 0.2, 1);
    auto c = sample_corpus(m, 200, 9, 2);
    ASSERT_EQ(c.size(), 200u);
    for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(c[i].id, i);
        EXPECT_EQ(c[i].tokens.size(), 9u);
        EXPECT_NEAR(std::accumulate(c[i].theta.begin(), c[i].theta.end(), 0.0), 1.0, 1e-9);
        EXPECT_EQ(c[i].topic_label, argmax_index(c[i].theta));
        for (int t : c[i].tokens) {
            EXPECT_GE(t, 0);
            EXPECT_LT(t, 30);
        }
    }
}

TEST(SampleCorpus, SingleSample) {
    auto c = sample_corpus(generate_topic_model(3, 5, 1.0, 0), 1, 4, 0);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].id, 0);
}

TEST(SampleCorpus, SharpTopicsConcentrateTokens) {
    // disjoint supports: topic k emits only tokens {2k, 2k+1}
    TopicModel m;
    m.num_topics = 3;
    m.vocab_size = 6;
    m.mixture_concentration = 1e-3;
    m.topic_token_dists = {{0.5, 0.5, 0, 0, 0, 0}, {0, 0, 0.5, 0.5, 0, 0}, {0, 0, 0, 0, 0.5, 0.5}};
    auto c = sample_corpus(m, 1000, 10, 5);
    int pure = 0;
    for (const auto& s : c) {
        bool ok = true;
        for (int t : s.tokens) ok = ok && t / 2 == s.topic_label;
        pure += ok;
    }
    EXPECT_GE(pure, 950);
}

TEST(SampleCorpus, Deterministic) {
    auto m = generate_topic_model(4, 12, 0.5, 9);
    auto a = sample_corpus(m, 50, 6, 4);
    auto b = sample_corpus(m, 50, 6, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].tokens, b[i].tokens);
        EXPECT_EQ(a[i].theta, b[i].theta);
    }
}

TEST(Top3, Renormalizes) {
    auto s = top3_simplex_coords(std::vector<double>{0.5, 0.3, 0.15, 0.05});
    EXPECT_EQ(s.topics, (std::array<int, 3>{0, 1, 2}));
    EXPECT_NEAR(s.coords[0], 0.5 / 0.95, 1e-12);
    EXPECT_NEAR(s.coords[1], 0.3 / 0.95, 1e-12);
    EXPECT_NEAR(s.coords[2], 0.15 / 0.95, 1e-12);
}

TEST(Top3, UniformAndTies) {
    auto s = top3_simplex_coords(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
    EXPECT_EQ(s.topics, (std::array<int, 3>{0, 1, 2}));
    for (double c : s.coords) EXPECT_NEAR(c, 1.0 / 3, 1e-12);
    auto t = top3_simplex_coords(std::vector<double>{0.1, 0.3, 0.3, 0.3});
    EXPECT_EQ(t.topics, (std::array<int, 3>{1, 2, 3}));
}

TEST(Top3, Degenerate) {
    try {
        top3_simplex_coords(std::vector<double>{0.9, 0.1, 0.0, 0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateMixture);
    }
}

TEST(Top3, OpenSimplexOnCorpus) {
    auto c = sample_corpus(generate_topic_model(8, 16, 0.5, 1), 300, 4, 1);
    for (const auto& s : c) {
        auto t = top3_simplex_coords(s);
        double sum = 0;
        for (double x : t.coords) {
            EXPECT_GT(x, 0.0);
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(EntropyBin, Examples) {
    EXPECT_EQ(entropy_bin_of_coords({1.0 / 3, 1.0 / 3, 1.0 / 3}, 10), 9);
    EXPECT_EQ(entropy_bin_of_coords({1 - 2e-6, 1e-6, 1e-6}, 10), 0);
    const double h = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
    EXPECT_NEAR(h, 1.0297, 1e-4);
    EXPECT_EQ(entropy_bin_of_coords({0.5, 0.3, 0.2}, 4), static_cast<int>(h / std::log(3.0) * 4));
    EXPECT_EQ(entropy_bin_of_coords({0.5, 0.3, 0.2}, 4), 3);
}
