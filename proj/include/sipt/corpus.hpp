#pragma once

// Synthetic topic-model corpus with exact per-sample topic mixtures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "sipt/error.hpp"
#include "sipt/rng.hpp"

namespace sipt {

inline constexpr double kDefaultMixtureConcentration = 0.5;

struct TopicModel {
    int num_topics = 0;
    int vocab_size = 0;
    std::vector<std::vector<double>> topic_token_dists;  // K rows of length V
    double mixture_concentration = kDefaultMixtureConcentration;
};

struct Sample {
    int id = 0;
    std::vector<int> tokens;
    std::vector<double> theta;
    int topic_label = 0;
};

using Corpus = std::vector<Sample>;

/// Index of the largest entry; ties go to the smallest index.
inline int argmax_index(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

inline TopicModel generate_topic_model(int num_topics, int vocab_size, double topic_sharpness,
                                       std::uint64_t seed,
                                       double mixture_concentration = kDefaultMixtureConcentration) {
    require(num_topics >= 3, ErrorKind::InvalidDimension, "need at least 3 topics");
    require(vocab_size >= num_topics, ErrorKind::InvalidDimension, "vocabulary smaller than topic count");
    require(topic_sharpness > 0.0 && mixture_concentration > 0.0, ErrorKind::InvalidArgument,
            "Dirichlet parameters must be positive");
    Rng rng = make_rng(seed, 1);
    TopicModel model;
    model.num_topics = num_topics;
    model.vocab_size = vocab_size;
    model.mixture_concentration = mixture_concentration;
    model.topic_token_dists.reserve(num_topics);
    for (int k = 0; k < num_topics; ++k) {
        model.topic_token_dists.push_back(dirichlet(rng, vocab_size, topic_sharpness));
    }
    return model;
}

/// Draws N samples: theta ~ Dir(concentration), then each token picks a topic from theta
/// and a token from that topic's distribution.
inline Corpus sample_corpus(const TopicModel& model, int n, int seq_len, std::uint64_t seed) {
    require(n >= 1, ErrorKind::InvalidArgument, "corpus size must be positive");
    require(seq_len >= 2, ErrorKind::InvalidArgument, "sequence length must be at least 2");
    Rng rng = make_rng(seed, 2);
    std::vector<std::discrete_distribution<int>> token_dists;
    token_dists.reserve(model.num_topics);
    for (const auto& row : model.topic_token_dists) {
        token_dists.emplace_back(row.begin(), row.end());
    }
    Corpus corpus;
    corpus.reserve(n);
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.id = i;
        s.theta = dirichlet(rng, model.num_topics, model.mixture_concentration);
        s.topic_label = argmax_index(s.theta);
        std::discrete_distribution<int> topic_pick(s.theta.begin(), s.theta.end());
        s.tokens.resize(seq_len);
        for (auto& tok : s.tokens) {
            int z = topic_pick(rng);
            tok = token_dists[z](rng);
        }
        corpus.push_back(std::move(s));
    }
    return corpus;
}

struct SimplexCoords {
    std::array<int, 3> topics{};
    std::array<double, 3> coords{};
};

inline SimplexCoords top3_simplex_coords(const std::vector<double>& theta) {
    std::vector<int> order(theta.size());
    for (int i = 0; i < static_cast<int>(order.size()); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] > theta[b]; });
    require(order.size() >= 3 && theta[order[2]] > 0.0, ErrorKind::DegenerateMixture,
            "fewer than 3 positive topic probabilities");
    SimplexCoords out;
    double total = theta[order[0]] + theta[order[1]] + theta[order[2]];
    for (int i = 0; i < 3; ++i) {
        out.topics[i] = order[i];
        out.coords[i] = theta[order[i]] / total;
    }
    return out;
}

inline SimplexCoords top3_simplex_coords(const Sample& s) { return top3_simplex_coords(s.theta); }

/// Bin of the natural-log entropy of barycentric coordinates, linear over [0, ln 3].
inline int entropy_bin_of_coords(const std::array<double, 3>& coords, int n_bins) {
    require(n_bins >= 1, ErrorKind::InvalidArgument, "need at least one entropy bin");
    double h = 0.0;
    for (double c : coords) {
        if (c > 0.0) {
            h -= c * std::log(c);
        }
    }
    double frac = h / std::log(3.0);
    int bin = static_cast<int>(std::floor(frac * n_bins));
    return std::clamp(bin, 0, n_bins - 1);
}

inline int entropy_bin(const Sample& s, int n_bins) {
    return entropy_bin_of_coords(top3_simplex_coords(s).coords, n_bins);
}

}  // namespace sipt
