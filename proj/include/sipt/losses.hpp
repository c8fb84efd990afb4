#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sipt/autodiff.hpp"
#include "sipt/encoder.hpp"
#include "sipt/error.hpp"
#include "sipt/graph.hpp"
#include "sipt/rng.hpp"

namespace sipt {

struct MultiSimilarityParams {
    double w_plus = 2.0;
    double w_minus = 40.0;
    double threshold = 0.5;
};

struct ContrastiveParams {
    double mu_plus = 0.1;
    double mu_minus = 1.0;
};

struct LossWeights {
    double lambda_si = 0.1;
};

enum class SILossKind { Contrastive, MultiSimilarity };
enum class NegativeStrategy { UniformNonNeighbor, SameComponent };

inline std::string to_string(SILossKind k) { return k == SILossKind::Contrastive ? "contrastive" : "multisim"; }

inline SILossKind si_loss_from_string(const std::string& s) {
    if (s == "contrastive") return SILossKind::Contrastive;
    if (s == "multisim") return SILossKind::MultiSimilarity;
    fail(ErrorKind::InvalidArgument, "unknown loss '" + s + "'");
}

inline std::string to_string(NegativeStrategy s) {
    return s == NegativeStrategy::UniformNonNeighbor ? "uniform-nonneighbor" : "same-component";
}

inline NegativeStrategy negative_strategy_from_string(const std::string& s) {
    if (s == "uniform-nonneighbor") return NegativeStrategy::UniformNonNeighbor;
    if (s == "same-component") return NegativeStrategy::SameComponent;
    fail(ErrorKind::InvalidArgument, "unknown negative strategy '" + s + "'");
}

struct SILossConfig {
    SILossKind kind = SILossKind::Contrastive;
    MultiSimilarityParams multisim;
    ContrastiveParams contrastive;
    NegativeStrategy negatives = NegativeStrategy::UniformNonNeighbor;
    double mask_fraction = 0.15;

    DistanceName recovery_distance() const {
        return kind == SILossKind::Contrastive ? DistanceName::Euclidean : DistanceName::NegativeInnerProduct;
    }
};

/// Batch over graph nodes. Pair entries index into `members`, which is also the row order of the
/// embedding matrix the losses consume.
struct SIBatch {
    std::vector<int> members;
    std::vector<int> anchors;
    std::vector<std::pair<int, int>> positive_pairs;  // (anchor, pos(anchor))
    std::vector<std::pair<int, int>> negative_pairs;  // (anchor, neg(anchor))
    std::vector<std::pair<int, int>> edge_pairs;      // all member pairs that are edges
    std::vector<std::pair<int, int>> non_edge_pairs;  // all member pairs that are not

    int num_anchors() const { return static_cast<int>(anchors.size()); }
};

// ----------------------------------------------------------------------------
// Masked imputation
// ----------------------------------------------------------------------------

/// Positions to mask: round(fraction * len) of them, at least one, chosen uniformly.
inline std::vector<int> sample_mask(Rng& rng, int length, double fraction) {
    int count = static_cast<int>(std::lround(fraction * length));
    count = std::clamp(count, 1, length);
    auto picked = sample_without_replacement(rng, static_cast<std::size_t>(length), static_cast<std::size_t>(count));
    std::vector<int> out(picked.begin(), picked.end());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<int> apply_mask(const EncoderConfig& c, std::vector<int> tokens, const std::vector<int>& positions) {
    for (int p : positions) tokens[p] = c.mask_token();
    return tokens;
}

/// Per-token outputs at masked positions and their true ids, for batching the head over many sequences.
struct MaskedRows {
    ad::Var rows;
    std::vector<int> targets;
};

inline MaskedRows masked_rows(const SequenceVars& sv, const std::vector<int>& tokens, const std::vector<int>& positions) {
    std::vector<int> targets;
    for (int p : positions) targets.push_back(tokens[p]);
    return {ad::gather_rows(sv.per_token, positions), targets};
}

inline ad::Var masked_imputation_loss(const EncoderConfig& c, const std::vector<ad::Var>& params,
                                      const std::vector<MaskedRows>& parts) {
    std::vector<ad::Var> rows;
    std::vector<int> targets;
    for (const auto& m : parts) {
        if (m.targets.empty()) continue;
        rows.push_back(m.rows);
        targets.insert(targets.end(), m.targets.begin(), m.targets.end());
    }
    require(!targets.empty(), ErrorKind::EmptyMask, "no masked positions");
    return ad::cross_entropy(output_logits(c, params, ad::concat_rows(rows)), targets);
}

/// Single-sequence masked imputation loss on the tape.
inline ad::Var masked_imputation_loss(const EncoderConfig& c, const std::vector<ad::Var>& params,
                                      const std::vector<int>& tokens, const std::vector<int>& mask_positions) {
    require(!mask_positions.empty(), ErrorKind::EmptyMask, "no masked positions");
    for (int p : mask_positions) {
        require(p >= 0 && p < static_cast<int>(tokens.size()), ErrorKind::InvalidArgument, "mask position out of range");
    }
    SequenceVars sv = forward(c, params, apply_mask(c, tokens, mask_positions));
    return masked_imputation_loss(c, params, {masked_rows(sv, tokens, mask_positions)});
}

inline double masked_imputation_loss(const EncoderParameters& p, const std::vector<int>& tokens,
                                     const std::vector<int>& mask_positions) {
    ad::Tape tape;
    auto vars = parameter_leaves(tape, p, false);
    return tape.scalar(masked_imputation_loss(p.config, vars, tokens, mask_positions));
}

// ----------------------------------------------------------------------------
// Structure-inducing losses over an embedding matrix z (rows = batch members)
// ----------------------------------------------------------------------------

inline ad::Var multi_similarity_loss(ad::Var z, const SIBatch& batch, const MultiSimilarityParams& p) {
    using namespace ad;
    const int n = std::max(batch.num_anchors(), 1);
    Var gram = matmul_bt(z, z);
    Var pos = affine(gather_entries(gram, batch.edge_pairs), -p.w_plus, p.w_plus * p.threshold);
    Var neg = affine(gather_entries(gram, batch.non_edge_pairs), p.w_minus, -p.w_minus * p.threshold);
    return weighted_sum({log1p_sum_exp(pos), log1p_sum_exp(neg)}, {1.0 / (n * p.w_plus), 1.0 / (n * p.w_minus)});
}

inline ad::Var contrastive_loss(ad::Var z, const SIBatch& batch, const ContrastiveParams& p) {
    using namespace ad;
    require(!batch.positive_pairs.empty() || !batch.negative_pairs.empty(), ErrorKind::MissingPair,
            "contrastive loss needs at least one positive or negative pair");
    const double n = std::max(batch.num_anchors(), 1);
    Var pos = sum(relu(affine(pair_distances(z, batch.positive_pairs), 1.0, -p.mu_plus)));
    Var neg = sum(relu(affine(pair_distances(z, batch.negative_pairs), -1.0, p.mu_minus)));
    return weighted_sum({pos, neg}, {1.0 / n, 1.0 / n});
}

inline ad::Var si_loss(ad::Var z, const SIBatch& batch, const SILossConfig& cfg) {
    return cfg.kind == SILossKind::Contrastive ? contrastive_loss(z, batch, cfg.contrastive)
                                               : multi_similarity_loss(z, batch, cfg.multisim);
}

namespace detail {

inline ad::Tensor member_matrix(const Embeddings& embeddings, const SIBatch& batch) {
    require(!batch.members.empty(), ErrorKind::InvalidArgument, "empty batch");
    const int d = static_cast<int>(embeddings.at(batch.members.front()).size());
    ad::Tensor t(static_cast<int>(batch.members.size()), d);
    for (std::size_t i = 0; i < batch.members.size(); ++i) {
        const auto& e = embeddings.at(batch.members[i]);
        require(static_cast<int>(e.size()) == d, ErrorKind::DimensionMismatch, "embedding dimensions differ");
        std::copy(e.begin(), e.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i) * d);
    }
    return t;
}

}  // namespace detail

/// Embeddings are indexed by graph node id.
inline double multi_similarity_loss(const Embeddings& embeddings, const SIBatch& batch, const MultiSimilarityParams& p) {
    ad::Tape tape;
    return tape.scalar(multi_similarity_loss(tape.leaf(detail::member_matrix(embeddings, batch)), batch, p));
}

inline double contrastive_loss(const Embeddings& embeddings, const SIBatch& batch, const ContrastiveParams& p) {
    ad::Tape tape;
    return tape.scalar(contrastive_loss(tape.leaf(detail::member_matrix(embeddings, batch)), batch, p));
}

inline double combined_loss(double l_m, double l_si, const LossWeights& w) {
    require(std::isfinite(l_m) && std::isfinite(l_si), ErrorKind::NonFiniteLoss, "combined loss inputs must be finite");
    require(w.lambda_si > 0.0 && w.lambda_si < 1.0, ErrorKind::InvalidArgument, "lambda_si must lie in (0, 1)");
    return (1.0 - w.lambda_si) * l_m + w.lambda_si * l_si;
}

inline ad::Var combined_loss(ad::Var l_m, ad::Var l_si, const LossWeights& w) {
    return ad::weighted_sum({l_m, l_si}, {1.0 - w.lambda_si, w.lambda_si});
}

// ----------------------------------------------------------------------------
// Batch sampling
// ----------------------------------------------------------------------------

/// Precomputed per-node admissibility, reused across many batch draws.
class SISampler {
public:
    SISampler(const Graph& g, NegativeStrategy strategy) : g_(g), strategy_(strategy) {
        component_ = connected_components(g);
        int nc = 0;
        for (int c : component_) nc = std::max(nc, c + 1);
        members_of_component_.resize(nc);
        for (int v = 0; v < g.num_nodes(); ++v) members_of_component_[component_[v]].push_back(v);
        for (int v = 0; v < g.num_nodes(); ++v) {
            const int pool = strategy == NegativeStrategy::UniformNonNeighbor
                                 ? g.num_nodes()
                                 : static_cast<int>(members_of_component_[component_[v]].size());
            if (g.degree(v) >= 1 && g.degree(v) < pool - 1) admissible_.push_back(v);
        }
    }

    const std::vector<int>& admissible_anchors() const { return admissible_; }

    SIBatch sample(int anchor_count, Rng& rng) const {
        require(!admissible_.empty(), ErrorKind::NoAdmissibleAnchor,
                "no node has both a neighbor and an admissible non-neighbor under " + to_string(strategy_));
        require(anchor_count >= 1, ErrorKind::InvalidArgument, "anchor_count must be positive");
        const auto count = std::min<std::size_t>(anchor_count, admissible_.size());
        auto picks = sample_without_replacement(rng, admissible_.size(), count);
        SIBatch b;
        std::unordered_map<int, int> slot;
        auto member = [&](int v) {
            auto [it, inserted] = slot.try_emplace(v, static_cast<int>(b.members.size()));
            if (inserted) b.members.push_back(v);
            return it->second;
        };
        for (std::size_t idx : picks) {
            const int a = admissible_[idx];
            const auto& nb = g_.neighbors(a);
            const int pos = nb[uniform_index(rng, nb.size())];
            const int neg = draw_negative(a, rng);
            const int sa = member(a);
            b.anchors.push_back(sa);
            b.positive_pairs.emplace_back(sa, member(pos));
            b.negative_pairs.emplace_back(sa, member(neg));
        }
        classify_member_pairs(g_, b);
        return b;
    }

    static void classify_member_pairs(const Graph& g, SIBatch& b) {
        b.edge_pairs.clear();
        b.non_edge_pairs.clear();
        const int m = static_cast<int>(b.members.size());
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                (g.has_edge(b.members[i], b.members[j]) ? b.edge_pairs : b.non_edge_pairs).emplace_back(i, j);
            }
        }
    }

private:
    int draw_negative(int a, Rng& rng) const {
        const std::vector<int>* pool = nullptr;
        std::size_t pool_size = g_.num_nodes();
        if (strategy_ == NegativeStrategy::SameComponent) {
            pool = &members_of_component_[component_[a]];
            pool_size = pool->size();
        }
        auto at = [&](std::size_t i) { return pool ? (*pool)[i] : static_cast<int>(i); };
        const std::size_t candidates = pool_size - 1 - g_.degree(a);
        if (candidates * 4 >= pool_size) {
            while (true) {
                const int v = at(uniform_index(rng, pool_size));
                if (v != a && !g_.has_edge(a, v)) return v;
            }
        }
        std::size_t target = uniform_index(rng, candidates);
        for (std::size_t i = 0; i < pool_size; ++i) {
            const int v = at(i);
            if (v == a || g_.has_edge(a, v)) continue;
            if (target-- == 0) return v;
        }
        fail(ErrorKind::NoAdmissibleAnchor, "negative pool exhausted");
    }

    const Graph& g_;
    NegativeStrategy strategy_;
    std::vector<int> component_;
    std::vector<std::vector<int>> members_of_component_;
    std::vector<int> admissible_;
};

inline SIBatch sample_si_batch(const Graph& g, int anchor_count, NegativeStrategy strategy, std::uint64_t seed) {
    SISampler sampler(g, strategy);
    Rng rng = make_rng(seed, 10);
    return sampler.sample(anchor_count, rng);
}

/// Every node with a neighbor is an anchor; positives are all edges and negatives all non-edges.
inline SIBatch exhaustive_batch(const Graph& g) {
    SIBatch b;
    for (int v = 0; v < g.num_nodes(); ++v) {
        b.members.push_back(v);
        if (g.degree(v) > 0) b.anchors.push_back(v);
    }
    SISampler::classify_member_pairs(g, b);
    b.positive_pairs = b.edge_pairs;
    b.negative_pairs = b.non_edge_pairs;
    return b;
}

}  // namespace sipt
