#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "sipt/error.hpp"
#include "sipt/graph.hpp"

namespace sipt {

namespace detail {

inline double squared_euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Indices of the k nearest candidates by (distance, index); `skip` is excluded.
inline std::vector<int> nearest(const Embeddings& pool, const std::vector<double>& q, int k, int skip = -1) {
    std::vector<std::pair<double, int>> d;
    d.reserve(pool.size());
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
        if (i != skip) d.emplace_back(squared_euclidean(pool[i], q), i);
    }
    const auto kk = std::min<std::size_t>(k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < kk; ++i) out.push_back(d[i].second);
    return out;
}

inline std::vector<double> vote_fractions(const std::vector<int>& idx, const Labeling& labels) {
    std::vector<double> s(labels.num_classes, 0.0);
    for (int i : idx) s[labels[i]] += 1.0;
    for (auto& v : s) v /= static_cast<double>(idx.size());
    return s;
}

}  // namespace detail

using ScoreMatrix = std::vector<std::vector<double>>;

/// Vote fractions of the k nearest training points (euclidean, ties by smaller index).
inline ScoreMatrix knn_scores(const Embeddings& train, const Labeling& train_labels, const Embeddings& queries, int k) {
    require(!train.empty(), ErrorKind::EmptyTrain, "kNN needs at least one training point");
    require(k >= 1 && k <= static_cast<int>(train.size()), ErrorKind::InvalidArgument, "k must lie in [1, train size]");
    require(train_labels.size() == train.size(), ErrorKind::DimensionMismatch, "labels and training points differ in count");
    ScoreMatrix out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(detail::vote_fractions(detail::nearest(train, q, k), train_labels));
    return out;
}

/// Each point scored by its k nearest others.
inline ScoreMatrix knn_scores_leave_one_out(const Embeddings& points, const Labeling& labels, int k) {
    require(static_cast<int>(points.size()) > k, ErrorKind::InsufficientSamples, "leave-one-out kNN needs more than k points");
    ScoreMatrix out;
    out.reserve(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
        out.push_back(detail::vote_fractions(detail::nearest(points, points[i], k, i), labels));
    }
    return out;
}

/// Argmax with smallest index on ties.
inline int predicted_class(const std::vector<double>& scores) {
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

inline double accuracy(const ScoreMatrix& scores, const Labeling& truth) {
    require(!scores.empty(), ErrorKind::InvalidArgument, "no predictions");
    int hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) hits += predicted_class(scores[i]) == truth[i];
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

/// Mann-Whitney AUROC of `scores` for the positive set, with midranks for ties.
inline double binary_auroc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) rank[order[t]] = mid;
        i = j;
    }
    double pos = 0.0, rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (positive[i]) {
            pos += 1.0;
            rank_sum += rank[i];
        }
    }
    const double neg = static_cast<double>(n) - pos;
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// One-vs-rest AUROC per class present in truth, macro-averaged.
inline double macro_auroc(const ScoreMatrix& scores, const Labeling& truth) {
    require(scores.size() == truth.size(), ErrorKind::DimensionMismatch, "scores and truth differ in count");
    std::set<int> present(truth.labels.begin(), truth.labels.end());
    require(present.size() >= 2, ErrorKind::SingleClass, "AUROC needs at least two classes in truth");
    double total = 0.0;
    for (int c : present) {
        std::vector<double> s(scores.size());
        std::vector<bool> pos(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            s[i] = c < static_cast<int>(scores[i].size()) ? scores[i][c] : 0.0;
            pos[i] = truth[i] == c;
        }
        total += binary_auroc(s, pos);
    }
    return total / static_cast<double>(present.size());
}

struct RetrievalMetrics {
    double lrap = 0.0;
    double ndcg = 0.0;
    double ap = 0.0;
    double mrr = 0.0;
    int evaluated_nodes = 0;
    int skipped_nodes = 0;
};

/// Ranks all other nodes by euclidean distance (ties by index); relevant = graph neighbors.
inline RetrievalMetrics retrieval_metrics(const Embeddings& embeddings, const Graph& g) {
    require(g.num_edges() > 0, ErrorKind::NoEdges, "retrieval metrics need at least one edge");
    require(static_cast<int>(embeddings.size()) == g.num_nodes(), ErrorKind::DimensionMismatch,
            "embedding count differs from node count");
    RetrievalMetrics m;
    const int n = g.num_nodes();
    std::vector<std::pair<double, int>> ranked;
    for (int v = 0; v < n; ++v) {
        if (g.degree(v) == 0) {
            ++m.skipped_nodes;
            continue;
        }
        ranked.clear();
        for (int u = 0; u < n; ++u) {
            if (u != v) ranked.emplace_back(detail::squared_euclidean(embeddings[v], embeddings[u]), u);
        }
        std::sort(ranked.begin(), ranked.end());
        double ap = 0.0, dcg = 0.0, first = 0.0;
        int hits = 0;
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (!g.has_edge(v, ranked[r].second)) continue;
            ++hits;
            const double rank = static_cast<double>(r + 1);
            ap += hits / rank;
            dcg += 1.0 / std::log2(rank + 1.0);
            if (hits == 1) first = 1.0 / rank;
        }
        double ideal = 0.0;
        for (int i = 1; i <= hits; ++i) ideal += 1.0 / std::log2(i + 1.0);
        // Distance ties are broken by index, so a relevant item's rank counts exactly the items ahead of it
        // and LRAP coincides with AP.
        m.ap += ap / hits;
        m.lrap += ap / hits;
        m.ndcg += dcg / ideal;
        m.mrr += first;
        ++m.evaluated_nodes;
    }
    m.ap /= m.evaluated_nodes;
    m.lrap /= m.evaluated_nodes;
    m.ndcg /= m.evaluated_nodes;
    m.mrr /= m.evaluated_nodes;
    return m;
}

struct EvalReport {
    double lc = 0.0;
    double knn_macro_auroc = 0.0;
    double knn_accuracy = 0.0;
    RecoveryResult recovery;
    RetrievalMetrics retrieval;
    int k = 3;
    double slack = 0.05;
    bool theorem_checked = false;
    bool theorem_holds = false;
};

/// Leave-one-out kNN over the labeled nodes, LC over the graph, recovery and retrieval diagnostics, and the
/// accuracy >= LC - slack check when the graph is exactly recoverable from the embeddings.
inline EvalReport theory_report(const Graph& g, const Labeling& ft_labels, const Embeddings& embeddings, int k,
                                double slack = 0.05, DistanceName distance = DistanceName::Euclidean) {
    require(static_cast<int>(embeddings.size()) == g.num_nodes() && ft_labels.size() == embeddings.size(),
            ErrorKind::DimensionMismatch, "graph, labels and embeddings must agree in size");
    EvalReport r;
    r.k = k;
    r.slack = slack;
    r.lc = local_consistency(g, ft_labels);
    const auto scores = knn_scores_leave_one_out(embeddings, ft_labels, k);
    r.knn_accuracy = accuracy(scores, ft_labels);
    r.knn_macro_auroc = macro_auroc(scores, ft_labels);
    r.recovery = recovery_margin(g, embeddings, distance);
    r.retrieval = retrieval_metrics(embeddings, g);
    r.theorem_checked = r.recovery.margin > 0.0;
    r.theorem_holds = r.knn_accuracy >= r.lc - slack;
    return r;
}

}  // namespace sipt
