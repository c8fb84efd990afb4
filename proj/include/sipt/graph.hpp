#pragma once

// Pre-training graph, labelings, local consistency, edge noise and radius-NN recovery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sipt/error.hpp"
#include "sipt/rng.hpp"

namespace sipt {

using Edge = std::pair<int, int>;
using Embeddings = std::vector<std::vector<double>>;

/// Undirected simple graph. Edges are stored as (u, v) with u < v, sorted; adjacency
/// lists are sorted.
class Graph {
public:
    Graph() = default;

    explicit Graph(int num_nodes, const std::vector<Edge>& edges = {}) : num_nodes_(num_nodes) {
        require(num_nodes >= 0, ErrorKind::InvalidArgument, "negative node count");
        edges_.reserve(edges.size());
        for (auto [u, v] : edges) {
            require(u != v, ErrorKind::InvalidArgument, "self-loop " + std::to_string(u));
            require(u >= 0 && v >= 0 && u < num_nodes && v < num_nodes, ErrorKind::InvalidArgument,
                    "edge endpoint out of range");
            edges_.emplace_back(std::min(u, v), std::max(u, v));
        }
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        adjacency_.assign(num_nodes, {});
        for (auto [u, v] : edges_) {
            adjacency_[u].push_back(v);
            adjacency_[v].push_back(u);
        }
        for (auto& nbrs : adjacency_) {
            std::sort(nbrs.begin(), nbrs.end());
        }
    }

    int num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adjacency_[v]; }
    int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }

    bool has_edge(int u, int v) const {
        if (u == v) {
            return false;
        }
        const auto& nbrs = adjacency_[u];
        return std::binary_search(nbrs.begin(), nbrs.end(), v);
    }

    std::uint64_t num_pairs() const {
        auto n = static_cast<std::uint64_t>(num_nodes_);
        return n * (n - (n > 0 ? 1 : 0)) / 2;
    }

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
    }

private:
    int num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adjacency_;
};

struct Labeling {
    std::vector<int> labels;
    int num_classes = 0;

    Labeling() = default;
    Labeling(std::vector<int> l, int classes) : labels(std::move(l)), num_classes(classes) {
        for (int x : labels) {
            require(x >= 0 && x < num_classes, ErrorKind::InvalidArgument, "label out of range");
        }
    }

    /// Classes = 1 + max label.
    static Labeling from_labels(std::vector<int> l) {
        int classes = 0;
        for (int x : l) {
            classes = std::max(classes, x + 1);
        }
        return Labeling(std::move(l), classes);
    }

    std::size_t size() const { return labels.size(); }
    int operator[](std::size_t i) const { return labels[i]; }

    friend bool operator==(const Labeling&, const Labeling&) = default;
};

enum class DistanceName { Euclidean, Cosine, NegativeInnerProduct };

inline std::string to_string(DistanceName d) {
    switch (d) {
        case DistanceName::Euclidean: return "euclidean";
        case DistanceName::Cosine: return "cosine";
        case DistanceName::NegativeInnerProduct: return "negative-inner-product";
    }
    return "euclidean";
}

inline DistanceName distance_from_string(const std::string& s) {
    if (s == "euclidean") return DistanceName::Euclidean;
    if (s == "cosine") return DistanceName::Cosine;
    if (s == "negative-inner-product") return DistanceName::NegativeInnerProduct;
    fail(ErrorKind::InvalidArgument, "unknown distance '" + s + "'");
}

struct RecoveryCriterion {
    DistanceName distance_name = DistanceName::Euclidean;
    double radius = 1.0;
    double loss_threshold = 0.0;
};

inline double point_distance(const std::vector<double>& a, const std::vector<double>& b, DistanceName d) {
    require(a.size() == b.size(), ErrorKind::DimensionMismatch, "embedding dimensions differ");
    switch (d) {
        case DistanceName::Euclidean: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double t = a[i] - b[i];
                s += t * t;
            }
            return std::sqrt(s);
        }
        case DistanceName::Cosine: {
            double ab = 0.0, aa = 0.0, bb = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            if (aa == 0.0 || bb == 0.0) {
                return 1.0;
            }
            return 1.0 - ab / std::sqrt(aa * bb);
        }
        case DistanceName::NegativeInnerProduct: {
            double ab = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
            }
            return -ab;
        }
    }
    return 0.0;
}

namespace detail {

inline void check_same_dimension(const Embeddings& points) {
    for (const auto& p : points) {
        require(p.size() == points.front().size(), ErrorKind::DimensionMismatch,
                "embedding dimensions differ");
    }
}

/// Label counts among the neighbors of v.
inline std::map<int, int> neighbor_label_counts(const Graph& g, const Labeling& y, int v) {
    std::map<int, int> counts;
    for (int u : g.neighbors(v)) {
        ++counts[y[u]];
    }
    return counts;
}

}  // namespace detail

/// Fraction of non-isolated nodes whose label is among the most frequent neighbor labels.
inline double local_consistency(const Graph& g, const Labeling& y) {
    require(y.size() == static_cast<std::size_t>(g.num_nodes()), ErrorKind::InvalidArgument,
            "labeling does not cover the graph");
    require(g.num_edges() > 0, ErrorKind::AllIsolated, "graph has no edges");
    int consistent = 0, counted = 0;
    for (int v = 0; v < g.num_nodes(); ++v) {
        if (g.degree(v) == 0) {
            continue;
        }
        ++counted;
        auto counts = detail::neighbor_label_counts(g, y, v);
        int best = 0;
        for (auto [label, c] : counts) {
            best = std::max(best, c);
        }
        auto it = counts.find(y[v]);
        if (it != counts.end() && it->second == best) {
            ++consistent;
        }
    }
    return static_cast<double>(consistent) / counted;
}

/// Sum over cliques of P(clique) * P(label = clique majority | clique), majority ties to the
/// smallest label.
inline double clique_lc_prediction(const std::vector<int>& clique_of_node, const Labeling& y) {
    require(clique_of_node.size() == y.size(), ErrorKind::InvalidArgument, "size mismatch");
    std::map<int, std::map<int, int>> counts;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ++counts[clique_of_node[i]][y[i]];
    }
    // P(clique) * P(majority | clique) = majority_count / n, summed as integers
    long long majority_total = 0;
    for (const auto& [clique, label_counts] : counts) {
        int best = 0;
        for (auto [label, c] : label_counts) best = std::max(best, c);
        majority_total += best;
    }
    return static_cast<double>(majority_total) / static_cast<double>(y.size());
}

/// Dense component ids ordered by smallest member.
inline std::vector<int> connected_components(const Graph& g) {
    std::vector<int> comp(g.num_nodes(), -1);
    int next = 0;
    for (int s = 0; s < g.num_nodes(); ++s) {
        if (comp[s] != -1) {
            continue;
        }
        std::deque<int> queue{s};
        comp[s] = next;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int u : g.neighbors(v)) {
                if (comp[u] == -1) {
                    comp[u] = next;
                    queue.push_back(u);
                }
            }
        }
        ++next;
    }
    return comp;
}

inline std::size_t noise_edge_count(double rate, std::size_t num_edges) {
    double raw = rate * static_cast<double>(num_edges);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

/// Adds ceil(rate * |E|) distinct non-edges drawn uniformly; original edges are kept.
inline Graph add_edge_noise(const Graph& g, double rate, std::uint64_t seed) {
    require(rate >= 0.0 && rate <= 1.0, ErrorKind::InvalidArgument, "noise rate outside [0, 1]");
    std::size_t to_add = noise_edge_count(rate, g.num_edges());
    std::uint64_t non_edges = g.num_pairs() - g.num_edges();
    require(to_add <= non_edges, ErrorKind::Saturation, "not enough non-edges to add " + std::to_string(to_add));
    if (to_add == 0) {
        return g;
    }
    Rng rng = make_rng(seed, 3);
    std::vector<Edge> edges = g.edges();
    auto n = static_cast<std::uint64_t>(g.num_nodes());
    auto key = [n](int u, int v) { return static_cast<std::uint64_t>(u) * n + static_cast<std::uint64_t>(v); };
    if (to_add * 2 <= non_edges) {
        std::unordered_set<std::uint64_t> chosen;
        while (chosen.size() < to_add) {
            int u = static_cast<int>(uniform_index(rng, g.num_nodes()));
            int v = static_cast<int>(uniform_index(rng, g.num_nodes()));
            if (u == v || g.has_edge(u, v)) {
                continue;
            }
            if (u > v) {
                std::swap(u, v);
            }
            if (chosen.insert(key(u, v)).second) {
                edges.emplace_back(u, v);
            }
        }
    } else {
        std::vector<Edge> candidates;
        candidates.reserve(non_edges);
        for (int u = 0; u < g.num_nodes(); ++u) {
            for (int v = u + 1; v < g.num_nodes(); ++v) {
                if (!g.has_edge(u, v)) {
                    candidates.emplace_back(u, v);
                }
            }
        }
        for (std::size_t i : sample_without_replacement(rng, candidates.size(), to_add)) {
            edges.push_back(candidates[i]);
        }
    }
    return Graph(g.num_nodes(), edges);
}

/// Edge (i, j) iff d(points[i], points[j]) < r.
inline Graph radius_nn_graph(const Embeddings& points, const RecoveryCriterion& criterion) {
    detail::check_same_dimension(points);
    std::vector<Edge> edges;
    int n = static_cast<int>(points.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (point_distance(points[i], points[j], criterion.distance_name) < criterion.radius) {
                edges.emplace_back(i, j);
            }
        }
    }
    return Graph(n, edges);
}

struct RecoveryResult {
    double margin = 0.0;
    double best_radius = 0.0;
    double edge_f1 = 0.0;
};

inline double edge_f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp == 0) {
        return 0.0;
    }
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

/// Gap between the closest non-edge and the farthest edge, and the radius that best
/// recovers the edge set.
inline RecoveryResult recovery_margin(const Graph& g, const Embeddings& points, DistanceName distance) {
    require(points.size() == static_cast<std::size_t>(g.num_nodes()), ErrorKind::InvalidArgument,
            "point count differs from node count");
    require(g.num_edges() > 0 && g.num_edges() < g.num_pairs(), ErrorKind::TrivialGraph,
            "need at least one edge and one non-edge");
    detail::check_same_dimension(points);
    struct PairDistance {
        double d;
        bool is_edge;
    };
    std::vector<PairDistance> pairs;
    pairs.reserve(g.num_pairs());
    double max_edge = -std::numeric_limits<double>::infinity();
    double min_non_edge = std::numeric_limits<double>::infinity();
    int n = g.num_nodes();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = point_distance(points[i], points[j], distance);
            bool e = g.has_edge(i, j);
            pairs.push_back({d, e});
            if (e) {
                max_edge = std::max(max_edge, d);
            } else {
                min_non_edge = std::min(min_non_edge, d);
            }
        }
    }
    RecoveryResult out;
    out.margin = min_non_edge - max_edge;
    std::size_t total_edges = g.num_edges();
    if (out.margin > 0.0) {
        out.best_radius = 0.5 * (min_non_edge + max_edge);
        std::size_t tp = 0, fp = 0;
        for (const auto& p : pairs) {
            if (p.d < out.best_radius) {
                (p.is_edge ? tp : fp) += 1;
            }
        }
        out.edge_f1 = edge_f1_score(tp, fp, total_edges - tp);
        return out;
    }
    std::sort(pairs.begin(), pairs.end(), [](const PairDistance& a, const PairDistance& b) { return a.d < b.d; });
    // Candidate radii: each observed distance (admits strictly smaller pairs) and the
    // midpoint after each group of equal distances (admits the group).
    out.best_radius = pairs.front().d;
    out.edge_f1 = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].d == pairs[i].d) {
            (pairs[j].is_edge ? tp : fp) += 1;
            ++j;
        }
        double next = j < pairs.size() ? pairs[j].d : pairs[i].d + std::max(1.0, std::abs(pairs[i].d));
        double radius = 0.5 * (pairs[i].d + next);
        double f1 = edge_f1_score(tp, fp, total_edges - tp);
        if (f1 > out.edge_f1) {
            out.edge_f1 = f1;
            out.best_radius = radius;
        }
        i = j;
    }
    return out;
}

}  // namespace sipt
