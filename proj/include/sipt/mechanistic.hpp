#pragma once

// Cycle + motif graphs and the three node labelings (homophily, motif, structural).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sipt/corpus.hpp"
#include "sipt/error.hpp"
#include "sipt/graph.hpp"
#include "sipt/rng.hpp"

namespace sipt {

struct MotifTemplate {
    std::string name;
    int num_nodes = 0;
    std::vector<Edge> edges;
    int attach_node = 0;
};

inline MotifTemplate triangle_motif() { return {"triangle", 3, {{0, 1}, {1, 2}, {0, 2}}, 0}; }
inline MotifTemplate four_cycle_motif() { return {"4-cycle", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, 0}; }
inline MotifTemplate four_clique_motif() {
    return {"4-clique", 4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 0};
}
inline MotifTemplate three_star_motif() { return {"3-star", 4, {{0, 1}, {0, 2}, {0, 3}}, 0}; }

inline std::vector<MotifTemplate> default_motif_templates() {
    return {triangle_motif(), four_cycle_motif(), four_clique_motif(), three_star_motif()};
}

inline constexpr int kCycleMotif = -1;

struct MotifGraph {
    Graph graph;
    int cycle_len = 0;
    /// -1 for base-cycle nodes, otherwise the template index.
    std::vector<int> motif_id_of_node;
    /// Copy index of each node's motif (-1 on the cycle).
    std::vector<int> motif_copy_of_node;
    std::vector<int> attachment_points;
    int num_templates = 0;
};

/// Base cycle of `cycle_len` nodes with every motif copy bridged to an evenly spaced cycle
/// node. The seed shuffles which copy lands at which attachment point.
inline MotifGraph build_motif_graph(int cycle_len, const std::vector<MotifTemplate>& templates, int copies_per_shape,
                                    std::uint64_t seed) {
    require(cycle_len >= 3, ErrorKind::InvalidArgument, "cycle needs at least 3 nodes");
    require(copies_per_shape >= 0, ErrorKind::InvalidArgument, "negative copy count");
    for (const auto& t : templates) {
        require(t.num_nodes >= 3 && t.num_nodes <= 8, ErrorKind::InvalidArgument, "motif size must be 3-8");
        require(t.attach_node >= 0 && t.attach_node < t.num_nodes, ErrorKind::InvalidArgument, "bad attach node");
        auto comps = connected_components(Graph(t.num_nodes, t.edges));
        require(*std::max_element(comps.begin(), comps.end()) == 0, ErrorKind::InvalidArgument,
                "motif template '" + t.name + "' is not connected");
    }
    std::vector<int> sequence;
    for (int t = 0; t < static_cast<int>(templates.size()); ++t) {
        for (int c = 0; c < copies_per_shape; ++c) sequence.push_back(t);
    }
    int total = static_cast<int>(sequence.size());
    require(total <= cycle_len, ErrorKind::Spacing,
            std::to_string(total) + " motifs exceed cycle capacity " + std::to_string(cycle_len));
    Rng rng = make_rng(seed, 6);
    shuffle_in_place(sequence, rng);

    MotifGraph mg;
    mg.cycle_len = cycle_len;
    mg.num_templates = static_cast<int>(templates.size());
    std::vector<Edge> edges;
    for (int i = 0; i < cycle_len; ++i) edges.emplace_back(i, (i + 1) % cycle_len);
    mg.motif_id_of_node.assign(cycle_len, kCycleMotif);
    mg.motif_copy_of_node.assign(cycle_len, -1);
    int next = cycle_len;
    int spacing = total > 0 ? cycle_len / total : 0;
    for (int m = 0; m < total; ++m) {
        const auto& t = templates[sequence[m]];
        int base = next;
        for (int i = 0; i < t.num_nodes; ++i) {
            mg.motif_id_of_node.push_back(sequence[m]);
            mg.motif_copy_of_node.push_back(m);
        }
        for (auto [a, b] : t.edges) edges.emplace_back(base + a, base + b);
        int anchor = m * spacing;
        mg.attachment_points.push_back(anchor);
        edges.emplace_back(anchor, base + t.attach_node);
        next += t.num_nodes;
    }
    mg.graph = Graph(next, edges);
    return mg;
}

struct KMeansResult {
    std::vector<int> assignment;
    std::vector<std::vector<double>> centroids;
    /// Objective after each assignment step.
    std::vector<double> objective_history;
};

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

inline std::size_t count_distinct(const std::vector<std::vector<double>>& features) {
    std::set<std::vector<double>> distinct(features.begin(), features.end());
    return distinct.size();
}

/// Renumbers cluster ids in order of first appearance.
inline std::vector<int> canonical_labels(const std::vector<int>& raw) {
    std::map<int, int> remap;
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto it = remap.find(raw[i]);
        if (it == remap.end()) it = remap.emplace(raw[i], static_cast<int>(remap.size())).first;
        out[i] = it->second;
    }
    return out;
}

}  // namespace detail

/// Lloyd's algorithm with D^2 (k-means++) seeding; stops at an assignment fixpoint or after
/// `max_iterations`. Empty clusters keep their previous centroid.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& features, int k, std::uint64_t seed,
                           int max_iterations = 100) {
    require(k >= 1 && static_cast<std::size_t>(k) <= detail::count_distinct(features), ErrorKind::DegenerateK,
            "k = " + std::to_string(k) + " exceeds the number of distinct feature vectors");
    const std::size_t n = features.size();
    Rng rng = make_rng(seed, 7);
    KMeansResult res;
    res.centroids.push_back(features[uniform_index(rng, n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = detail::squared_distance(features[i], res.centroids[0]);
    while (static_cast<int>(res.centroids.size()) < k) {
        double total = 0.0;
        for (double x : d2) total += x;
        double target = uniform01(rng) * total;
        std::size_t pick = n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (acc > target) break;
        }
        res.centroids.push_back(features[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], detail::squared_distance(features[i], res.centroids.back()));
        }
    }
    res.assignment.assign(n, -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = detail::squared_distance(features[i], res.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = detail::squared_distance(features[i], res.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            objective += best_d;
            if (res.assignment[i] != best) {
                res.assignment[i] = best;
                changed = true;
            }
        }
        res.objective_history.push_back(objective);
        if (!changed) break;
        const std::size_t dim = features[0].size();
        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[res.assignment[i]];
            for (std::size_t j = 0; j < dim; ++j) sums[res.assignment[i]][j] += features[i][j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j) res.centroids[c][j] = sums[c][j] / counts[c];
        }
    }
    return res;
}

inline double kmeans_objective(const std::vector<std::vector<double>>& features, const KMeansResult& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        s += detail::squared_distance(features[i], r.centroids[r.assignment[i]]);
    }
    return s;
}

/// Indicator vector of nodes within shortest-path distance 3 (self included).
inline std::vector<std::vector<double>> homophily_features(const Graph& g, int radius = 3) {
    int n = g.num_nodes();
    std::vector<std::vector<double>> feats(n, std::vector<double>(n, 0.0));
    for (int s = 0; s < n; ++s) {
        std::vector<int> dist(n, -1);
        std::deque<int> q{s};
        dist[s] = 0;
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            feats[s][v] = 1.0;
            if (dist[v] == radius) continue;
            for (int u : g.neighbors(v)) {
                if (dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    q.push_back(u);
                }
            }
        }
    }
    return feats;
}

/// k-means over features with k capped at the number of distinct vectors.
inline Labeling cluster_labels(const std::vector<std::vector<double>>& features, int k, std::uint64_t seed) {
    int k_eff = std::min<int>(k, static_cast<int>(detail::count_distinct(features)));
    auto res = kmeans(features, k_eff, seed);
    return Labeling::from_labels(detail::canonical_labels(res.assignment));
}

inline Labeling homophily_labels(const Graph& g, int k_clusters, std::uint64_t seed) {
    auto comps = connected_components(g);
    require(g.num_nodes() > 0 && *std::max_element(comps.begin(), comps.end()) == 0, ErrorKind::DisconnectedGraph,
            "homophily labels need a connected graph");
    return cluster_labels(homophily_features(g), k_clusters, seed);
}

/// Label 0 for the base cycle, template index + 1 for motif nodes.
inline Labeling motif_labels(const MotifGraph& mg) {
    std::vector<int> labels(mg.motif_id_of_node.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = mg.motif_id_of_node[i] + 1;
    return Labeling(std::move(labels), 1 + mg.num_templates);
}

using GDV = std::array<long long, 15>;

namespace detail {

/// Orbit of `v` in the connected induced subgraph on `nodes` (2-4 nodes, v among them).
inline int graphlet_orbit(const Graph& g, const std::vector<int>& nodes, int v) {
    const int k = static_cast<int>(nodes.size());
    std::array<int, 4> deg{};
    int m = 0, vi = 0;
    for (int i = 0; i < k; ++i) {
        if (nodes[i] == v) vi = i;
        for (int j = i + 1; j < k; ++j) {
            if (g.has_edge(nodes[i], nodes[j])) {
                ++deg[i];
                ++deg[j];
                ++m;
            }
        }
    }
    int dv = deg[vi];
    int max_deg = *std::max_element(deg.begin(), deg.begin() + k);
    if (k == 2) return 0;
    if (k == 3) return m == 3 ? 3 : (dv == 1 ? 1 : 2);
    switch (m) {
        case 3: return max_deg == 3 ? (dv == 3 ? 7 : 6) : (dv == 1 ? 4 : 5);
        case 4: return max_deg == 2 ? 8 : (dv == 1 ? 9 : (dv == 2 ? 10 : 11));
        case 5: return dv == 2 ? 12 : 13;
        default: return 14;
    }
}

}  // namespace detail

/// Orbit counts of v over all connected induced subgraphs with 2-4 nodes containing v.
inline GDV gdv(const Graph& g, int v) {
    GDV counts{};
    std::set<std::vector<int>> level{{v}};
    for (int size = 2; size <= 4; ++size) {
        std::set<std::vector<int>> next;
        for (const auto& set : level) {
            for (int member : set) {
                for (int u : g.neighbors(member)) {
                    if (std::find(set.begin(), set.end(), u) != set.end()) continue;
                    std::vector<int> grown = set;
                    grown.insert(std::upper_bound(grown.begin(), grown.end(), u), u);
                    next.insert(std::move(grown));
                }
            }
        }
        for (const auto& set : next) ++counts[detail::graphlet_orbit(g, set, v)];
        level = std::move(next);
    }
    return counts;
}

inline std::vector<std::vector<double>> gdv_features(const Graph& g) {
    std::vector<std::vector<double>> feats(g.num_nodes(), std::vector<double>(15));
    for (int v = 0; v < g.num_nodes(); ++v) {
        GDV c = gdv(g, v);
        for (int i = 0; i < 15; ++i) feats[v][i] = std::log1p(static_cast<double>(c[i]));
    }
    return feats;
}

/// k-means over log(1 + c) graphlet degree vectors.
inline Labeling structural_labels(const Graph& g, int k_clusters, std::uint64_t seed) {
    return cluster_labels(gdv_features(g), k_clusters, seed);
}

/// For every node label l, assigns distinct samples with topic_label == l, uniformly
/// without replacement. Returns the corpus index per node.
inline std::vector<int> assign_corpus_to_nodes(const Corpus& corpus, const Labeling& node_labels, std::uint64_t seed) {
    std::map<int, std::vector<int>> pool;
    for (int i = 0; i < static_cast<int>(corpus.size()); ++i) pool[corpus[i].topic_label].push_back(i);
    std::map<int, std::vector<int>> nodes_of_label;
    for (int v = 0; v < static_cast<int>(node_labels.size()); ++v) nodes_of_label[node_labels[v]].push_back(v);
    Rng rng = make_rng(seed, 8);
    std::vector<int> out(node_labels.size(), -1);
    for (const auto& [label, nodes] : nodes_of_label) {
        const auto& candidates = pool[label];
        require(candidates.size() >= nodes.size(), ErrorKind::InsufficientSamples,
                "label " + std::to_string(label) + " needs " + std::to_string(nodes.size()) + " samples, corpus has " +
                    std::to_string(candidates.size()));
        auto picks = sample_without_replacement(rng, candidates.size(), nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = candidates[picks[i]];
    }
    return out;
}

}  // namespace sipt
