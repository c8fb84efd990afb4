#pragma once

// Triangulated surfaces, topic-vertex assignment, sample localization and on-simplex
// geodesic distances.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sipt/corpus.hpp"
#include "sipt/error.hpp"
#include "sipt/graph.hpp"
#include "sipt/rng.hpp"

namespace sipt {

enum class Topology { Plane, Moebius, Sphere, Torus };

inline std::string to_string(Topology t) {
    switch (t) {
        case Topology::Plane: return "plane";
        case Topology::Moebius: return "moebius";
        case Topology::Sphere: return "sphere";
        case Topology::Torus: return "torus";
    }
    return "plane";
}

inline Topology topology_from_string(const std::string& s) {
    if (s == "plane") return Topology::Plane;
    if (s == "moebius") return Topology::Moebius;
    if (s == "sphere") return Topology::Sphere;
    if (s == "torus") return Topology::Torus;
    fail(ErrorKind::InvalidArgument, "unknown topology '" + s + "'");
}

using Triangle = std::array<int, 3>;

struct SimplicialSurface {
    Topology topology = Topology::Plane;
    int num_vertices = 0;
    std::vector<Triangle> triangles;
    /// neighbors[t][i] = triangle across the edge opposite corner i, or -1 on the boundary.
    std::vector<std::array<int, 3>> neighbors;
    std::vector<int> topic_of_vertex;

    std::map<Edge, std::vector<int>> edge_triangles() const {
        std::map<Edge, std::vector<int>> out;
        for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
            for (int i = 0; i < 3; ++i) {
                int a = triangles[t][(i + 1) % 3], b = triangles[t][(i + 2) % 3];
                out[{std::min(a, b), std::max(a, b)}].push_back(t);
            }
        }
        return out;
    }

    std::size_t num_edges() const { return edge_triangles().size(); }

    int euler_characteristic() const {
        return num_vertices - static_cast<int>(num_edges()) + static_cast<int>(triangles.size());
    }

    /// 1-skeleton as a graph over vertex ids.
    Graph skeleton() const {
        std::vector<Edge> edges;
        for (const auto& [e, ts] : edge_triangles()) {
            edges.push_back(e);
        }
        return Graph(num_vertices, edges);
    }
};

struct PlacedSample {
    int sample_id = 0;
    int triangle = 0;
    std::array<double, 3> barycentric{};
};

namespace detail {

inline void link_triangles(SimplicialSurface& s) {
    s.neighbors.assign(s.triangles.size(), {-1, -1, -1});
    auto edges = s.edge_triangles();
    for (int t = 0; t < static_cast<int>(s.triangles.size()); ++t) {
        for (int i = 0; i < 3; ++i) {
            int a = s.triangles[t][(i + 1) % 3], b = s.triangles[t][(i + 2) % 3];
            const auto& ts = edges[{std::min(a, b), std::max(a, b)}];
            for (int other : ts) {
                if (other != t) {
                    s.neighbors[t][i] = other;
                }
            }
        }
    }
}

inline std::vector<Triangle> grid_triangles(int rows, int cols, bool wrap_rows, bool wrap_cols,
                                            const std::function<int(int, int)>& vid) {
    std::vector<Triangle> tris;
    int row_squares = wrap_rows ? rows : rows - 1;
    int col_squares = wrap_cols ? cols : cols - 1;
    for (int r = 0; r < row_squares; ++r) {
        for (int c = 0; c < col_squares; ++c) {
            int a = vid(r, c), b = vid(r + 1, c), d = vid(r + 1, c + 1), e = vid(r, c + 1);
            tris.push_back({a, b, d});
            tris.push_back({a, d, e});
        }
    }
    return tris;
}

inline std::vector<Triangle> icosahedron() {
    return {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
            {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
}

/// Splits every triangle into four via shared edge midpoints.
inline void subdivide(int& num_vertices, std::vector<Triangle>& tris) {
    std::map<Edge, int> midpoint;
    auto mid = [&](int a, int b) {
        Edge key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end()) {
            return it->second;
        }
        int id = num_vertices++;
        midpoint[key] = id;
        return id;
    };
    std::vector<Triangle> out;
    out.reserve(tris.size() * 4);
    for (auto [a, b, c] : tris) {
        int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.push_back({a, ab, ca});
        out.push_back({b, bc, ab});
        out.push_back({c, ca, bc});
        out.push_back({ab, bc, ca});
    }
    tris = std::move(out);
}

}  // namespace detail

/// Plane: resolution x resolution vertex grid. Torus: the same grid wrapped both ways.
/// Moebius: three vertex rows by `resolution` columns, last column glued to the first with
/// rows reversed. Sphere: icosahedron subdivided (resolution - 1) times.
inline SimplicialSurface build_tiling(Topology topology, int resolution) {
    SimplicialSurface s;
    s.topology = topology;
    switch (topology) {
        case Topology::Plane: {
            require(resolution >= 2, ErrorKind::ResolutionTooSmall, "plane needs resolution >= 2");
            int n = resolution;
            s.num_vertices = n * n;
            s.triangles = detail::grid_triangles(n, n, false, false, [n](int r, int c) { return r * n + c; });
            break;
        }
        case Topology::Torus: {
            require(resolution >= 3, ErrorKind::ResolutionTooSmall, "torus needs resolution >= 3");
            int n = resolution;
            s.num_vertices = n * n;
            s.triangles = detail::grid_triangles(n, n, true, true,
                                                 [n](int r, int c) { return (r % n) * n + (c % n); });
            break;
        }
        case Topology::Moebius: {
            require(resolution >= 3, ErrorKind::ResolutionTooSmall, "moebius strip needs resolution >= 3");
            constexpr int rows = 3;
            int cols = resolution;
            s.num_vertices = rows * cols;
            s.triangles = detail::grid_triangles(rows, cols, false, true, [cols](int r, int c) {
                if (c >= cols) {
                    return (rows - 1 - r) * cols + (c - cols);
                }
                return r * cols + c;
            });
            break;
        }
        case Topology::Sphere: {
            require(resolution >= 1, ErrorKind::ResolutionTooSmall, "sphere needs resolution >= 1");
            s.num_vertices = 12;
            s.triangles = detail::icosahedron();
            for (int i = 1; i < resolution; ++i) {
                detail::subdivide(s.num_vertices, s.triangles);
            }
            break;
        }
    }
    detail::link_triangles(s);
    return s;
}

/// Proper coloring of the 1-skeleton with K topics by randomized backtracking; every
/// triangle then carries three distinct topics.
inline SimplicialSurface assign_topics(const SimplicialSurface& surface, int num_topics, std::uint64_t seed,
                                       std::size_t backtrack_budget = 2'000'000) {
    require(num_topics >= 3, ErrorKind::InvalidDimension, "need at least 3 topics");
    Graph skel = surface.skeleton();
    Rng rng = make_rng(seed, 4);
    int n = surface.num_vertices;

    // BFS order from a random root keeps constrained vertices early.
    std::vector<int> order;
    std::vector<char> seen(n, 0);
    std::vector<int> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = i;
    shuffle_in_place(roots, rng);
    for (int root : roots) {
        if (seen[root]) continue;
        std::queue<int> q;
        q.push(root);
        seen[root] = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            order.push_back(v);
            std::vector<int> nbrs = skel.neighbors(v);
            shuffle_in_place(nbrs, rng);
            for (int u : nbrs) {
                if (!seen[u]) {
                    seen[u] = 1;
                    q.push(u);
                }
            }
        }
    }
    std::vector<std::vector<int>> preference(n);
    for (int v = 0; v < n; ++v) {
        preference[v].resize(num_topics);
        for (int k = 0; k < num_topics; ++k) preference[v][k] = k;
        shuffle_in_place(preference[v], rng);
    }

    std::vector<int> color(n, -1);
    std::vector<int> cursor(n, 0);
    std::size_t steps = 0;
    int pos = 0;
    while (pos < n) {
        if (++steps > backtrack_budget) {
            fail(ErrorKind::InfeasibleColoring, "backtracking budget exhausted");
        }
        int v = order[pos];
        bool placed = false;
        while (cursor[v] < num_topics) {
            int k = preference[v][cursor[v]++];
            bool ok = true;
            for (int u : skel.neighbors(v)) {
                if (color[u] == k) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                color[v] = k;
                placed = true;
                break;
            }
        }
        if (placed) {
            ++pos;
            continue;
        }
        color[v] = -1;
        cursor[v] = 0;
        if (pos == 0) {
            fail(ErrorKind::InfeasibleColoring,
                 "no assignment of " + std::to_string(num_topics) + " topics exists for this tiling");
        }
        --pos;
        color[order[pos]] = -1;
    }
    SimplicialSurface out = surface;
    out.topic_of_vertex = std::move(color);
    return out;
}

inline std::array<int, 3> sorted_triple(std::array<int, 3> t) {
    std::sort(t.begin(), t.end());
    return t;
}

/// For each triangle, draws `quota` unused samples whose top-3 topic set matches the
/// triangle's vertex topics: an entropy bin uniformly among non-empty bins, then a sample
/// uniformly within it.
inline std::vector<PlacedSample> localize_samples(const SimplicialSurface& surface, const Corpus& corpus, int quota,
                                                  int n_entropy_bins, std::uint64_t seed) {
    require(surface.topic_of_vertex.size() == static_cast<std::size_t>(surface.num_vertices),
            ErrorKind::InvalidArgument, "surface has no topic assignment");
    require(quota >= 1, ErrorKind::InvalidArgument, "quota must be positive");
    Rng rng = make_rng(seed, 5);
    // triple -> bin -> sample indices
    std::map<std::array<int, 3>, std::vector<std::vector<int>>> pool;
    std::vector<SimplexCoords> coords(corpus.size());
    for (int i = 0; i < static_cast<int>(corpus.size()); ++i) {
        const auto& theta = corpus[i].theta;
        int positive = static_cast<int>(std::count_if(theta.begin(), theta.end(), [](double x) { return x > 0.0; }));
        if (positive < 3) {
            continue;
        }
        coords[i] = top3_simplex_coords(theta);
        auto& bins = pool[sorted_triple(coords[i].topics)];
        bins.resize(n_entropy_bins);
        bins[entropy_bin_of_coords(coords[i].coords, n_entropy_bins)].push_back(i);
    }
    std::vector<PlacedSample> out;
    out.reserve(surface.triangles.size() * quota);
    for (int t = 0; t < static_cast<int>(surface.triangles.size()); ++t) {
        std::array<int, 3> topics{};
        for (int c = 0; c < 3; ++c) topics[c] = surface.topic_of_vertex[surface.triangles[t][c]];
        auto it = pool.find(sorted_triple(topics));
        for (int q = 0; q < quota; ++q) {
            std::vector<int> nonempty;
            if (it != pool.end()) {
                for (int b = 0; b < n_entropy_bins; ++b) {
                    if (!it->second[b].empty()) nonempty.push_back(b);
                }
            }
            if (nonempty.empty()) {
                fail(ErrorKind::InsufficientDensity,
                     "triangle " + std::to_string(t) + " (topics " + std::to_string(topics[0]) + "," +
                         std::to_string(topics[1]) + "," + std::to_string(topics[2]) + ") has too few samples");
            }
            auto& bin = it->second[nonempty[uniform_index(rng, nonempty.size())]];
            std::size_t pick = uniform_index(rng, bin.size());
            int sid = bin[pick];
            bin.erase(bin.begin() + static_cast<std::ptrdiff_t>(pick));
            PlacedSample p;
            p.sample_id = corpus[sid].id;
            p.triangle = t;
            for (int c = 0; c < 3; ++c) {
                for (int j = 0; j < 3; ++j) {
                    if (coords[sid].topics[j] == topics[c]) p.barycentric[c] = coords[sid].coords[j];
                }
            }
            out.push_back(p);
        }
    }
    return out;
}

using Point2 = std::array<double, 2>;

/// Shortest paths over waypoints (placements, tiling vertices and edge midpoints). Waypoints
/// sharing a triangle or lying in edge-adjacent triangles are joined by their straight-line
/// distance after unfolding the pair of unit equilateral triangles into one plane.
class WaypointGraph {
public:
    WaypointGraph(const SimplicialSurface& surface, const std::vector<PlacedSample>& placements)
        : num_placements_(static_cast<int>(placements.size())) {
        const int num_tris = static_cast<int>(surface.triangles.size());
        std::vector<std::vector<std::pair<int, std::array<double, 3>>>> members(num_tris);
        for (int i = 0; i < num_placements_; ++i) {
            members[placements[i].triangle].push_back({i, placements[i].barycentric});
        }
        int next = num_placements_;
        std::vector<int> vertex_node(surface.num_vertices);
        for (int v = 0; v < surface.num_vertices; ++v) vertex_node[v] = next++;
        std::map<Edge, int> midpoint_node;
        for (const auto& [e, ts] : surface.edge_triangles()) midpoint_node[e] = next++;
        for (int t = 0; t < num_tris; ++t) {
            const auto& tri = surface.triangles[t];
            for (int c = 0; c < 3; ++c) {
                std::array<double, 3> b{0, 0, 0};
                b[c] = 1.0;
                members[t].push_back({vertex_node[tri[c]], b});
                int a = tri[(c + 1) % 3], d = tri[(c + 2) % 3];
                std::array<double, 3> m{0, 0, 0};
                m[(c + 1) % 3] = 0.5;
                m[(c + 2) % 3] = 0.5;
                members[t].push_back({midpoint_node[{std::min(a, d), std::max(a, d)}], m});
            }
        }
        adjacency_.assign(next, {});
        const Point2 p0{0.0, 0.0}, p1{1.0, 0.0}, p2{0.5, std::sqrt(3.0) / 2.0};
        const std::array<Point2, 3> frame{p0, p1, p2};
        auto realize = [](const std::array<Point2, 3>& f, const std::array<double, 3>& b) {
            return Point2{b[0] * f[0][0] + b[1] * f[1][0] + b[2] * f[2][0],
                          b[0] * f[0][1] + b[1] * f[1][1] + b[2] * f[2][1]};
        };
        for (int t = 0; t < num_tris; ++t) {
            std::vector<Point2> here;
            here.reserve(members[t].size());
            for (const auto& [node, b] : members[t]) here.push_back(realize(frame, b));
            for (std::size_t i = 0; i < members[t].size(); ++i) {
                for (std::size_t j = i + 1; j < members[t].size(); ++j) {
                    link(members[t][i].first, members[t][j].first, dist(here[i], here[j]));
                }
            }
            for (int c = 0; c < 3; ++c) {
                int u = surface.neighbors[t][c];
                if (u <= t) {
                    continue;  // each adjacent pair once; -1 is boundary
                }
                // Unfold u across the shared edge: its far corner is the reflection of corner c.
                std::array<Point2, 3> unfolded{};
                const auto& tri_u = surface.triangles[u];
                for (int k = 0; k < 3; ++k) {
                    int vid = tri_u[k];
                    int corner = -1;
                    for (int m = 0; m < 3; ++m) {
                        if (surface.triangles[t][m] == vid) corner = m;
                    }
                    if (corner >= 0 && corner != c) {
                        unfolded[k] = frame[corner];
                    } else {
                        const auto& a = frame[(c + 1) % 3];
                        const auto& d = frame[(c + 2) % 3];
                        unfolded[k] = Point2{a[0] + d[0] - frame[c][0], a[1] + d[1] - frame[c][1]};
                    }
                }
                for (std::size_t j = 0; j < members[u].size(); ++j) {
                    Point2 q = realize(unfolded, members[u][j].second);
                    for (std::size_t i = 0; i < members[t].size(); ++i) {
                        if (members[t][i].first != members[u][j].first) {
                            link(members[t][i].first, members[u][j].first, dist(here[i], q));
                        }
                    }
                }
            }
        }
    }

    int num_placements() const { return num_placements_; }

    /// Dijkstra from placement `source`; distances to placements, stopping beyond `cutoff`
    /// (unreached entries stay +inf).
    std::vector<double> distances_from(int source, double cutoff = std::numeric_limits<double>::infinity()) const {
        std::vector<double> dist_all(adjacency_.size(), std::numeric_limits<double>::infinity());
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist_all[source] = 0.0;
        heap.push({0.0, source});
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d > dist_all[v]) continue;
            if (d > cutoff) break;
            for (auto [u, w] : adjacency_[v]) {
                double nd = d + w;
                if (nd < dist_all[u]) {
                    dist_all[u] = nd;
                    heap.push({nd, u});
                }
            }
        }
        dist_all.resize(num_placements_);
        return dist_all;
    }

    double distance(int a, int b) const { return distances_from(a)[b]; }

    /// Distance from each placement to its k-th nearest other placement.
    std::vector<double> kth_neighbor_distances(int k) const {
        std::vector<double> out(num_placements_, std::numeric_limits<double>::infinity());
        for (int s = 0; s < num_placements_; ++s) {
            std::vector<double> dist_all(adjacency_.size(), std::numeric_limits<double>::infinity());
            using Item = std::pair<double, int>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
            dist_all[s] = 0.0;
            heap.push({0.0, s});
            int found = 0;
            while (!heap.empty()) {
                auto [d, v] = heap.top();
                heap.pop();
                if (d > dist_all[v]) continue;
                if (v < num_placements_ && v != s && ++found == k) {
                    out[s] = d;
                    break;
                }
                for (auto [u, w] : adjacency_[v]) {
                    double nd = d + w;
                    if (nd < dist_all[u]) {
                        dist_all[u] = nd;
                        heap.push({nd, u});
                    }
                }
            }
        }
        return out;
    }

private:
    static double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

    void link(int a, int b, double w) {
        adjacency_[a].push_back({b, w});
        adjacency_[b].push_back({a, w});
    }

    int num_placements_ = 0;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

/// Geodesic distance between two placements using only those two as sample waypoints.
inline double geodesic_distance(const SimplicialSurface& surface, const PlacedSample& a, const PlacedSample& b) {
    WaypointGraph wg(surface, {a, b});
    return wg.distance(0, 1);
}

/// Node i = placements[i]; edge iff geodesic distance < r.
inline Graph manifold_rnn_graph(const WaypointGraph& waypoints, double radius) {
    require(radius > 0.0, ErrorKind::InvalidArgument, "radius must be positive");
    std::vector<Edge> edges;
    for (int i = 0; i < waypoints.num_placements(); ++i) {
        auto d = waypoints.distances_from(i, radius);
        for (int j = i + 1; j < waypoints.num_placements(); ++j) {
            if (d[j] < radius) edges.emplace_back(i, j);
        }
    }
    return Graph(waypoints.num_placements(), edges);
}

inline Graph manifold_rnn_graph(const SimplicialSurface& surface, const std::vector<PlacedSample>& placements,
                                double radius) {
    return manifold_rnn_graph(WaypointGraph(surface, placements), radius);
}

/// Radius whose r-NN graph has median degree at least `target_degree`: the median over nodes
/// of the distance to the target-th nearest neighbor, nudged up so that neighbor is admitted.
inline double radius_for_median_degree(const WaypointGraph& waypoints, int target_degree) {
    require(target_degree >= 1 && target_degree < waypoints.num_placements(), ErrorKind::InvalidArgument,
            "target degree out of range");
    auto kth = waypoints.kth_neighbor_distances(target_degree);
    std::sort(kth.begin(), kth.end());
    double median = kth[(kth.size() - 1) / 2];
    return median * (1.0 + 1e-12) + 1e-15;
}

}  // namespace sipt
