#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "sipt/corpus.hpp"
#include "sipt/error.hpp"
#include "sipt/graph.hpp"

namespace sipt {

/// Sample graph augmented with one auxiliary node per class. Sample nodes occupy
/// [0, num_samples), class nodes [num_samples, num_samples + num_classes).
struct AugmentedGraph {
    Graph graph;
    int num_samples = 0;
    int num_classes = 0;
    std::map<int, int> class_of_node;

    bool is_class_node(int v) const { return v >= num_samples; }
};

/// Edge (i, j) iff the two samples share a topic label.
inline Graph cliques_graph(const std::vector<int>& topic_labels) {
    require(!topic_labels.empty(), ErrorKind::InvalidArgument, "empty corpus");
    std::map<int, std::vector<int>> members;
    for (int i = 0; i < static_cast<int>(topic_labels.size()); ++i) {
        members[topic_labels[i]].push_back(i);
    }
    std::vector<Edge> edges;
    for (const auto& [label, nodes] : members) {
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                edges.emplace_back(nodes[a], nodes[b]);
            }
        }
    }
    return Graph(static_cast<int>(topic_labels.size()), edges);
}

inline Graph cliques_graph(const Corpus& corpus) {
    std::vector<int> labels;
    labels.reserve(corpus.size());
    for (const auto& s : corpus) {
        labels.push_back(s.topic_label);
    }
    return cliques_graph(labels);
}

/// Bipartite sample/class graph. Class ids are the sorted distinct labels; class node
/// index = num_samples + rank of the class id.
inline AugmentedGraph classification_graph(const std::vector<std::vector<int>>& labels, bool multi_task) {
    std::set<int> classes;
    for (const auto& ls : labels) {
        if (!multi_task) {
            require(ls.size() == 1, ErrorKind::MultiLabel, "single-task mode needs exactly one label per sample");
        }
        classes.insert(ls.begin(), ls.end());
    }
    AugmentedGraph out;
    out.num_samples = static_cast<int>(labels.size());
    out.num_classes = static_cast<int>(classes.size());
    std::map<int, int> node_of_class;
    int next = out.num_samples;
    for (int c : classes) {
        node_of_class[c] = next;
        out.class_of_node[next] = c;
        ++next;
    }
    std::vector<Edge> edges;
    for (int i = 0; i < out.num_samples; ++i) {
        for (int c : labels[i]) {
            edges.emplace_back(i, node_of_class[c]);
        }
    }
    out.graph = Graph(next, edges);
    return out;
}

}  // namespace sipt
