#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "sipt/graph_builders.hpp"
#include "sipt/io.hpp"
#include "sipt/manifold.hpp"
#include "sipt/mechanistic.hpp"

using namespace sipt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sipt_io_" + name);
    fs::remove_all(p);
    return p;
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Io, DoublesRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3, -2.5e-300, 6.02e23, std::numeric_limits<double>::denorm_min(), 0.0}) {
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.5), "0.5");
    EXPECT_EQ(kind_of([] { io::parse_double("1.5x"); }), ErrorKind::Format);
}

TEST(Io, CorpusRoundTrip) {
    auto corpus = sample_corpus(generate_topic_model(3, 10, 0.3, 1), 15, 7, 2);
    auto back = io::corpus_from_jsonl(io::corpus_to_jsonl(corpus));
    ASSERT_EQ(back.size(), corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        EXPECT_EQ(back[i].id, corpus[i].id);
        EXPECT_EQ(back[i].tokens, corpus[i].tokens);
        EXPECT_EQ(back[i].theta, corpus[i].theta);
        EXPECT_EQ(back[i].topic_label, corpus[i].topic_label);
    }
    auto dir = scratch("corpus");
    io::write_corpus(dir / "nested" / "c.jsonl", corpus);
    EXPECT_EQ(io::read_corpus(dir / "nested" / "c.jsonl").size(), corpus.size());
    EXPECT_EQ(kind_of([] { io::corpus_from_jsonl("{\"id\": 1}\n"); }), ErrorKind::Format);
    EXPECT_EQ(kind_of([&] { io::read_corpus(dir / "missing.jsonl"); }), ErrorKind::Io);
}

TEST(Io, GraphAndLabelsRoundTrip) {
    Graph g(7, {{0, 1}, {2, 5}, {1, 6}});
    EXPECT_EQ(io::parse_edge_list(io::edge_list(g)), g);
    EXPECT_EQ(io::parse_edge_list(io::edge_list(Graph(4))), Graph(4));
    auto dir = scratch("graph");
    io::write_graph(dir / "g.edges", g);
    EXPECT_EQ(io::read_graph(dir / "g.edges"), g);
    auto y = Labeling::from_labels({2, 0, 1, 1});
    io::write_labels(dir / "y.json", y);
    EXPECT_EQ(io::read_labels(dir / "y.json"), y);
    EXPECT_EQ(kind_of([] { io::parse_edge_list("0 1\n"); }), ErrorKind::Format);
    EXPECT_THROW(io::parse_edge_list("num_nodes 2\n0 9\n"), Error);
}

TEST(Io, ClassNodesRoundTrip) {
    auto aug = classification_graph({{0}, {1}, {0}, {2}}, false);
    auto back = io::augmented_from_json(aug.graph, io::class_nodes_json(aug));
    EXPECT_EQ(back.num_samples, aug.num_samples);
    EXPECT_EQ(back.num_classes, aug.num_classes);
    EXPECT_EQ(back.class_of_node, aug.class_of_node);
}

TEST(Io, SurfaceAndPlacementsRoundTrip) {
    auto s = assign_topics(build_tiling(Topology::Moebius, 3), 4, 1);
    auto back = io::surface_from_json(io::surface_json(s));
    EXPECT_EQ(back.topology, s.topology);
    EXPECT_EQ(back.num_vertices, s.num_vertices);
    EXPECT_EQ(back.triangles, s.triangles);
    EXPECT_EQ(back.neighbors, s.neighbors);
    EXPECT_EQ(back.topic_of_vertex, s.topic_of_vertex);

    std::vector<PlacedSample> ps{{3, 1, {0.2, 0.3, 0.5}}, {0, 4, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
    auto pb = io::placements_from_jsonl(io::placements_jsonl(ps));
    ASSERT_EQ(pb.size(), 2u);
    EXPECT_EQ(pb[1].sample_id, 0);
    EXPECT_EQ(pb[1].triangle, 4);
    EXPECT_EQ(pb[1].barycentric, ps[1].barycentric);
}

TEST(Io, GdvCsvShape) {
    auto csv = io::gdv_csv(Graph(3, {{0, 1}, {1, 2}}));
    auto lines = io::lines_of(csv);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0].rfind("node,o0,o1,", 0), 0u);
    EXPECT_EQ(io::split_csv(lines[0]).size(), 16u);
    // the middle of a path has degree 2 and sits at the center of one 2-path
    EXPECT_EQ(io::split_csv(lines[2])[1], "2");
}

TEST(Io, CheckpointIsBitExact) {
    auto p = init_parameters(EncoderConfig::reference(11, 5), 7);
    auto back = io::checkpoint_from_json(nlohmann::json::parse(io::checkpoint_json(p).dump()));
    EXPECT_EQ(back, p);
    auto dir = scratch("ckpt");
    io::write_checkpoint(dir / "c.json", p);
    EXPECT_EQ(io::read_checkpoint(dir / "c.json"), p);
    EXPECT_FALSE(fs::exists(dir / "c.json.tmp"));

    auto j = io::checkpoint_json(p);
    j["tensors"][0]["rows"] = 3;
    EXPECT_EQ(kind_of([&] { io::checkpoint_from_json(j); }), ErrorKind::Format);
    j = io::checkpoint_json(p);
    j["version"] = 99;
    EXPECT_EQ(kind_of([&] { io::checkpoint_from_json(j); }), ErrorKind::Format);
    j = io::checkpoint_json(p);
    j["tensors"].erase(j["tensors"].size() - 1);
    EXPECT_EQ(kind_of([&] { io::checkpoint_from_json(j); }), ErrorKind::Format);
}

TEST(Io, HistoryAndReportRoundTrip) {
    TrainHistory h;
    h.epochs.push_back({});
    h.epochs.back().epoch = 0;
    h.epochs.back().l_m = 3.25;
    h.epochs.back().l_si = 0.125;
    h.epochs.back().combined = 0.9 * 3.25 + 0.1 * 0.125;
    auto csv = io::history_csv(h);
    EXPECT_EQ(io::lines_of(csv)[0], "epoch,l_m,l_si,combined");
    EXPECT_TRUE(io::history_from_csv(csv).same_losses(h));

    EvalReport r;
    r.lc = 0.8;
    r.knn_macro_auroc = 0.7;
    r.knn_accuracy = 0.6;
    r.k = 5;
    r.recovery.margin = 0.1;
    r.retrieval.ap = 0.4;
    r.retrieval.evaluated_nodes = 12;
    r.theorem_checked = true;
    auto back = io::report_from_json(io::report_json(r));
    EXPECT_EQ(back.lc, r.lc);
    EXPECT_EQ(back.knn_macro_auroc, r.knn_macro_auroc);
    EXPECT_EQ(back.knn_accuracy, r.knn_accuracy);
    EXPECT_EQ(back.k, 5);
    EXPECT_EQ(back.recovery.margin, 0.1);
    EXPECT_EQ(back.retrieval.ap, 0.4);
    EXPECT_EQ(back.retrieval.evaluated_nodes, 12);
    EXPECT_TRUE(back.theorem_checked);
    EXPECT_FALSE(back.theorem_holds);
}
