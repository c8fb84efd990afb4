#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "sipt/experiment.hpp"

using namespace sipt;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const std::string& name, GraphVariant v = GraphVariant::Cliques) {
    ExperimentConfig c;
    c.output_dir = (fs::temp_directory_path() / ("sipt_exp_" + name)).string();
    fs::remove_all(c.output_dir);
    c.corpus.num_topics = 3;
    c.corpus.vocab_size = 12;
    c.corpus.num_samples = 48;
    c.corpus.seq_len = 6;
    c.corpus.sharpness = 0.3;
    c.graph.variant = v;
    c.train.epochs = 2;
    c.train.batch_size = 16;
    return c;
}

}  // namespace

TEST(ExperimentConfig, JsonRoundTripAndOverrides) {
    ExperimentConfig c;
    c.seed = 5;
    c.graph.variant = GraphVariant::Torus;
    c.loss.kind = SILossKind::MultiSimilarity;
    c.train.weights.lambda_si = 0.3;
    c.eval.k = 7;
    auto back = config_from_json(config_json(c));
    EXPECT_EQ(config_json(back), config_json(c));

    auto partial = config_from_json(nlohmann::json::parse(R"({"train": {"epochs": 3}, "graph": {"variant": "motif"}})"));
    EXPECT_EQ(partial.train.epochs, 3);
    EXPECT_EQ(partial.train.learning_rate, ExperimentConfig{}.train.learning_rate);
    EXPECT_EQ(partial.graph.variant, GraphVariant::Motif);

    try {
        config_from_json(nlohmann::json::parse(R"({"train": {"epoch": 3}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Format);
    }
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"train": {"epochs": "x"}})")), Error);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"graph": {"variant": "hypercube"}})")), Error);
}

TEST(Experiment, CliquesWritesArtifactsAndIsReproducible) {
    auto c = tiny("cliques");
    auto r = run_experiment(c);
    const fs::path dir = c.output_dir;
    for (const char* f : {"config.json", "corpus.jsonl", "graph.edges", "labels.json", "mpt/checkpoint.json",
                          "sipt/checkpoint.json", "mpt/history.csv", "sipt/history.csv", "report.json", "comparison.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    auto lines = io::lines_of(io::read_text(dir / "comparison.csv"));
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "graph_variant,lc,mpt_auroc,sipt_auroc,delta");
    EXPECT_EQ(lines[1].rfind("cliques,1,", 0), 0u);
    EXPECT_EQ(r.sipt.report.lc, 1.0);
    EXPECT_EQ(io::read_checkpoint(dir / "sipt" / "checkpoint.json"), r.sipt.training.params);
    EXPECT_EQ(config_json(config_from_json(io::read_json(dir / "config.json"))), config_json(c));
    EXPECT_EQ(r.mpt.training.si_batches_sampled, 0);
    EXPECT_GT(r.sipt.training.si_batches_sampled, 0);

    auto again = run_experiment(c);
    EXPECT_EQ(again.comparison_csv, r.comparison_csv);
    EXPECT_EQ(again.sipt.training.params, r.sipt.training.params);
}

TEST(Experiment, ReusedMptArmMatchesFreshOne) {
    auto c = tiny("reuse");
    c.graph.noise_rate = 0.1;
    auto fresh = run_experiment(c);
    auto reused = run_experiment(c, fresh.mpt);
    EXPECT_EQ(reused.mpt.training.params, fresh.mpt.training.params);
    EXPECT_EQ(reused.comparison_csv, fresh.comparison_csv);
    auto noiseless = tiny("reuse_clean");
    EXPECT_EQ(run_experiment(noiseless).mpt.training.params, fresh.mpt.training.params);
}

TEST(Experiment, OtherVariantsRun) {
    auto m = tiny("plane", GraphVariant::Plane);
    m.corpus.num_samples = 200;
    m.graph.resolution = 3;
    m.graph.quota = 3;
    m.graph.target_degree = 3;
    auto rm = run_experiment(m);
    EXPECT_TRUE(fs::exists(fs::path(m.output_dir) / "surface.json"));
    EXPECT_TRUE(fs::exists(fs::path(m.output_dir) / "placements.jsonl"));
    EXPECT_EQ(rm.sipt.embeddings.size(), static_cast<std::size_t>(rm.sipt_graph.num_nodes()));

    auto k = tiny("classification", GraphVariant::Classification);
    auto rk = run_experiment(k);
    EXPECT_EQ(rk.sipt_graph.num_nodes(), 48 + 3);
    EXPECT_TRUE(fs::exists(fs::path(k.output_dir) / "class_nodes.json"));

    auto s = tiny("structural", GraphVariant::Structural);
    s.corpus.num_topics = 4;
    s.corpus.num_samples = 400;
    s.graph.cycle_len = 20;
    s.graph.copies_per_shape = 2;
    s.graph.k_clusters = 3;
    auto rs = run_experiment(s);
    EXPECT_TRUE(fs::exists(fs::path(s.output_dir) / "gdv.csv"));
    EXPECT_GE(rs.sipt.report.knn_macro_auroc, 0.0);
}

TEST(Experiment, ErrorsNameTheStage) {
    auto c = tiny("errors", GraphVariant::Plane);
    c.graph.target_degree = 100000;
    try {
        run_experiment(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("stage build-graph"), std::string::npos) << e.what();
    }
    auto bad = tiny("errors2");
    bad.train.batch_size = 1;
    try {
        run_experiment(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
        EXPECT_NE(std::string(e.what()).find("stage config"), std::string::npos);
    }
}

TEST(NoiseSweep, WritesOneRowPerRateWithSharedBaseline) {
    auto c = tiny("sweep");
    auto rows = run_noise_sweep(c, {0.0, 0.2});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mpt_auroc, rows[1].mpt_auroc);
    auto lines = io::lines_of(io::read_text(fs::path(c.output_dir) / "noise_sweep.csv"));
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "rate,mpt_auroc,sipt_auroc");
    EXPECT_EQ(lines[2].rfind("0.2,", 0), 0u);
    c.graph.variant = GraphVariant::Torus;
    EXPECT_THROW(run_noise_sweep(c, {0.1}), Error);
}

TEST(Projection, RecoversPrincipalAxesWithFixedSigns) {
    // points spread along (1, 1, 0) with a smaller spread along (0, 0, -1)
    Embeddings z;
    for (int i = -5; i <= 5; ++i) {
        const double a = i, b = std::abs(i) % 2 ? 0.3 : -0.3;
        z.push_back({a + 1.0, a + 1.0, -b + 2.0});
    }
    auto p = export_projection(z);
    ASSERT_FALSE(p.degenerate);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double a = static_cast<double>(i) - 5.0;
        EXPECT_NEAR(std::abs(p.rows[i][0]), std::abs(a) * std::sqrt(2.0), 1e-9);
    }
    // the largest loading of pc1 is positive, so larger coordinates project higher
    EXPECT_GT(p.rows.back()[0], p.rows.front()[0]);
    double mean = 0;
    for (const auto& r : p.rows) mean += r[1];
    EXPECT_NEAR(mean, 0.0, 1e-9);

    auto flat = export_projection(Embeddings(4, std::vector<double>{1.0, 2.0}));
    EXPECT_TRUE(flat.degenerate);
    EXPECT_EQ(flat.rows[0][0], 0.0);
    EXPECT_EQ(io::lines_of(projection_csv(flat)).size(), 5u);
    EXPECT_THROW(export_projection(Embeddings{{1.0}, {2.0}}), Error);
}

TEST(ExperimentConfig, ShippedConfigsParse) {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(SIPT_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        auto c = config_from_json(io::read_json(entry.path()));
        EXPECT_NO_THROW(validate(c)) << entry.path();
        EXPECT_EQ(c.output_dir, "runs/" + entry.path().stem().string());
    }
    EXPECT_GE(seen, 9);
}
