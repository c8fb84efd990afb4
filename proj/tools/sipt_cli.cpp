#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "sipt/experiment.hpp"

using namespace sipt;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> variant;
    std::optional<double> noise_rate;
    std::optional<int> epochs;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config_path, "experiment config JSON");
    sub->add_option("--set", c.sets, "override, e.g. train.learning_rate=0.01 (value parsed as JSON)");
    sub->add_option("--seed", c.seed);
    sub->add_option("-o,--output-dir", c.output_dir);
    sub->add_option("--variant", c.variant, "graph variant");
    sub->add_option("--noise-rate", c.noise_rate);
    sub->add_option("--epochs", c.epochs);
}

nlohmann::json parse_value(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        return text;
    }
}

ExperimentConfig load_config(const Common& c) {
    nlohmann::json j = c.config_path.empty() ? config_json(ExperimentConfig{}) : io::read_json(c.config_path);
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        require(eq != std::string::npos && eq > 0, ErrorKind::InvalidArgument, "--set expects key=value, got '" + s + "'");
        nlohmann::json* node = &j;
        std::stringstream path(s.substr(0, eq));
        std::string part;
        std::vector<std::string> parts;
        while (std::getline(path, part, '.')) parts.push_back(part);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
        (*node)[parts.back()] = parse_value(s.substr(eq + 1));
    }
    if (c.seed) j["seed"] = *c.seed;
    if (c.output_dir) j["output_dir"] = *c.output_dir;
    if (c.variant) j["graph"]["variant"] = *c.variant;
    if (c.noise_rate) j["graph"]["noise_rate"] = *c.noise_rate;
    if (c.epochs) j["train"]["epochs"] = *c.epochs;
    if (const char* env = std::getenv("SIPT_OUTPUT_DIR"); env && *env) j["output_dir"] = env;
    return config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-inducing pre-training experiments"};
    app.require_subcommand(1);

    Common common;
    std::string arm = "sipt";
    std::string checkpoint;
    std::string out;
    std::vector<double> rates{0.0, 0.05, 0.10, 0.15, 0.50};

    auto* gen = app.add_subcommand("generate-corpus", "sample a topic-model corpus");
    auto* graph = app.add_subcommand("build-graph", "corpus, pre-training graph and labels");
    auto* pre = app.add_subcommand("pretrain", "train one arm");
    pre->add_option("--arm", arm, "mpt or sipt")->check(CLI::IsMember({"mpt", "sipt"}));
    auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the config's graph");
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--out", out, "report path (default <output_dir>/eval_report.json)");
    auto* exp = app.add_subcommand("experiment", "both arms, evaluation and comparison");
    auto* sweep = app.add_subcommand("noise-sweep", "cliques experiment across edge-noise rates");
    sweep->add_option("--rates", rates)->delimiter(',');
    auto* proj = app.add_subcommand("project", "top-2 principal components of a checkpoint's embeddings");
    proj->add_option("--checkpoint", checkpoint)->required();
    proj->add_option("--out", out, "CSV path (default <output_dir>/projection.csv)");
    for (auto* s : {gen, graph, pre, eval, exp, sweep, proj}) add_common(s, common);

    CLI11_PARSE(app, argc, argv);

    std::string stage = "config";
    try {
        const ExperimentConfig cfg = load_config(common);
        const std::filesystem::path dir = cfg.output_dir;
        if (gen->parsed()) {
            stage = "generate-corpus";
            io::write_corpus(dir / "corpus.jsonl", generate_corpus(cfg.corpus, cfg.seed));
            std::cout << (dir / "corpus.jsonl").string() << "\n";
        } else if (graph->parsed()) {
            stage = "build-graph";
            build_graph_artifacts(cfg);
            std::cout << (dir / "graph.edges").string() << "\n";
        } else if (pre->parsed()) {
            stage = "pretrain";
            auto r = pretrain_only(cfg, arm == "mpt");
            std::cout << "final combined loss " << io::format_double(r.history.epochs.back().combined) << "\n";
        } else if (eval->parsed()) {
            stage = "evaluate";
            auto report = evaluate_checkpoint(cfg, io::read_checkpoint(checkpoint));
            const std::filesystem::path path = out.empty() ? dir / "eval_report.json" : std::filesystem::path(out);
            io::write_json(path, io::report_json(report));
            std::cout << io::report_json(report).dump(2) << "\n";
        } else if (exp->parsed()) {
            stage = "experiment";
            std::cout << run_experiment(cfg).comparison_csv;
        } else if (sweep->parsed()) {
            stage = "noise-sweep";
            std::cout << noise_sweep_csv(run_noise_sweep(cfg, rates));
        } else if (proj->parsed()) {
            stage = "project";
            auto p = export_projection(embed_dataset(cfg, io::read_checkpoint(checkpoint)));
            if (p.degenerate) std::cerr << "warning: degenerate covariance, projection is all zeros\n";
            const std::filesystem::path path = out.empty() ? dir / "projection.csv" : std::filesystem::path(out);
            io::write_text(path, projection_csv(p));
            std::cout << path.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "sipt " << stage << " failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
