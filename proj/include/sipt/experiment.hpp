#pragma once

// Config-driven orchestration: corpus -> graph -> MPT and SIPT arms -> evaluation -> artifacts.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sipt/io.hpp"

namespace sipt {

enum class GraphVariant { Cliques, Plane, Moebius, Sphere, Torus, Neighborhood, Motif, Structural, Classification };

inline std::string to_string(GraphVariant v) {
    switch (v) {
        case GraphVariant::Cliques: return "cliques";
        case GraphVariant::Plane: return "plane";
        case GraphVariant::Moebius: return "moebius";
        case GraphVariant::Sphere: return "sphere";
        case GraphVariant::Torus: return "torus";
        case GraphVariant::Neighborhood: return "neighborhood";
        case GraphVariant::Motif: return "motif";
        case GraphVariant::Structural: return "structural";
        case GraphVariant::Classification: return "classification";
    }
    return "?";
}

inline GraphVariant graph_variant_from_string(const std::string& s) {
    for (auto v : {GraphVariant::Cliques, GraphVariant::Plane, GraphVariant::Moebius, GraphVariant::Sphere,
                   GraphVariant::Torus, GraphVariant::Neighborhood, GraphVariant::Motif, GraphVariant::Structural,
                   GraphVariant::Classification}) {
        if (to_string(v) == s) return v;
    }
    fail(ErrorKind::InvalidArgument, "unknown graph variant '" + s + "'");
}

inline bool is_manifold(GraphVariant v) {
    return v == GraphVariant::Plane || v == GraphVariant::Moebius || v == GraphVariant::Sphere || v == GraphVariant::Torus;
}

inline bool is_mechanistic(GraphVariant v) {
    return v == GraphVariant::Neighborhood || v == GraphVariant::Motif || v == GraphVariant::Structural;
}

inline Topology topology_of(GraphVariant v) {
    switch (v) {
        case GraphVariant::Moebius: return Topology::Moebius;
        case GraphVariant::Sphere: return Topology::Sphere;
        case GraphVariant::Torus: return Topology::Torus;
        default: return Topology::Plane;
    }
}

struct CorpusSettings {
    int num_topics = 12;
    int vocab_size = 60;
    int num_samples = 1200;
    int seq_len = 32;
    double sharpness = 0.05;
    double mixture_concentration = 0.5;
};

struct GraphSettings {
    GraphVariant variant = GraphVariant::Cliques;
    double noise_rate = 0.0;
    // manifolds
    int resolution = 4;
    int quota = 4;
    int entropy_bins = 5;
    int target_degree = 6;
    // mechanistic
    int cycle_len = 40;
    int copies_per_shape = 5;
    int k_clusters = 4;
    // classification
    bool multi_task = false;
};

struct EvalSettings {
    int k = 3;
    double slack = 0.05;
};

inline TrainConfig default_experiment_training() {
    TrainConfig t;
    t.learning_rate = 3e-3;
    return t;
}

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "runs/experiment";
    CorpusSettings corpus;
    GraphSettings graph;
    EncoderConfig encoder;  // vocab_size and max_seq_len are derived from the corpus block
    SILossConfig loss;
    TrainConfig train = default_experiment_training();
    EvalSettings eval;
};

// ---------------------------------------------------------------------------- config JSON

inline nlohmann::json config_json(const ExperimentConfig& c) {
    using nlohmann::json;
    return {
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"corpus",
         {{"num_topics", c.corpus.num_topics},
          {"vocab_size", c.corpus.vocab_size},
          {"num_samples", c.corpus.num_samples},
          {"seq_len", c.corpus.seq_len},
          {"sharpness", c.corpus.sharpness},
          {"mixture_concentration", c.corpus.mixture_concentration}}},
        {"graph",
         {{"variant", to_string(c.graph.variant)},
          {"noise_rate", c.graph.noise_rate},
          {"resolution", c.graph.resolution},
          {"quota", c.graph.quota},
          {"entropy_bins", c.graph.entropy_bins},
          {"target_degree", c.graph.target_degree},
          {"cycle_len", c.graph.cycle_len},
          {"copies_per_shape", c.graph.copies_per_shape},
          {"k_clusters", c.graph.k_clusters},
          {"multi_task", c.graph.multi_task}}},
        {"encoder",
         {{"embed_dim", c.encoder.embed_dim},
          {"num_layers", c.encoder.num_layers},
          {"num_heads", c.encoder.num_heads},
          {"ff_dim", c.encoder.ff_dim},
          {"pooling", to_string(c.encoder.pooling)}}},
        {"loss",
         {{"loss", to_string(c.loss.kind)},
          {"lambda_si", c.train.weights.lambda_si},
          {"w_plus", c.loss.multisim.w_plus},
          {"w_minus", c.loss.multisim.w_minus},
          {"t", c.loss.multisim.threshold},
          {"mu_plus", c.loss.contrastive.mu_plus},
          {"mu_minus", c.loss.contrastive.mu_minus},
          {"neg_strategy", to_string(c.loss.negatives)},
          {"mask_fraction", c.loss.mask_fraction}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"optimizer", to_string(c.train.optimizer)},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"epsilon", c.train.epsilon},
          {"steps_per_epoch", c.train.steps_per_epoch}}},
        {"eval", {{"k", c.eval.k}, {"slack", c.eval.slack}}},
    };
}

namespace detail {

template <typename T>
void take(const nlohmann::json& block, const char* key, T& field) {
    if (block.contains(key)) field = block.at(key).get<T>();
}

inline void check_keys(const nlohmann::json& block, const nlohmann::json& reference, const std::string& where) {
    require(block.is_object(), ErrorKind::Format, where + " must be a JSON object");
    for (auto& [k, v] : block.items()) {
        require(reference.contains(k), ErrorKind::Format, "unknown key '" + k + "' in " + where);
    }
}

}  // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
    using detail::take;
    const auto ref = config_json(c);
    try {
        detail::check_keys(j, ref, "config");
        take(j, "seed", c.seed);
        take(j, "output_dir", c.output_dir);
        if (j.contains("corpus")) {
            const auto& b = j.at("corpus");
            detail::check_keys(b, ref.at("corpus"), "corpus");
            take(b, "num_topics", c.corpus.num_topics);
            take(b, "vocab_size", c.corpus.vocab_size);
            take(b, "num_samples", c.corpus.num_samples);
            take(b, "seq_len", c.corpus.seq_len);
            take(b, "sharpness", c.corpus.sharpness);
            take(b, "mixture_concentration", c.corpus.mixture_concentration);
        }
        if (j.contains("graph")) {
            const auto& b = j.at("graph");
            detail::check_keys(b, ref.at("graph"), "graph");
            if (b.contains("variant")) c.graph.variant = graph_variant_from_string(b.at("variant").get<std::string>());
            take(b, "noise_rate", c.graph.noise_rate);
            take(b, "resolution", c.graph.resolution);
            take(b, "quota", c.graph.quota);
            take(b, "entropy_bins", c.graph.entropy_bins);
            take(b, "target_degree", c.graph.target_degree);
            take(b, "cycle_len", c.graph.cycle_len);
            take(b, "copies_per_shape", c.graph.copies_per_shape);
            take(b, "k_clusters", c.graph.k_clusters);
            take(b, "multi_task", c.graph.multi_task);
        }
        if (j.contains("encoder")) {
            const auto& b = j.at("encoder");
            detail::check_keys(b, ref.at("encoder"), "encoder");
            take(b, "embed_dim", c.encoder.embed_dim);
            take(b, "num_layers", c.encoder.num_layers);
            take(b, "num_heads", c.encoder.num_heads);
            take(b, "ff_dim", c.encoder.ff_dim);
            if (b.contains("pooling")) c.encoder.pooling = pooling_from_string(b.at("pooling").get<std::string>());
        }
        if (j.contains("loss")) {
            const auto& b = j.at("loss");
            detail::check_keys(b, ref.at("loss"), "loss");
            if (b.contains("loss")) c.loss.kind = si_loss_from_string(b.at("loss").get<std::string>());
            take(b, "lambda_si", c.train.weights.lambda_si);
            take(b, "w_plus", c.loss.multisim.w_plus);
            take(b, "w_minus", c.loss.multisim.w_minus);
            take(b, "t", c.loss.multisim.threshold);
            take(b, "mu_plus", c.loss.contrastive.mu_plus);
            take(b, "mu_minus", c.loss.contrastive.mu_minus);
            if (b.contains("neg_strategy")) {
                c.loss.negatives = negative_strategy_from_string(b.at("neg_strategy").get<std::string>());
            }
            take(b, "mask_fraction", c.loss.mask_fraction);
        }
        if (j.contains("train")) {
            const auto& b = j.at("train");
            detail::check_keys(b, ref.at("train"), "train");
            take(b, "epochs", c.train.epochs);
            take(b, "batch_size", c.train.batch_size);
            take(b, "learning_rate", c.train.learning_rate);
            if (b.contains("optimizer")) c.train.optimizer = optimizer_from_string(b.at("optimizer").get<std::string>());
            take(b, "beta1", c.train.beta1);
            take(b, "beta2", c.train.beta2);
            take(b, "epsilon", c.train.epsilon);
            take(b, "steps_per_epoch", c.train.steps_per_epoch);
        }
        if (j.contains("eval")) {
            const auto& b = j.at("eval");
            detail::check_keys(b, ref.at("eval"), "eval");
            take(b, "k", c.eval.k);
            take(b, "slack", c.eval.slack);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Format, std::string("config: ") + e.what());
    }
    return c;
}

inline void validate(const ExperimentConfig& c) {
    require(c.graph.noise_rate >= 0.0, ErrorKind::InvalidArgument, "noise_rate must be nonnegative");
    require(c.eval.k >= 1, ErrorKind::InvalidArgument, "eval k must be positive");
    require(c.loss.mask_fraction > 0.0 && c.loss.mask_fraction <= 1.0, ErrorKind::InvalidArgument,
            "mask_fraction must lie in (0, 1]");
    require(c.loss.contrastive.mu_minus > c.loss.contrastive.mu_plus && c.loss.contrastive.mu_plus >= 0.0,
            ErrorKind::InvalidArgument, "contrastive margins need mu_minus > mu_plus >= 0");
    require(c.loss.multisim.w_plus > 0.0 && c.loss.multisim.w_minus > 0.0, ErrorKind::InvalidArgument,
            "multi-similarity weights must be positive");
    c.train.validate();
    TrainConfig sipt = c.train;
    sipt.mpt_only = false;
    sipt.validate();
}

/// Raises any library error from `fn` with the stage name prepended.
template <typename F>
auto in_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + stage + ": " + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorKind::Io, "stage " + stage + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------- dataset

/// Everything the two arms share: one token sequence, one FT label and one graph node per entry.
struct Dataset {
    Corpus corpus;                     // full generated corpus
    std::vector<int> corpus_index;     // corpus row per node, -1 for class nodes
    std::vector<std::vector<int>> sequences;
    Labeling labels;
    Graph graph;                       // before noise
    int extra_tokens = 0;
    std::optional<AugmentedGraph> augmented;
    std::optional<SimplicialSurface> surface;
    std::vector<PlacedSample> placements;
    std::optional<MotifGraph> motif;
};

inline Corpus generate_corpus(const CorpusSettings& s, std::uint64_t seed) {
    auto model = generate_topic_model(s.num_topics, s.vocab_size, s.sharpness, seed, s.mixture_concentration);
    return sample_corpus(model, s.num_samples, s.seq_len, seed);
}

inline Dataset build_dataset(const ExperimentConfig& c) {
    Dataset d;
    d.corpus = in_stage("generate-corpus", [&] { return generate_corpus(c.corpus, c.seed); });
    in_stage("build-graph", [&] {
        const auto v = c.graph.variant;
        auto use_rows = [&](const std::vector<int>& rows, std::vector<int> labels) {
            d.corpus_index = rows;
            for (int r : rows) d.sequences.push_back(d.corpus[r].tokens);
            d.labels = Labeling::from_labels(std::move(labels));
        };
        if (v == GraphVariant::Cliques) {
            std::vector<int> rows(d.corpus.size()), labels;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                rows[i] = static_cast<int>(i);
                labels.push_back(d.corpus[i].topic_label);
            }
            use_rows(rows, labels);
            d.graph = cliques_graph(d.corpus);
        } else if (v == GraphVariant::Classification) {
            std::vector<int> rows;
            std::vector<std::vector<int>> task;
            std::vector<int> labels;
            for (std::size_t i = 0; i < d.corpus.size(); ++i) {
                rows.push_back(static_cast<int>(i));
                task.push_back({d.corpus[i].topic_label});
                labels.push_back(d.corpus[i].topic_label);
            }
            auto aug = classification_graph(task, c.graph.multi_task);
            use_rows(rows, {});
            d.extra_tokens = aug.num_classes;
            for (int node = aug.num_samples; node < aug.graph.num_nodes(); ++node) {
                const int cls = aug.class_of_node.at(node);
                d.corpus_index.push_back(-1);
                d.sequences.push_back({c.corpus.vocab_size + cls});
                labels.push_back(cls);
            }
            d.labels = Labeling::from_labels(labels);
            d.graph = aug.graph;
            d.augmented = std::move(aug);
        } else if (is_manifold(v)) {
            auto surface = assign_topics(build_tiling(topology_of(v), c.graph.resolution), c.corpus.num_topics, c.seed);
            d.placements = localize_samples(surface, d.corpus, c.graph.quota, c.graph.entropy_bins, c.seed);
            std::vector<int> rows, labels;
            for (const auto& p : d.placements) {
                rows.push_back(p.sample_id);
                labels.push_back(d.corpus[p.sample_id].topic_label);
            }
            use_rows(rows, labels);
            WaypointGraph wg(surface, d.placements);
            d.graph = manifold_rnn_graph(wg, radius_for_median_degree(wg, c.graph.target_degree));
            d.surface = std::move(surface);
        } else {
            auto mg = build_motif_graph(c.graph.cycle_len, default_motif_templates(), c.graph.copies_per_shape, c.seed);
            Labeling node_labels = v == GraphVariant::Neighborhood ? homophily_labels(mg.graph, c.graph.k_clusters, c.seed)
                                   : v == GraphVariant::Motif      ? motif_labels(mg)
                                                                   : structural_labels(mg.graph, c.graph.k_clusters, c.seed);
            require(node_labels.num_classes <= c.corpus.num_topics, ErrorKind::InsufficientSamples,
                    "node labels need at most num_topics classes");
            use_rows(assign_corpus_to_nodes(d.corpus, node_labels, c.seed), node_labels.labels);
            d.labels = node_labels;
            d.graph = mg.graph;
            d.motif = std::move(mg);
        }
        return 0;
    });
    return d;
}

inline EncoderConfig encoder_for(const ExperimentConfig& c, const Dataset& d) {
    EncoderConfig e = c.encoder;
    e.vocab_size = c.corpus.vocab_size + d.extra_tokens + 2;
    e.max_seq_len = c.corpus.seq_len + 1;
    e.validate();
    return e;
}

// ---------------------------------------------------------------------------- runs

struct ArmResult {
    TrainResult training;
    Embeddings embeddings;
    EvalReport report;
};

struct ExperimentResult {
    Graph sipt_graph;
    ArmResult mpt;
    ArmResult sipt;
    std::string comparison_csv;
};

inline std::string comparison_header() { return "graph_variant,lc,mpt_auroc,sipt_auroc,delta\n"; }

inline std::string comparison_row(const std::string& variant, const EvalReport& mpt, const EvalReport& sipt) {
    using io::format_double;
    return variant + "," + format_double(sipt.lc) + "," + format_double(mpt.knn_macro_auroc) + "," +
           format_double(sipt.knn_macro_auroc) + "," + format_double(sipt.knn_macro_auroc - mpt.knn_macro_auroc) + "\n";
}

inline ArmResult train_arm(const std::string& name, const ExperimentConfig& c, const Dataset& d, const Graph& g,
                           bool mpt_only) {
    ArmResult arm;
    const EncoderConfig enc = encoder_for(c, d);
    TrainConfig tc = c.train;
    tc.mpt_only = mpt_only;
    tc.seed = c.seed;
    arm.training = in_stage("pretrain-" + name, [&] { return pretrain(d.sequences, g, enc, tc, c.loss); });
    arm.embeddings = in_stage("encode-" + name, [&] { return encode_samples(arm.training.params, d.sequences); });
    return arm;
}

inline void evaluate_arm(const std::string& name, const ExperimentConfig& c, const Dataset& d, const Graph& g, ArmResult& arm) {
    arm.report = in_stage("evaluate-" + name, [&] {
        return theory_report(g, d.labels, arm.embeddings, c.eval.k, c.eval.slack, c.loss.recovery_distance());
    });
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& d) {
    io::write_corpus(dir / "corpus.jsonl", d.corpus);
    io::write_labels(dir / "labels.json", d.labels);
    io::write_json(dir / "nodes.json", nlohmann::json(d.corpus_index));
    if (d.augmented) io::write_json(dir / "class_nodes.json", io::class_nodes_json(*d.augmented));
    if (d.surface) {
        io::write_json(dir / "surface.json", io::surface_json(*d.surface));
        io::write_text(dir / "placements.jsonl", io::placements_jsonl(d.placements));
    }
    if (d.motif) io::write_text(dir / "gdv.csv", io::gdv_csv(d.graph));
}

inline Graph noised_graph(const ExperimentConfig& c, const Dataset& d) {
    return in_stage("noise", [&] { return c.graph.noise_rate > 0.0 ? add_edge_noise(d.graph, c.graph.noise_rate, c.seed) : d.graph; });
}

/// Corpus, graph, labels and sidecars for `c`, written to its output directory.
inline Dataset build_graph_artifacts(const ExperimentConfig& c) {
    Dataset d = build_dataset(c);
    Graph g = noised_graph(c, d);
    in_stage("write-artifacts", [&] {
        write_dataset(c.output_dir, d);
        io::write_graph(std::filesystem::path(c.output_dir) / "graph.edges", g);
        return 0;
    });
    return d;
}

/// One arm alone; writes `<output_dir>/<arm>/checkpoint.json` and `history.csv`.
inline TrainResult pretrain_only(const ExperimentConfig& c, bool mpt_only) {
    in_stage("config", [&] {
        validate(c);
        return 0;
    });
    Dataset d = build_dataset(c);
    const std::string name = mpt_only ? "mpt" : "sipt";
    auto arm = train_arm(name, c, d, noised_graph(c, d), mpt_only);
    in_stage("write-artifacts", [&] {
        const auto dir = std::filesystem::path(c.output_dir) / name;
        io::write_checkpoint(dir / "checkpoint.json", arm.training.params);
        io::write_text(dir / "history.csv", io::history_csv(arm.training.history));
        return 0;
    });
    return arm.training;
}

inline Embeddings embed_dataset(const ExperimentConfig& c, const EncoderParameters& params) {
    Dataset d = build_dataset(c);
    require(params.config == encoder_for(c, d), ErrorKind::DimensionMismatch, "checkpoint does not match the config's encoder");
    return in_stage("encode", [&] { return encode_samples(params, d.sequences); });
}

inline EvalReport evaluate_checkpoint(const ExperimentConfig& c, const EncoderParameters& params) {
    Dataset d = build_dataset(c);
    require(params.config == encoder_for(c, d), ErrorKind::DimensionMismatch, "checkpoint does not match the config's encoder");
    const Graph g = noised_graph(c, d);
    const auto z = in_stage("encode", [&] { return encode_samples(params, d.sequences); });
    return in_stage("evaluate", [&] { return theory_report(g, d.labels, z, c.eval.k, c.eval.slack, c.loss.recovery_distance()); });
}

/// Both arms on one dataset. The MPT arm never looks at the graph, so a caller sweeping graph noise may pass
/// an already trained MPT arm for the same config and seed.
inline ExperimentResult run_experiment(const ExperimentConfig& c, const std::optional<ArmResult>& trained_mpt = std::nullopt) {
    in_stage("config", [&] {
        validate(c);
        return 0;
    });
    const std::filesystem::path dir = c.output_dir;
    Dataset d = build_dataset(c);
    ExperimentResult r;
    r.sipt_graph = noised_graph(c, d);

    r.mpt = trained_mpt ? *trained_mpt : train_arm("mpt", c, d, r.sipt_graph, true);
    r.sipt = train_arm("sipt", c, d, r.sipt_graph, false);
    evaluate_arm("mpt", c, d, r.sipt_graph, r.mpt);
    evaluate_arm("sipt", c, d, r.sipt_graph, r.sipt);
    r.comparison_csv = comparison_header() + comparison_row(to_string(c.graph.variant), r.mpt.report, r.sipt.report);

    in_stage("write-artifacts", [&] {
        io::write_json(dir / "config.json", config_json(c));
        write_dataset(dir, d);
        io::write_graph(dir / "graph.edges", r.sipt_graph);
        for (const auto* arm : {&r.mpt, &r.sipt}) {
            const std::string name = arm == &r.mpt ? "mpt" : "sipt";
            io::write_checkpoint(dir / name / "checkpoint.json", arm->training.params);
            io::write_text(dir / name / "history.csv", io::history_csv(arm->training.history));
        }
        io::write_json(dir / "report.json", {{"graph_variant", to_string(c.graph.variant)},
                                             {"noise_rate", c.graph.noise_rate},
                                             {"seed", c.seed},
                                             {"mpt", io::report_json(r.mpt.report)},
                                             {"sipt", io::report_json(r.sipt.report)}});
        io::write_text(dir / "comparison.csv", r.comparison_csv);
        return 0;
    });
    return r;
}

struct NoiseSweepRow {
    double rate = 0.0;
    double mpt_auroc = 0.0;
    double sipt_auroc = 0.0;
};

inline std::string noise_sweep_csv(const std::vector<NoiseSweepRow>& rows) {
    std::string out = "rate,mpt_auroc,sipt_auroc\n";
    for (const auto& r : rows) {
        out += io::format_double(r.rate) + "," + io::format_double(r.mpt_auroc) + "," + io::format_double(r.sipt_auroc) + "\n";
    }
    return out;
}

/// One experiment per rate in `<output_dir>/rate_<i>`; the MPT arm is trained once and shared.
inline std::vector<NoiseSweepRow> run_noise_sweep(const ExperimentConfig& base, const std::vector<double>& rates) {
    require(base.graph.variant == GraphVariant::Cliques, ErrorKind::InvalidArgument, "noise sweeps run on the cliques graph");
    std::vector<NoiseSweepRow> rows;
    std::optional<ArmResult> mpt;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        ExperimentConfig c = base;
        c.graph.noise_rate = rates[i];
        c.output_dir = (std::filesystem::path(base.output_dir) / ("rate_" + std::to_string(i))).string();
        auto r = run_experiment(c, mpt);
        if (!mpt) {
            mpt = r.mpt;
        }
        rows.push_back({rates[i], r.mpt.report.knn_macro_auroc, r.sipt.report.knn_macro_auroc});
    }
    in_stage("write-artifacts", [&] {
        io::write_text(std::filesystem::path(base.output_dir) / "noise_sweep.csv", noise_sweep_csv(rows));
        return 0;
    });
    return rows;
}

// ---------------------------------------------------------------------------- projection

struct Projection {
    std::vector<std::array<double, 2>> rows;
    bool degenerate = false;
};

/// Top-2 principal components from the eigendecomposition of the d x d covariance. Each component's sign
/// makes its largest-magnitude loading positive.
inline Projection export_projection(const Embeddings& embeddings) {
    require(embeddings.size() >= 3, ErrorKind::InsufficientSamples, "projection needs at least 3 embeddings");
    detail::check_same_dimension(embeddings);
    const Eigen::Index n = static_cast<Eigen::Index>(embeddings.size());
    const Eigen::Index d = static_cast<Eigen::Index>(embeddings[0].size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = embeddings[i][j];
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Projection p;
    p.rows.assign(embeddings.size(), {0.0, 0.0});
    if (cov.trace() <= 1e-12) {
        p.degenerate = true;
        return p;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int c = 0; c < 2 && c < d; ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        const Eigen::VectorXd proj = x * v;
        for (Eigen::Index i = 0; i < n; ++i) p.rows[i][c] = proj(i);
    }
    return p;
}

inline std::string projection_csv(const Projection& p) {
    std::string out = "pc1,pc2\n";
    for (const auto& r : p.rows) out += io::format_double(r[0]) + "," + io::format_double(r[1]) + "\n";
    return out;
}

}  // namespace sipt
