#pragma once

// Readers and writers for every on-disk artifact. Writers go through a temporary file that is renamed
// into place once complete.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sipt/corpus.hpp"
#include "sipt/encoder.hpp"
#include "sipt/error.hpp"
#include "sipt/evaluation.hpp"
#include "sipt/graph.hpp"
#include "sipt/graph_builders.hpp"
#include "sipt/manifold.hpp"
#include "sipt/mechanistic.hpp"
#include "sipt/trainer.hpp"

namespace sipt::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kCheckpointVersion = 1;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size(), ErrorKind::Format, "not a number: '" + s + "'");
    return v;
}

inline void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// ---------------------------------------------------------------------------- corpus

inline std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& s : corpus) {
        json j = {{"id", s.id}, {"tokens", s.tokens}, {"theta", s.theta}, {"label", s.topic_label}};
        out += j.dump() + "\n";
    }
    return out;
}

inline Corpus corpus_from_jsonl(const std::string& text) {
    Corpus c;
    for (const auto& line : lines_of(text)) {
        try {
            auto j = json::parse(line);
            Sample s;
            s.id = j.at("id").get<int>();
            s.tokens = j.at("tokens").get<std::vector<int>>();
            s.theta = j.at("theta").get<std::vector<double>>();
            s.topic_label = j.at("label").get<int>();
            c.push_back(std::move(s));
        } catch (const json::exception& e) {
            fail(ErrorKind::Format, std::string("corpus line: ") + e.what());
        }
    }
    return c;
}

inline void write_corpus(const fs::path& path, const Corpus& c) { write_text(path, corpus_to_jsonl(c)); }
inline Corpus read_corpus(const fs::path& path) { return corpus_from_jsonl(read_text(path)); }

// ---------------------------------------------------------------------------- graphs and labels

inline std::string edge_list(const Graph& g) {
    std::string out = "num_nodes " + std::to_string(g.num_nodes()) + "\n";
    for (auto [u, v] : g.edges()) out += std::to_string(u) + " " + std::to_string(v) + "\n";
    return out;
}

inline Graph parse_edge_list(const std::string& text) {
    auto lines = lines_of(text);
    require(!lines.empty(), ErrorKind::Format, "edge list is empty");
    std::istringstream head(lines[0]);
    std::string key;
    int n = -1;
    head >> key >> n;
    require(key == "num_nodes" && n >= 0, ErrorKind::Format, "edge list must start with 'num_nodes N'");
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::istringstream in(lines[i]);
        int u = -1, v = -1;
        require(static_cast<bool>(in >> u >> v), ErrorKind::Format, "bad edge line: '" + lines[i] + "'");
        edges.emplace_back(u, v);
    }
    return Graph(n, edges);
}

inline void write_graph(const fs::path& path, const Graph& g) { write_text(path, edge_list(g)); }
inline Graph read_graph(const fs::path& path) { return parse_edge_list(read_text(path)); }

inline void write_labels(const fs::path& path, const Labeling& y) { write_text(path, json(y.labels).dump() + "\n"); }

inline Labeling read_labels(const fs::path& path) {
    try {
        return Labeling::from_labels(read_json(path).get<std::vector<int>>());
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

/// Class-node sidecar: {"num_samples": n, "num_classes": c, "class_of_node": {"<node>": class, ...}}.
inline json class_nodes_json(const AugmentedGraph& a) {
    json m = json::object();
    for (auto [node, cls] : a.class_of_node) m[std::to_string(node)] = cls;
    return {{"num_samples", a.num_samples}, {"num_classes", a.num_classes}, {"class_of_node", m}};
}

inline AugmentedGraph augmented_from_json(const Graph& g, const json& j) {
    AugmentedGraph a;
    a.graph = g;
    a.num_samples = j.at("num_samples").get<int>();
    a.num_classes = j.at("num_classes").get<int>();
    for (auto& [k, v] : j.at("class_of_node").items()) a.class_of_node[std::stoi(k)] = v.get<int>();
    return a;
}

// ---------------------------------------------------------------------------- surfaces

inline json surface_json(const SimplicialSurface& s) {
    json tris = json::array();
    for (const auto& t : s.triangles) tris.push_back({t[0], t[1], t[2]});
    return {{"topology", to_string(s.topology)},
            {"vertices", s.num_vertices},
            {"triangles", tris},
            {"topic_of_vertex", s.topic_of_vertex}};
}

inline SimplicialSurface surface_from_json(const json& j) {
    SimplicialSurface s;
    try {
        s.topology = topology_from_string(j.at("topology").get<std::string>());
        s.num_vertices = j.at("vertices").get<int>();
        for (const auto& t : j.at("triangles")) s.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        s.topic_of_vertex = j.at("topic_of_vertex").get<std::vector<int>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("surface: ") + e.what());
    }
    detail::link_triangles(s);
    return s;
}

inline std::string placements_jsonl(const std::vector<PlacedSample>& ps) {
    std::string out;
    for (const auto& p : ps) {
        json j = {{"sample_id", p.sample_id}, {"triangle", p.triangle}, {"barycentric", p.barycentric}};
        out += j.dump() + "\n";
    }
    return out;
}

inline std::vector<PlacedSample> placements_from_jsonl(const std::string& text) {
    std::vector<PlacedSample> out;
    for (const auto& line : lines_of(text)) {
        try {
            auto j = json::parse(line);
            PlacedSample p;
            p.sample_id = j.at("sample_id").get<int>();
            p.triangle = j.at("triangle").get<int>();
            p.barycentric = j.at("barycentric").get<std::array<double, 3>>();
            out.push_back(p);
        } catch (const json::exception& e) {
            fail(ErrorKind::Format, std::string("placement line: ") + e.what());
        }
    }
    return out;
}

inline std::string gdv_csv(const Graph& g) {
    std::string out = "node";
    for (int o = 0; o < 15; ++o) out += ",o" + std::to_string(o);
    out += "\n";
    for (int v = 0; v < g.num_nodes(); ++v) {
        out += std::to_string(v);
        for (long long c : gdv(g, v)) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------- checkpoints

inline json encoder_config_json(const EncoderConfig& c) {
    return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"num_layers", c.num_layers},
            {"num_heads", c.num_heads},   {"ff_dim", c.ff_dim},       {"max_seq_len", c.max_seq_len},
            {"pooling", to_string(c.pooling)}};
}

inline EncoderConfig encoder_config_from_json(const json& j, EncoderConfig c = {}) {
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.num_heads = j.value("num_heads", c.num_heads);
    c.ff_dim = j.value("ff_dim", c.ff_dim);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    if (j.contains("pooling")) c.pooling = pooling_from_string(j.at("pooling").get<std::string>());
    return c;
}

inline json checkpoint_json(const EncoderParameters& p) {
    json tensors = json::array();
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
        tensors.push_back({{"name", p.names[i]},
                           {"rows", p.tensors[i].rows},
                           {"cols", p.tensors[i].cols},
                           {"data", p.tensors[i].data}});
    }
    return {{"format", "sipt-checkpoint"}, {"version", kCheckpointVersion}, {"config", encoder_config_json(p.config)},
            {"tensors", tensors}};
}

inline EncoderParameters checkpoint_from_json(const json& j) {
    try {
        require(j.at("format") == "sipt-checkpoint", ErrorKind::Format, "not a checkpoint");
        require(j.at("version").get<int>() == kCheckpointVersion, ErrorKind::Format, "unsupported checkpoint version");
        EncoderParameters p;
        p.config = encoder_config_from_json(j.at("config"));
        p.config.validate();
        const auto shapes = detail::parameter_shapes(p.config);
        const auto& ts = j.at("tensors");
        require(ts.size() == shapes.size(), ErrorKind::Format, "checkpoint tensor count does not match its config");
        for (std::size_t i = 0; i < ts.size(); ++i) {
            ad::Tensor t(ts[i].at("rows").get<int>(), ts[i].at("cols").get<int>());
            t.data = ts[i].at("data").get<std::vector<double>>();
            require(t.rows == shapes[i].rows && t.cols == shapes[i].cols && t.data.size() == t.size() &&
                        ts[i].at("name") == shapes[i].name,
                    ErrorKind::Format, "checkpoint tensor " + std::to_string(i) + " has the wrong shape or name");
            p.names.push_back(shapes[i].name);
            p.tensors.push_back(std::move(t));
        }
        return p;
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("checkpoint: ") + e.what());
    }
}

inline void write_checkpoint(const fs::path& path, const EncoderParameters& p) { write_text(path, checkpoint_json(p).dump() + "\n"); }
inline EncoderParameters read_checkpoint(const fs::path& path) { return checkpoint_from_json(read_json(path)); }

// ---------------------------------------------------------------------------- histories and reports

inline std::string history_csv(const TrainHistory& h) {
    std::string out = "epoch,l_m,l_si,combined\n";
    for (const auto& e : h.epochs) {
        out += std::to_string(e.epoch) + "," + format_double(e.l_m) + "," + format_double(e.l_si) + "," +
               format_double(e.combined) + "\n";
    }
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

inline TrainHistory history_from_csv(const std::string& text) {
    auto lines = lines_of(text);
    require(!lines.empty() && lines[0] == "epoch,l_m,l_si,combined", ErrorKind::Format, "bad history header");
    TrainHistory h;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv(lines[i]);
        require(cells.size() == 4, ErrorKind::Format, "bad history row: '" + lines[i] + "'");
        EpochRecord r;
        r.epoch = std::stoi(cells[0]);
        r.l_m = parse_double(cells[1]);
        r.l_si = parse_double(cells[2]);
        r.combined = parse_double(cells[3]);
        h.epochs.push_back(r);
    }
    return h;
}

inline json report_json(const EvalReport& r) {
    return {{"lc", r.lc},
            {"knn_macro_auroc", r.knn_macro_auroc},
            {"knn_accuracy", r.knn_accuracy},
            {"k", r.k},
            {"slack", r.slack},
            {"recovery", {{"margin", r.recovery.margin}, {"best_radius", r.recovery.best_radius}, {"edge_f1", r.recovery.edge_f1}}},
            {"retrieval",
             {{"lrap", r.retrieval.lrap},
              {"ndcg", r.retrieval.ndcg},
              {"ap", r.retrieval.ap},
              {"mrr", r.retrieval.mrr},
              {"evaluated_nodes", r.retrieval.evaluated_nodes},
              {"skipped_nodes", r.retrieval.skipped_nodes}}},
            {"theorem_checked", r.theorem_checked},
            {"theorem_holds", r.theorem_holds}};
}

inline EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.lc = j.at("lc").get<double>();
    r.knn_macro_auroc = j.at("knn_macro_auroc").get<double>();
    r.knn_accuracy = j.at("knn_accuracy").get<double>();
    r.k = j.at("k").get<int>();
    r.slack = j.at("slack").get<double>();
    const auto& rec = j.at("recovery");
    r.recovery.margin = rec.at("margin").get<double>();
    r.recovery.best_radius = rec.at("best_radius").get<double>();
    r.recovery.edge_f1 = rec.at("edge_f1").get<double>();
    const auto& ret = j.at("retrieval");
    r.retrieval.lrap = ret.at("lrap").get<double>();
    r.retrieval.ndcg = ret.at("ndcg").get<double>();
    r.retrieval.ap = ret.at("ap").get<double>();
    r.retrieval.mrr = ret.at("mrr").get<double>();
    r.retrieval.evaluated_nodes = ret.at("evaluated_nodes").get<int>();
    r.retrieval.skipped_nodes = ret.at("skipped_nodes").get<int>();
    r.theorem_checked = j.at("theorem_checked").get<bool>();
    r.theorem_holds = j.at("theorem_holds").get<bool>();
    return r;
}

}  // namespace sipt::io
