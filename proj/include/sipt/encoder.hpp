#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sipt/autodiff.hpp"
#include "sipt/error.hpp"
#include "sipt/rng.hpp"

namespace sipt {

enum class Pooling { Cls, Mean };

inline std::string to_string(Pooling p) { return p == Pooling::Cls ? "cls" : "mean"; }

inline Pooling pooling_from_string(const std::string& s) {
    if (s == "cls") return Pooling::Cls;
    if (s == "mean") return Pooling::Mean;
    fail(ErrorKind::InvalidArgument, "unknown pooling '" + s + "'");
}

/// The last two token ids are reserved for MASK and CLS.
struct EncoderConfig {
    int vocab_size = 0;
    int embed_dim = 10;
    int num_layers = 2;
    int num_heads = 1;
    int ff_dim = 40;
    int max_seq_len = 0;
    Pooling pooling = Pooling::Cls;

    int mask_token() const { return vocab_size - 2; }
    int cls_token() const { return vocab_size - 1; }

    void validate() const {
        require(vocab_size >= 3, ErrorKind::InvalidArgument, "vocab_size must leave room for MASK and CLS");
        require(embed_dim >= 1 && num_layers >= 1 && num_heads >= 1 && ff_dim >= 1, ErrorKind::InvalidArgument,
                "encoder dimensions must be positive");
        require(embed_dim % num_heads == 0, ErrorKind::InvalidArgument, "embed_dim must be divisible by num_heads");
        require(max_seq_len >= 2, ErrorKind::InvalidArgument, "max_seq_len must fit CLS plus one token");
    }

    /// Reference setting: 2 layers, 10 units, 1 head. `extra_tokens` reserves ids after the corpus vocabulary
    /// (used for class-node sequences).
    static EncoderConfig reference(int corpus_vocab, int seq_len, int extra_tokens = 0) {
        EncoderConfig c;
        c.vocab_size = corpus_vocab + extra_tokens + 2;
        c.max_seq_len = seq_len + 1;
        return c;
    }

    static EncoderConfig large(int corpus_vocab, int seq_len, int extra_tokens = 0) {
        EncoderConfig c = reference(corpus_vocab, seq_len, extra_tokens);
        c.embed_dim = 256;
        c.num_layers = 3;
        c.num_heads = 4;
        c.ff_dim = 1024;
        return c;
    }

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Flat list of named tensors; the order below is fixed and used by checkpoints.
struct EncoderParameters {
    EncoderConfig config;
    std::vector<std::string> names;
    std::vector<ad::Tensor> tensors;

    static constexpr int kPerLayer = 16;
    static constexpr int kTokenEmbedding = 0;
    static constexpr int kPositionEmbedding = 1;
    static constexpr int kFirstLayer = 2;

    int layer_offset(int layer) const { return kFirstLayer + layer * kPerLayer; }
    int final_norm_gain() const { return kFirstLayer + config.num_layers * kPerLayer; }
    int final_norm_bias() const { return final_norm_gain() + 1; }
    int head_weight() const { return final_norm_gain() + 2; }
    int head_bias() const { return final_norm_gain() + 3; }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& t : tensors) n += t.size();
        return n;
    }

    friend bool operator==(const EncoderParameters&, const EncoderParameters&) = default;
};

namespace detail {

enum LayerSlot {
    kNorm1Gain, kNorm1Bias, kQuery, kQueryBias, kKey, kKeyBias, kValue, kValueBias,
    kOut, kOutBias, kNorm2Gain, kNorm2Bias, kFf1, kFf1Bias, kFf2, kFf2Bias
};

struct Shape {
    std::string name;
    int rows;
    int cols;
    double init;  // < 0 means normal(0, 0.02)
};

inline std::vector<Shape> parameter_shapes(const EncoderConfig& c) {
    const int d = c.embed_dim;
    std::vector<Shape> s{{"token_embedding", c.vocab_size, d, -1}, {"position_embedding", c.max_seq_len, d, -1}};
    for (int l = 0; l < c.num_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        s.push_back({p + "norm1.gain", 1, d, 1.0});
        s.push_back({p + "norm1.bias", 1, d, 0.0});
        s.push_back({p + "attn.query", d, d, -1});
        s.push_back({p + "attn.query_bias", 1, d, 0.0});
        s.push_back({p + "attn.key", d, d, -1});
        s.push_back({p + "attn.key_bias", 1, d, 0.0});
        s.push_back({p + "attn.value", d, d, -1});
        s.push_back({p + "attn.value_bias", 1, d, 0.0});
        s.push_back({p + "attn.out", d, d, -1});
        s.push_back({p + "attn.out_bias", 1, d, 0.0});
        s.push_back({p + "norm2.gain", 1, d, 1.0});
        s.push_back({p + "norm2.bias", 1, d, 0.0});
        s.push_back({p + "ff.w1", d, c.ff_dim, -1});
        s.push_back({p + "ff.b1", 1, c.ff_dim, 0.0});
        s.push_back({p + "ff.w2", c.ff_dim, d, -1});
        s.push_back({p + "ff.b2", 1, d, 0.0});
    }
    s.push_back({"final_norm.gain", 1, d, 1.0});
    s.push_back({"final_norm.bias", 1, d, 0.0});
    s.push_back({"head.weight", d, c.vocab_size, -1});
    s.push_back({"head.bias", 1, c.vocab_size, 0.0});
    return s;
}

}  // namespace detail

inline EncoderParameters init_parameters(const EncoderConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng = make_rng(seed, 9);
    EncoderParameters p;
    p.config = config;
    for (const auto& s : detail::parameter_shapes(config)) {
        ad::Tensor t(s.rows, s.cols, s.init < 0 ? 0.0 : s.init);
        if (s.init < 0) {
            for (auto& v : t.data) v = normal(rng, 0.0, 0.02);
        }
        p.names.push_back(s.name);
        p.tensors.push_back(std::move(t));
    }
    return p;
}

struct EmbeddingOutput {
    std::vector<std::vector<double>> per_token;
    std::vector<double> per_sample;
};

struct SequenceVars {
    ad::Var per_token;   // L x d, CLS row excluded
    ad::Var per_sample;  // 1 x d
};

inline std::vector<ad::Var> parameter_leaves(ad::Tape& tape, const EncoderParameters& params, bool requires_grad) {
    std::vector<ad::Var> vars;
    vars.reserve(params.tensors.size());
    for (const auto& t : params.tensors) vars.push_back(tape.leaf(t, requires_grad));
    return vars;
}

inline void check_tokens(const EncoderConfig& c, const std::vector<int>& tokens) {
    require(!tokens.empty(), ErrorKind::InvalidArgument, "empty token sequence");
    require(static_cast<int>(tokens.size()) + 1 <= c.max_seq_len, ErrorKind::SequenceTooLong,
            "sequence of length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                std::to_string(c.max_seq_len) + " with CLS");
    for (int t : tokens) {
        require(t >= 0 && t < c.vocab_size, ErrorKind::UnknownToken, "token id " + std::to_string(t) + " outside vocabulary");
    }
}

/// Records the encoder forward pass for one sequence (CLS is prepended here).
inline SequenceVars forward(const EncoderConfig& c, const std::vector<ad::Var>& p, const std::vector<int>& tokens) {
    using namespace ad;
    check_tokens(c, tokens);
    std::vector<int> ids;
    ids.reserve(tokens.size() + 1);
    ids.push_back(c.cls_token());
    ids.insert(ids.end(), tokens.begin(), tokens.end());
    const int len = static_cast<int>(ids.size());
    const int d = c.embed_dim;
    const int dh = d / c.num_heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Var x = add(gather_rows(p[EncoderParameters::kTokenEmbedding], ids),
                slice_rows(p[EncoderParameters::kPositionEmbedding], 0, len));
    for (int l = 0; l < c.num_layers; ++l) {
        const Var* w = &p[EncoderParameters::kFirstLayer + l * EncoderParameters::kPerLayer];
        using namespace detail;
        Var h = layer_norm(x, w[kNorm1Gain], w[kNorm1Bias]);
        Var q = add_row(matmul(h, w[kQuery]), w[kQueryBias]);
        Var k = add_row(matmul(h, w[kKey]), w[kKeyBias]);
        Var v = add_row(matmul(h, w[kValue]), w[kValueBias]);
        Var attended;
        if (c.num_heads == 1) {
            attended = matmul(softmax_rows(scale(matmul_bt(q, k), att_scale)), v);
        } else {
            std::vector<Var> heads;
            for (int hd = 0; hd < c.num_heads; ++hd) {
                Var qh = slice_cols(q, hd * dh, dh);
                Var kh = slice_cols(k, hd * dh, dh);
                Var vh = slice_cols(v, hd * dh, dh);
                heads.push_back(matmul(softmax_rows(scale(matmul_bt(qh, kh), att_scale)), vh));
            }
            attended = concat_cols(heads);
        }
        x = add(x, add_row(matmul(attended, w[kOut]), w[kOutBias]));
        Var h2 = layer_norm(x, w[kNorm2Gain], w[kNorm2Bias]);
        Var f = add_row(matmul(gelu(add_row(matmul(h2, w[kFf1]), w[kFf1Bias])), w[kFf2]), w[kFf2Bias]);
        x = add(x, f);
    }
    const int fg = EncoderParameters::kFirstLayer + c.num_layers * EncoderParameters::kPerLayer;
    Var out = layer_norm(x, p[fg], p[fg + 1]);
    Var tokens_out = slice_rows(out, 1, len - 1);
    Var pooled = c.pooling == Pooling::Cls ? slice_rows(out, 0, 1) : mean_rows(tokens_out);
    return {tokens_out, pooled};
}

/// Linear output head over per-token rows: logits over the full vocabulary.
inline ad::Var output_logits(const EncoderConfig& c, const std::vector<ad::Var>& p, ad::Var rows) {
    const int fg = EncoderParameters::kFirstLayer + c.num_layers * EncoderParameters::kPerLayer;
    return ad::add_row(ad::matmul(rows, p[fg + 2]), p[fg + 3]);
}

inline EmbeddingOutput encode(const EncoderParameters& params, const std::vector<int>& tokens) {
    ad::Tape tape;
    auto vars = parameter_leaves(tape, params, false);
    SequenceVars sv = forward(params.config, vars, tokens);
    EmbeddingOutput out;
    const int d = params.config.embed_dim;
    const auto& tv = tape.value(sv.per_token);
    for (int i = 0; i < tape.rows(sv.per_token); ++i) {
        out.per_token.emplace_back(tv.begin() + static_cast<std::ptrdiff_t>(i) * d, tv.begin() + static_cast<std::ptrdiff_t>(i + 1) * d);
    }
    out.per_sample = tape.value(sv.per_sample);
    return out;
}

/// Per-sample embeddings of many sequences.
inline std::vector<std::vector<double>> encode_samples(const EncoderParameters& params,
                                                       const std::vector<std::vector<int>>& sequences) {
    std::vector<std::vector<double>> out;
    out.reserve(sequences.size());
    for (const auto& s : sequences) {
        ad::Tape tape;
        auto vars = parameter_leaves(tape, params, false);
        out.push_back(tape.value(forward(params.config, vars, s).per_sample));
    }
    return out;
}

struct GradientResult {
    double loss = 0.0;
    std::vector<ad::Tensor> grads;
};

using LossClosure = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline GradientResult gradient(const EncoderParameters& params, const LossClosure& loss_closure) {
    ad::Tape tape;
    auto vars = parameter_leaves(tape, params, true);
    ad::Var loss = loss_closure(tape, vars);
    GradientResult r;
    r.loss = tape.scalar(loss);
    require(std::isfinite(r.loss), ErrorKind::NonFiniteLoss, "loss is not finite");
    tape.backward(loss);
    for (ad::Var v : vars) r.grads.push_back(tape.gradient_tensor(v));
    return r;
}

}  // namespace sipt
