#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sipt/autodiff.hpp"
#include "sipt/corpus.hpp"
#include "sipt/encoder.hpp"
#include "sipt/error.hpp"
#include "sipt/graph.hpp"
#include "sipt/losses.hpp"
#include "sipt/rng.hpp"

namespace sipt {

enum class Optimizer { Sgd, Adam };

inline std::string to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

inline Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::Sgd;
    if (s == "adam") return Optimizer::Adam;
    fail(ErrorKind::InvalidArgument, "unknown optimizer '" + s + "'");
}

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool mpt_only = false;
    LossWeights weights;
    std::uint64_t seed = 0;
    /// 0 means ceil(num_nodes / batch_size).
    int steps_per_epoch = 0;

    void validate() const {
        require(epochs >= 1, ErrorKind::InvalidArgument, "epochs must be >= 1");
        require(batch_size >= 2, ErrorKind::InvalidArgument, "batch_size must be >= 2");
        require(learning_rate >= 0.0, ErrorKind::InvalidArgument, "learning_rate must be nonnegative");
        if (!mpt_only) {
            require(weights.lambda_si > 0.0 && weights.lambda_si < 1.0, ErrorKind::InvalidArgument,
                    "lambda_si must lie in (0, 1)");
        }
    }
};

struct EpochRecord {
    int epoch = 0;
    double l_m = 0.0;
    double l_si = 0.0;
    double combined = 0.0;
    double seconds = 0.0;

    bool same_losses(const EpochRecord& o) const {
        return epoch == o.epoch && l_m == o.l_m && l_si == o.l_si && combined == o.combined;
    }
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    bool same_losses(const TrainHistory& o) const {
        if (epochs.size() != o.epochs.size()) return false;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            if (!epochs[i].same_losses(o.epochs[i])) return false;
        }
        return true;
    }
};

class AdamState {
public:
    explicit AdamState(const std::vector<ad::Tensor>& shapes) {
        for (const auto& t : shapes) {
            m_.emplace_back(t.size(), 0.0);
            v_.emplace_back(t.size(), 0.0);
        }
    }

    void step(std::vector<ad::Tensor>& params, const std::vector<ad::Tensor>& grads, const TrainConfig& c) {
        ++t_;
        if (c.optimizer == Optimizer::Sgd) {
            for (std::size_t p = 0; p < params.size(); ++p)
                for (std::size_t i = 0; i < params[p].size(); ++i) params[p].data[i] -= c.learning_rate * grads[p].data[i];
            return;
        }
        const double bc1 = 1.0 - std::pow(c.beta1, t_);
        const double bc2 = 1.0 - std::pow(c.beta2, t_);
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto& m = m_[p];
            auto& v = v_[p];
            for (std::size_t i = 0; i < params[p].size(); ++i) {
                const double g = grads[p].data[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                params[p].data[i] -= c.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.epsilon);
            }
        }
    }

private:
    std::vector<std::vector<double>> m_, v_;
    long long t_ = 0;
};

struct TrainResult {
    EncoderParameters params;
    TrainHistory history;
    long long si_batches_sampled = 0;
};

namespace detail {

inline void guard_divergence(double loss) {
    require(std::isfinite(loss) && loss <= 1e6, ErrorKind::Divergence, "combined loss diverged: " + std::to_string(loss));
}

}  // namespace detail

/// Pre-trains on one token sequence per graph node. Sequences of length 1 (class-node tokens) only
/// enter the structure-inducing loss.
inline TrainResult pretrain(const std::vector<std::vector<int>>& sequences, const Graph& g, const EncoderConfig& enc,
                            const TrainConfig& tc, const SILossConfig& si) {
    tc.validate();
    require(static_cast<int>(sequences.size()) == g.num_nodes(), ErrorKind::InvalidArgument,
            "graph has " + std::to_string(g.num_nodes()) + " nodes but " + std::to_string(sequences.size()) +
                " sequences were given");
    for (const auto& s : sequences) check_tokens(enc, s);

    TrainResult out;
    out.params = init_parameters(enc, tc.seed);
    AdamState opt(out.params.tensors);
    Rng rng = make_rng(tc.seed, 11);
    std::optional<SISampler> sampler;
    if (!tc.mpt_only) sampler.emplace(g, si.negatives);

    const int n = g.num_nodes();
    const int steps = tc.steps_per_epoch > 0 ? tc.steps_per_epoch : (n + tc.batch_size - 1) / tc.batch_size;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        for (int step = 0; step < steps; ++step) {
            SIBatch batch;
            if (tc.mpt_only) {
                for (std::size_t i : sample_without_replacement(rng, n, std::min<std::size_t>(tc.batch_size, n))) {
                    batch.members.push_back(static_cast<int>(i));
                }
            } else {
                batch = sampler->sample(tc.batch_size, rng);
                ++out.si_batches_sampled;
            }
            std::vector<std::vector<int>> masks(batch.members.size());
            bool any_mask = false;
            for (std::size_t i = 0; i < batch.members.size(); ++i) {
                const auto& s = sequences[batch.members[i]];
                if (s.size() >= 2) {
                    masks[i] = sample_mask(rng, static_cast<int>(s.size()), si.mask_fraction);
                    any_mask = true;
                }
            }
            double l_m = 0.0, l_si = 0.0;
            auto result = gradient(out.params, [&](ad::Tape& tape, const std::vector<ad::Var>& p) {
                std::vector<MaskedRows> parts;
                std::vector<ad::Var> pooled;
                for (std::size_t i = 0; i < batch.members.size(); ++i) {
                    const auto& s = sequences[batch.members[i]];
                    SequenceVars sv = forward(enc, p, masks[i].empty() ? s : apply_mask(enc, s, masks[i]));
                    if (!masks[i].empty()) parts.push_back(masked_rows(sv, s, masks[i]));
                    pooled.push_back(sv.per_sample);
                }
                ad::Var lm = any_mask ? masked_imputation_loss(enc, p, parts) : tape.constant(1, 1, 0.0);
                l_m = tape.scalar(lm);
                if (tc.mpt_only) return lm;
                ad::Var ls = si_loss(ad::concat_rows(pooled), batch, si);
                l_si = tape.scalar(ls);
                return combined_loss(lm, ls, tc.weights);
            });
            detail::guard_divergence(result.loss);
            rec.l_m += l_m;
            rec.l_si += l_si;
            rec.combined += result.loss;
            opt.step(out.params.tensors, result.grads, tc);
        }
        rec.l_m /= steps;
        rec.l_si /= steps;
        rec.combined /= steps;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.history.epochs.push_back(rec);
    }
    return out;
}

inline std::vector<std::vector<int>> corpus_sequences(const Corpus& corpus) {
    std::vector<std::vector<int>> out;
    out.reserve(corpus.size());
    for (const auto& s : corpus) out.push_back(s.tokens);
    return out;
}

inline TrainResult pretrain(const Corpus& corpus, const Graph& g, const EncoderConfig& enc, const TrainConfig& tc,
                            const SILossConfig& si) {
    return pretrain(corpus_sequences(corpus), g, enc, tc, si);
}

struct FreeEmbeddingResult {
    Embeddings embeddings;
    TrainHistory history;
    double final_loss = 0.0;
};

/// One free vector per node trained directly against the structure-inducing loss. When batch_size covers
/// every node, each step uses the exhaustive batch (all edges positive, all non-edges negative).
inline FreeEmbeddingResult pretrain_free_embeddings(const Graph& g, int dim, const SILossConfig& si, const TrainConfig& tc) {
    require(dim >= 2, ErrorKind::InvalidArgument, "dim must be >= 2");
    tc.validate();
    const int n = g.num_nodes();
    Rng rng = make_rng(tc.seed, 12);
    std::vector<ad::Tensor> params{ad::Tensor(n, dim)};
    for (auto& v : params[0].data) v = normal(rng, 0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    AdamState opt(params);
    const bool exhaustive = tc.batch_size >= n;
    const SIBatch full = exhaustive_batch(g);
    std::optional<SISampler> sampler;
    if (!exhaustive) sampler.emplace(g, si.negatives);
    const int steps = tc.steps_per_epoch > 0 ? tc.steps_per_epoch : (exhaustive ? 1 : (n + tc.batch_size - 1) / tc.batch_size);

    auto evaluate = [&](const SIBatch& batch, bool with_grad, std::vector<ad::Tensor>* grads) {
        ad::Tape tape;
        ad::Var table = tape.leaf(params[0], with_grad);
        ad::Var loss = si_loss(ad::gather_rows(table, batch.members), batch, si);
        const double value = tape.scalar(loss);
        if (with_grad) {
            tape.backward(loss);
            grads->assign(1, tape.gradient_tensor(table));
        }
        return value;
    };

    FreeEmbeddingResult out;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        for (int step = 0; step < steps; ++step) {
            const SIBatch batch = exhaustive ? full : sampler->sample(tc.batch_size, rng);
            std::vector<ad::Tensor> grads;
            const double loss = evaluate(batch, true, &grads);
            detail::guard_divergence(loss);
            rec.l_si += loss;
            opt.step(params, grads, tc);
        }
        rec.l_si /= steps;
        rec.combined = rec.l_si;
        out.history.epochs.push_back(rec);
    }
    out.final_loss = evaluate(full, false, nullptr);
    for (int v = 0; v < n; ++v) {
        out.embeddings.emplace_back(params[0].data.begin() + static_cast<std::ptrdiff_t>(v) * dim,
                                    params[0].data.begin() + static_cast<std::ptrdiff_t>(v + 1) * dim);
    }
    return out;
}

}  // namespace sipt
