#pragma once

// Tape-based reverse-mode differentiation over small row-major matrices.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "sipt/error.hpp"

namespace sipt::ad {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

class Tape {
public:
    struct Node {
        int rows = 0;
        int cols = 0;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        std::function<void()> backward;
    };

    Tape() { nodes_.reserve(4096); }

    Var leaf(Tensor t, bool requires_grad = false) {
        Node n;
        n.rows = t.rows;
        n.cols = t.cols;
        n.value = std::move(t.data);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    Var constant(int rows, int cols, double fill) { return leaf(Tensor(rows, cols, fill)); }

    /// New node whose backward is attached afterwards with `set_backward`.
    Var emit(int rows, int cols, std::vector<double> value, bool requires_grad) {
        Node n;
        n.rows = rows;
        n.cols = cols;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    void set_backward(Var v, std::function<void()> fn) {
        if (nodes_[v.id].requires_grad) {
            nodes_[v.id].backward = std::move(fn);
        }
    }

    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }
    const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
    int rows(Var v) const { return nodes_[v.id].rows; }
    int cols(Var v) const { return nodes_[v.id].cols; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

    std::vector<double>& grad(int id) {
        auto& n = nodes_[id];
        if (n.grad.empty()) {
            n.grad.assign(n.value.size(), 0.0);
        }
        return n.grad;
    }

    double scalar(Var v) const { return nodes_[v.id].value[0]; }

    /// Seeds d(root)/d(root) = 1 and runs every recorded backward in reverse order.
    void backward(Var root) {
        assert(nodes_[root.id].value.size() == 1);
        grad(root.id)[0] = 1.0;
        for (int i = root.id; i >= 0; --i) {
            auto& n = nodes_[i];
            if (n.backward && !n.grad.empty()) {
                n.backward();
            }
        }
    }

    Tensor gradient_tensor(Var v) {
        Tensor t(rows(v), cols(v));
        const auto& g = nodes_[v.id].grad;
        if (!g.empty()) {
            t.data = g;
        }
        return t;
    }

    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
};

// ----------------------------------------------------------------------------
// Operations. Each records its local vector-Jacobian product.
// ----------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
    Tape& t = *a.tape;
    const int m = t.rows(a), k = t.cols(a), n = t.cols(b);
    assert(t.rows(b) == k);
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    for (int i = 0; i < m; ++i) {
        double* orow = &out[static_cast<std::size_t>(i) * n];
        for (int p = 0; p < k; ++p) {
            const double av = A[static_cast<std::size_t>(i) * k + p];
            const double* brow = &B[static_cast<std::size_t>(p) * n];
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    Var r = t.emit(m, n, std::move(out), t.requires_grad(a) || t.requires_grad(b));
    t.set_backward(r, [&t, a, b, r, m, k, n] {
        const auto& G = t.node(r.id).grad;
        if (t.requires_grad(a)) {
            auto& GA = t.grad(a.id);
            const auto& B = t.value(b);
            for (int i = 0; i < m; ++i) {
                for (int p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* grow = &G[static_cast<std::size_t>(i) * n];
                    const double* brow = &B[static_cast<std::size_t>(p) * n];
                    for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                    GA[static_cast<std::size_t>(i) * k + p] += s;
                }
            }
        }
        if (t.requires_grad(b)) {
            auto& GB = t.grad(b.id);
            const auto& A = t.value(a);
            for (int i = 0; i < m; ++i) {
                const double* grow = &G[static_cast<std::size_t>(i) * n];
                for (int p = 0; p < k; ++p) {
                    const double av = A[static_cast<std::size_t>(i) * k + p];
                    double* gbrow = &GB[static_cast<std::size_t>(p) * n];
                    for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                }
            }
        }
    });
    return r;
}

/// a * b^T
inline Var matmul_bt(Var a, Var b) {
    Tape& t = *a.tape;
    const int m = t.rows(a), k = t.cols(a), n = t.rows(b);
    assert(t.cols(b) == k);
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += A[static_cast<std::size_t>(i) * k + p] * B[static_cast<std::size_t>(j) * k + p];
            out[static_cast<std::size_t>(i) * n + j] = s;
        }
    }
    Var r = t.emit(m, n, std::move(out), t.requires_grad(a) || t.requires_grad(b));
    t.set_backward(r, [&t, a, b, r, m, k, n] {
        const auto& G = t.node(r.id).grad;
        const auto& A = t.value(a);
        const auto& B = t.value(b);
        const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
        std::vector<double>* GA = ga ? &t.grad(a.id) : nullptr;
        std::vector<double>* GB = gb ? &t.grad(b.id) : nullptr;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const double g = G[static_cast<std::size_t>(i) * n + j];
                if (g == 0.0) continue;
                for (int p = 0; p < k; ++p) {
                    if (ga) (*GA)[static_cast<std::size_t>(i) * k + p] += g * B[static_cast<std::size_t>(j) * k + p];
                    if (gb) (*GB)[static_cast<std::size_t>(j) * k + p] += g * A[static_cast<std::size_t>(i) * k + p];
                }
            }
        }
    });
    return r;
}

inline Var add(Var a, Var b) {
    Tape& t = *a.tape;
    assert(t.value(a).size() == t.value(b).size());
    std::vector<double> out = t.value(a);
    const auto& B = t.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    Var r = t.emit(t.rows(a), t.cols(a), std::move(out), t.requires_grad(a) || t.requires_grad(b));
    t.set_backward(r, [&t, a, b, r] {
        const auto& G = t.node(r.id).grad;
        for (Var x : {a, b}) {
            if (!t.requires_grad(x)) continue;
            auto& GX = t.grad(x.id);
            for (std::size_t i = 0; i < G.size(); ++i) GX[i] += G[i];
        }
    });
    return r;
}

/// a[m x n] + row[1 x n] broadcast over rows.
inline Var add_row(Var a, Var row) {
    Tape& t = *a.tape;
    const int m = t.rows(a), n = t.cols(a);
    assert(t.cols(row) == n && t.rows(row) == 1);
    std::vector<double> out = t.value(a);
    const auto& R = t.value(row);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] += R[j];
    Var r = t.emit(m, n, std::move(out), t.requires_grad(a) || t.requires_grad(row));
    t.set_backward(r, [&t, a, row, r, m, n] {
        const auto& G = t.node(r.id).grad;
        if (t.requires_grad(a)) {
            auto& GA = t.grad(a.id);
            for (std::size_t i = 0; i < G.size(); ++i) GA[i] += G[i];
        }
        if (t.requires_grad(row)) {
            auto& GR = t.grad(row.id);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) GR[j] += G[static_cast<std::size_t>(i) * n + j];
        }
    });
    return r;
}

/// s * a + c elementwise.
inline Var affine(Var a, double s, double c = 0.0) {
    Tape& t = *a.tape;
    std::vector<double> out = t.value(a);
    for (auto& x : out) x = s * x + c;
    Var r = t.emit(t.rows(a), t.cols(a), std::move(out), t.requires_grad(a));
    t.set_backward(r, [&t, a, r, s] {
        const auto& G = t.node(r.id).grad;
        auto& GA = t.grad(a.id);
        for (std::size_t i = 0; i < G.size(); ++i) GA[i] += s * G[i];
    });
    return r;
}

inline Var scale(Var a, double s) { return affine(a, s, 0.0); }

/// Rows `ids` of `table`.
inline Var gather_rows(Var table, const std::vector<int>& ids) {
    Tape& t = *table.tape;
    const int n = t.cols(table);
    const int m = static_cast<int>(ids.size());
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    const auto& T = t.value(table);
    for (int i = 0; i < m; ++i) {
        assert(ids[i] >= 0 && ids[i] < t.rows(table));
        std::copy_n(&T[static_cast<std::size_t>(ids[i]) * n], n, &out[static_cast<std::size_t>(i) * n]);
    }
    Var r = t.emit(m, n, std::move(out), t.requires_grad(table));
    t.set_backward(r, [&t, table, r, ids, n, m] {
        const auto& G = t.node(r.id).grad;
        auto& GT = t.grad(table.id);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) GT[static_cast<std::size_t>(ids[i]) * n + j] += G[static_cast<std::size_t>(i) * n + j];
    });
    return r;
}

inline Var slice_rows(Var a, int start, int count) {
    std::vector<int> ids(count);
    for (int i = 0; i < count; ++i) ids[i] = start + i;
    return gather_rows(a, ids);
}

inline Var slice_cols(Var a, int start, int count) {
    Tape& t = *a.tape;
    const int m = t.rows(a), n = t.cols(a);
    std::vector<double> out(static_cast<std::size_t>(m) * count);
    const auto& A = t.value(a);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < count; ++j) out[static_cast<std::size_t>(i) * count + j] = A[static_cast<std::size_t>(i) * n + start + j];
    Var r = t.emit(m, count, std::move(out), t.requires_grad(a));
    t.set_backward(r, [&t, a, r, m, n, start, count] {
        const auto& G = t.node(r.id).grad;
        auto& GA = t.grad(a.id);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < count; ++j) GA[static_cast<std::size_t>(i) * n + start + j] += G[static_cast<std::size_t>(i) * count + j];
    });
    return r;
}

inline Var concat_cols(const std::vector<Var>& parts) {
    Tape& t = *parts.front().tape;
    const int m = t.rows(parts.front());
    int n = 0;
    for (Var p : parts) n += t.cols(p);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    bool rg = false;
    int off = 0;
    for (Var p : parts) {
        const int c = t.cols(p);
        const auto& P = t.value(p);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(i) * n + off + j] = P[static_cast<std::size_t>(i) * c + j];
        off += c;
        rg = rg || t.requires_grad(p);
    }
    Var r = t.emit(m, n, std::move(out), rg);
    t.set_backward(r, [&t, parts, r, m, n] {
        const auto& G = t.node(r.id).grad;
        int off = 0;
        for (Var p : parts) {
            const int c = t.cols(p);
            if (t.requires_grad(p)) {
                auto& GP = t.grad(p.id);
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < c; ++j) GP[static_cast<std::size_t>(i) * c + j] += G[static_cast<std::size_t>(i) * n + off + j];
            }
            off += c;
        }
    });
    return r;
}

/// Stacks same-width matrices vertically.
inline Var concat_rows(const std::vector<Var>& parts) {
    Tape& t = *parts.front().tape;
    const int n = t.cols(parts.front());
    int m = 0;
    bool rg = false;
    for (Var p : parts) {
        assert(t.cols(p) == n);
        m += t.rows(p);
        rg = rg || t.requires_grad(p);
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m) * n);
    for (Var p : parts) out.insert(out.end(), t.value(p).begin(), t.value(p).end());
    Var r = t.emit(m, n, std::move(out), rg);
    t.set_backward(r, [&t, parts, r] {
        const auto& G = t.node(r.id).grad;
        std::size_t off = 0;
        for (Var p : parts) {
            const std::size_t sz = t.value(p).size();
            if (t.requires_grad(p)) {
                auto& GP = t.grad(p.id);
                for (std::size_t i = 0; i < sz; ++i) GP[i] += G[off + i];
            }
            off += sz;
        }
    });
    return r;
}

/// Row-wise layer normalization with learned gain and bias [1 x n].
inline Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5) {
    Tape& t = *x.tape;
    const int m = t.rows(x), n = t.cols(x);
    const auto& X = t.value(x);
    const auto& Gn = t.value(gain);
    const auto& Bs = t.value(bias);
    std::vector<double> xhat(static_cast<std::size_t>(m) * n), out(static_cast<std::size_t>(m) * n), inv_std(m);
    for (int i = 0; i < m; ++i) {
        const double* row = &X[static_cast<std::size_t>(i) * n];
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += row[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= n;
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            xhat[idx] = (row[j] - mean) * inv_std[i];
            out[idx] = xhat[idx] * Gn[j] + Bs[j];
        }
    }
    Var r = t.emit(m, n, std::move(out), t.requires_grad(x) || t.requires_grad(gain) || t.requires_grad(bias));
    t.set_backward(r, [&t, x, gain, bias, r, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
        const auto& G = t.node(r.id).grad;
        const auto& Gn = t.value(gain);
        if (t.requires_grad(gain) || t.requires_grad(bias)) {
            auto& GG = t.grad(gain.id);
            auto& GB = t.grad(bias.id);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                    GG[j] += G[idx] * xhat[idx];
                    GB[j] += G[idx];
                }
        }
        if (t.requires_grad(x)) {
            auto& GX = t.grad(x.id);
            for (int i = 0; i < m; ++i) {
                double sum_g = 0.0, sum_gx = 0.0;
                for (int j = 0; j < n; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                    const double gh = G[idx] * Gn[j];
                    sum_g += gh;
                    sum_gx += gh * xhat[idx];
                }
                for (int j = 0; j < n; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                    const double gh = G[idx] * Gn[j];
                    GX[idx] += inv_std[i] * (gh - sum_g / n - xhat[idx] * sum_gx / n);
                }
            }
        }
    });
    return r;
}

/// Exact GELU, x * Phi(x).
inline Var gelu(Var x) {
    Tape& t = *x.tape;
    std::vector<double> out = t.value(x);
    for (auto& v : out) v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
    Var r = t.emit(t.rows(x), t.cols(x), std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r] {
        const auto& G = t.node(r.id).grad;
        const auto& X = t.value(x);
        auto& GX = t.grad(x.id);
        const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < G.size(); ++i) {
            const double v = X[i];
            const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            GX[i] += G[i] * (cdf + v * pdf);
        }
    });
    return r;
}

inline Var relu(Var x) {
    Tape& t = *x.tape;
    std::vector<double> out = t.value(x);
    for (auto& v : out) v = std::max(v, 0.0);
    Var r = t.emit(t.rows(x), t.cols(x), std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r] {
        const auto& G = t.node(r.id).grad;
        const auto& X = t.value(x);
        auto& GX = t.grad(x.id);
        for (std::size_t i = 0; i < G.size(); ++i)
            if (X[i] > 0.0) GX[i] += G[i];
    });
    return r;
}

inline Var softmax_rows(Var x) {
    Tape& t = *x.tape;
    const int m = t.rows(x), n = t.cols(x);
    std::vector<double> out = t.value(x);
    for (int i = 0; i < m; ++i) {
        double* row = &out[static_cast<std::size_t>(i) * n];
        double mx = *std::max_element(row, row + n);
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        for (int j = 0; j < n; ++j) row[j] /= s;
    }
    Var r = t.emit(m, n, std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r, m, n] {
        const auto& G = t.node(r.id).grad;
        const auto& Y = t.value(r);
        auto& GX = t.grad(x.id);
        for (int i = 0; i < m; ++i) {
            const std::size_t base = static_cast<std::size_t>(i) * n;
            double dot = 0.0;
            for (int j = 0; j < n; ++j) dot += G[base + j] * Y[base + j];
            for (int j = 0; j < n; ++j) GX[base + j] += Y[base + j] * (G[base + j] - dot);
        }
    });
    return r;
}

/// Column means, [m x n] -> [1 x n].
inline Var mean_rows(Var x) {
    Tape& t = *x.tape;
    const int m = t.rows(x), n = t.cols(x);
    std::vector<double> out(n, 0.0);
    const auto& X = t.value(x);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[j] += X[static_cast<std::size_t>(i) * n + j];
    for (auto& v : out) v /= m;
    Var r = t.emit(1, n, std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r, m, n] {
        const auto& G = t.node(r.id).grad;
        auto& GX = t.grad(x.id);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) GX[static_cast<std::size_t>(i) * n + j] += G[j] / m;
    });
    return r;
}

inline Var sum(Var x) {
    Tape& t = *x.tape;
    double s = 0.0;
    for (double v : t.value(x)) s += v;
    Var r = t.emit(1, 1, {s}, t.requires_grad(x));
    t.set_backward(r, [&t, x, r] {
        const double g = t.node(r.id).grad[0];
        for (auto& gx : t.grad(x.id)) gx += g;
    });
    return r;
}

inline Var mean(Var x) {
    const auto n = static_cast<double>(x.tape->value(x).size());
    return scale(sum(x), 1.0 / n);
}

/// Elementwise square.
inline Var square(Var x) {
    Tape& t = *x.tape;
    std::vector<double> out = t.value(x);
    for (auto& v : out) v *= v;
    Var r = t.emit(t.rows(x), t.cols(x), std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r] {
        const auto& G = t.node(r.id).grad;
        const auto& X = t.value(x);
        auto& GX = t.grad(x.id);
        for (std::size_t i = 0; i < G.size(); ++i) GX[i] += 2.0 * X[i] * G[i];
    });
    return r;
}

/// Weighted sum of scalars: sum_i w_i * s_i.
inline Var weighted_sum(const std::vector<Var>& scalars, const std::vector<double>& weights) {
    Tape& t = *scalars.front().tape;
    double v = 0.0;
    bool rg = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        v += weights[i] * t.scalar(scalars[i]);
        rg = rg || t.requires_grad(scalars[i]);
    }
    Var r = t.emit(1, 1, {v}, rg);
    t.set_backward(r, [&t, scalars, weights, r] {
        const double g = t.node(r.id).grad[0];
        for (std::size_t i = 0; i < scalars.size(); ++i)
            if (t.requires_grad(scalars[i])) t.grad(scalars[i].id)[0] += weights[i] * g;
    });
    return r;
}

/// Mean softmax cross-entropy of logit rows against integer targets.
inline Var cross_entropy(Var logits, const std::vector<int>& targets) {
    Tape& t = *logits.tape;
    const int m = t.rows(logits), n = t.cols(logits);
    assert(static_cast<int>(targets.size()) == m);
    const auto& L = t.value(logits);
    std::vector<double> probs(static_cast<std::size_t>(m) * n);
    double loss = 0.0;
    for (int i = 0; i < m; ++i) {
        const double* row = &L[static_cast<std::size_t>(i) * n];
        double mx = *std::max_element(row, row + n);
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += std::exp(row[j] - mx);
        const double lse = mx + std::log(s);
        for (int j = 0; j < n; ++j) probs[static_cast<std::size_t>(i) * n + j] = std::exp(row[j] - lse);
        loss += lse - row[targets[i]];
    }
    loss /= m;
    Var r = t.emit(1, 1, {loss}, t.requires_grad(logits));
    t.set_backward(r, [&t, logits, r, m, n, targets, probs = std::move(probs)] {
        const double g = t.node(r.id).grad[0] / m;
        auto& GL = t.grad(logits.id);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) GL[static_cast<std::size_t>(i) * n + j] += g * probs[static_cast<std::size_t>(i) * n + j];
            GL[static_cast<std::size_t>(i) * n + targets[i]] -= g;
        }
    });
    return r;
}

/// Entries (i, j) of a matrix as a [1 x P] row.
inline Var gather_entries(Var x, const std::vector<std::pair<int, int>>& idx) {
    Tape& t = *x.tape;
    const int n = t.cols(x);
    const auto& X = t.value(x);
    std::vector<double> out(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) out[p] = X[static_cast<std::size_t>(idx[p].first) * n + idx[p].second];
    Var r = t.emit(1, static_cast<int>(idx.size()), std::move(out), t.requires_grad(x));
    t.set_backward(r, [&t, x, r, idx, n] {
        const auto& G = t.node(r.id).grad;
        auto& GX = t.grad(x.id);
        for (std::size_t p = 0; p < idx.size(); ++p) GX[static_cast<std::size_t>(idx[p].first) * n + idx[p].second] += G[p];
    });
    return r;
}

/// Euclidean distances between row pairs of z as a [1 x P] row. The gradient at zero
/// distance is taken as 0.
inline Var pair_distances(Var z, const std::vector<std::pair<int, int>>& pairs) {
    Tape& t = *z.tape;
    const int d = t.cols(z);
    const auto& Z = t.value(z);
    std::vector<double> out(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = Z[static_cast<std::size_t>(pairs[p].first) * d + j] - Z[static_cast<std::size_t>(pairs[p].second) * d + j];
            s += diff * diff;
        }
        out[p] = std::sqrt(s);
    }
    Var r = t.emit(1, static_cast<int>(pairs.size()), std::move(out), t.requires_grad(z));
    t.set_backward(r, [&t, z, r, pairs, d] {
        const auto& G = t.node(r.id).grad;
        const auto& D = t.value(r);
        const auto& Z = t.value(z);
        auto& GZ = t.grad(z.id);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            if (D[p] == 0.0 || G[p] == 0.0) continue;
            const double c = G[p] / D[p];
            for (int j = 0; j < d; ++j) {
                const std::size_t a = static_cast<std::size_t>(pairs[p].first) * d + j;
                const std::size_t b = static_cast<std::size_t>(pairs[p].second) * d + j;
                const double diff = Z[a] - Z[b];
                GZ[a] += c * diff;
                GZ[b] -= c * diff;
            }
        }
    });
    return r;
}

/// log(1 + sum_i exp(x_i)) computed as a shifted log-sum-exp over {0, x_1, ...}.
inline Var log1p_sum_exp(Var x) {
    Tape& t = *x.tape;
    const auto& X = t.value(x);
    double mx = 0.0;
    for (double v : X) mx = std::max(mx, v);
    double s = std::exp(-mx);
    for (double v : X) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    Var r = t.emit(1, 1, {lse}, t.requires_grad(x));
    t.set_backward(r, [&t, x, r, lse] {
        const double g = t.node(r.id).grad[0];
        const auto& X = t.value(x);
        auto& GX = t.grad(x.id);
        for (std::size_t i = 0; i < X.size(); ++i) GX[i] += g * std::exp(X[i] - lse);
    });
    return r;
}

}  // namespace sipt::ad
