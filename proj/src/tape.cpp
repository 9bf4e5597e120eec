#include "regenn/tape.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "regenn/errors.hpp"
#include "regenn/parallel.hpp"

namespace regenn {

namespace {

constexpr double kLayerNormEps = 1e-5;

// C[m×n] += A[m×k] · B[k×n]
void mm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
        std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* crow = c + i * n;
            const double* arow = a + i * k;
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double av = arow[kk];
                if (av == 0.0) continue;
                const double* brow = b + kk * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

// C[m×n] += A[m×p] · B[n×p]^T   (i.e. C[i,j] += sum_p A[i,p]*B[j,p])
void mm_bt(const double* a, const double* b, double* c, std::size_t m, std::size_t p,
           std::size_t n) {
    parallel_for(m, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* crow = c + i * n;
            const double* arow = a + i * p;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = b + j * p;
                double acc = 0.0;
                for (std::size_t kk = 0; kk < p; ++kk) acc += arow[kk] * brow[kk];
                crow[j] += acc;
            }
        }
    });
}

// C[k×n] += A[r×k]^T · B[r×n]   (i.e. C[i,j] += sum_r A[r,i]*B[r,j])
// The reduction over r runs serially in row order for every output element,
// keeping results independent of the thread count.
void mm_at(const double* a, const double* b, double* c, std::size_t r, std::size_t k,
           std::size_t n) {
    parallel_for(k, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t rr = 0; rr < r; ++rr) acc += a[rr * k + i] * b[rr * n + j];
                crow[j] += acc;
            }
        }
    });
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct BatchedShape {
    std::size_t batch, rows, cols;
};

BatchedShape as_batched(const Shape& s) {
    if (s.rank() == 3) return {s.extent(0), s.extent(1), s.extent(2)};
    if (s.rank() == 2) return {1, s.extent(0), s.extent(1)};
    throw ShapeError("expected a rank-2 or rank-3 tensor, got " + s.to_string());
}

} // namespace

Var Tape::push(Tensor value, bool requires_grad,
               std::function<void(Tape&, std::uint32_t)> backprop) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    check_same_tape(v);
    return nodes_[v.id];
}

void Tape::check_same_tape(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
        throw UsageError("variable does not belong to this tape");
    }
}

Tensor& Tape::grad_slot(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.v.empty()) n.grad = Tensor(n.value.shape);
    return n.grad;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (n.grad.v.empty()) {
        throw StateError("node has no gradient; run backward() over a path that reaches it");
    }
    return n.grad;
}

Tensor Tape::grad_or_zero(Var v) const {
    const Node& n = node(v);
    if (n.grad.v.empty()) return Tensor(n.value.shape);
    return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var loss) {
    check_same_tape(loss);
    const Node& ln = nodes_[loss.id];
    if (ln.value.shape.rank() != 0) {
        throw UsageError("backward: loss must be a scalar node, got shape " +
                         ln.value.shape.to_string());
    }
    grad_slot(loss.id).v[0] += 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.v.empty() || !n.requires_grad || !n.backprop) continue;
        n.backprop(*this, id);
    }
}

// ---------------------------------------------------------------------------
// element-wise ops

Var Tape::add(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (av.shape != bv.shape) {
        throw ShapeError("add: shape " + av.shape.to_string() + " vs " + bv.shape.to_string());
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv.v[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [ai = a.id, bi = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.needs(ai)) {
            Tensor& da = t.grad_slot(ai);
            for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (t.needs(bi)) {
            Tensor& db = t.grad_slot(bi);
            for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i];
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::sub(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (av.shape != bv.shape) {
        throw ShapeError("sub: shape " + av.shape.to_string() + " vs " + bv.shape.to_string());
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= bv.v[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [ai = a.id, bi = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.needs(ai)) {
            Tensor& da = t.grad_slot(ai);
            for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (t.needs(bi)) {
            Tensor& db = t.grad_slot(bi);
            for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] -= g.v[i];
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::mul(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (av.shape != bv.shape) {
        throw ShapeError("mul: shape " + av.shape.to_string() + " vs " + bv.shape.to_string());
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= bv.v[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [ai = a.id, bi = b.id](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av2 = t.nodes_[ai].value;
        const Tensor& bv2 = t.nodes_[bi].value;
        if (t.needs(ai)) {
            Tensor& da = t.grad_slot(ai);
            for (std::size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * bv2.v[i];
        }
        if (t.needs(bi)) {
            Tensor& db = t.grad_slot(bi);
            for (std::size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i] * av2.v[i];
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::affine(Var x, double scale, double shift) {
    check_same_tape(x);
    const Tensor& xv = nodes_[x.id].value;
    Tensor out = xv;
    for (double& e : out.v) e = scale * e + shift;
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, scale](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        if (!t.needs(xi)) return;
        Tensor& dx = t.grad_slot(xi);
        for (std::size_t i = 0; i < g.v.size(); ++i) dx.v[i] += scale * g.v[i];
    };
    return push(std::move(out), true, back);
}

Var Tape::add_bias_last(Var x, Var bias) {
    check_same_tape(x);
    check_same_tape(bias);
    const Tensor& xv = nodes_[x.id].value;
    const Tensor& bv = nodes_[bias.id].value;
    if (bv.shape.rank() != 1 || bv.shape.extent(0) != xv.shape.last()) {
        throw ShapeError("add_bias_last: bias " + bv.shape.to_string() +
                         " does not match last axis of " + xv.shape.to_string());
    }
    const std::size_t n = xv.shape.last();
    const std::size_t rows = xv.numel() / n;
    Tensor out = xv;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) out.v[r * n + j] += bv.v[j];
    }
    const bool rg = nodes_[x.id].requires_grad || nodes_[bias.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, bi = bias.id, rows, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.needs(xi)) {
            Tensor& dx = t.grad_slot(xi);
            for (std::size_t i = 0; i < g.v.size(); ++i) dx.v[i] += g.v[i];
        }
        if (t.needs(bi)) {
            Tensor& db = t.grad_slot(bi);
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t r = 0; r < rows; ++r) acc += g.v[r * n + j];
                db.v[j] += acc;
            }
        }
    };
    return push(std::move(out), true, back);
}

// ---------------------------------------------------------------------------
// products and axis ops

Var Tape::matmul(Var x, Var w) {
    check_same_tape(x);
    check_same_tape(w);
    const Tensor& xv = nodes_[x.id].value;
    const Tensor& wv = nodes_[w.id].value;
    if (wv.shape.rank() != 2) {
        throw ShapeError("matmul: right operand must be rank 2, got " + wv.shape.to_string());
    }
    const BatchedShape xs = as_batched(xv.shape);
    if (xs.cols != wv.shape.extent(0)) {
        throw ShapeError("matmul: inner extents disagree: " + xv.shape.to_string() + " vs " +
                         wv.shape.to_string());
    }
    const std::size_t p = wv.shape.extent(1);
    Tensor out(xv.shape.rank() == 3 ? Shape{xs.batch, xs.rows, p} : Shape{xs.rows, p});
    // All batches share the right matrix, so the stacked (batch·rows) view is
    // a single product.
    mm(xv.v.data(), wv.v.data(), out.v.data(), xs.batch * xs.rows, xs.cols, p);
    const bool rg = nodes_[x.id].requires_grad || nodes_[w.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, wi = w.id, xs, p](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv2 = t.nodes_[xi].value;
        const Tensor& wv2 = t.nodes_[wi].value;
        const std::size_t stacked = xs.batch * xs.rows;
        if (t.needs(xi)) {
            Tensor& dx = t.grad_slot(xi);
            mm_bt(g.v.data(), wv2.v.data(), dx.v.data(), stacked, p, xs.cols);
        }
        if (t.needs(wi)) {
            Tensor& dw = t.grad_slot(wi);
            mm_at(xv2.v.data(), g.v.data(), dw.v.data(), stacked, xs.cols, p);
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::bmm(Var x, Var y) {
    check_same_tape(x);
    check_same_tape(y);
    const Tensor& xv = nodes_[x.id].value;
    const Tensor& yv = nodes_[y.id].value;
    if (xv.shape.rank() != 3 || yv.shape.rank() != 3 ||
        xv.shape.extent(0) != yv.shape.extent(0) ||
        xv.shape.extent(2) != yv.shape.extent(1)) {
        throw ShapeError("bmm: incompatible shapes " + xv.shape.to_string() + " vs " +
                         yv.shape.to_string());
    }
    const std::size_t b = xv.shape.extent(0);
    const std::size_t m = xv.shape.extent(1);
    const std::size_t k = xv.shape.extent(2);
    const std::size_t p = yv.shape.extent(2);
    Tensor out(Shape{b, m, p});
    for (std::size_t bi = 0; bi < b; ++bi) {
        mm(xv.v.data() + bi * m * k, yv.v.data() + bi * k * p, out.v.data() + bi * m * p, m, k,
           p);
    }
    const bool rg = nodes_[x.id].requires_grad || nodes_[y.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, yi = y.id, b, m, k, p](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv2 = t.nodes_[xi].value;
        const Tensor& yv2 = t.nodes_[yi].value;
        if (t.needs(xi)) {
            Tensor& dx = t.grad_slot(xi);
            for (std::size_t bi = 0; bi < b; ++bi) {
                mm_bt(g.v.data() + bi * m * p, yv2.v.data() + bi * k * p,
                      dx.v.data() + bi * m * k, m, p, k);
            }
        }
        if (t.needs(yi)) {
            Tensor& dy = t.grad_slot(yi);
            for (std::size_t bi = 0; bi < b; ++bi) {
                mm_at(xv2.v.data() + bi * m * k, g.v.data() + bi * m * p,
                      dy.v.data() + bi * k * p, m, k, p);
            }
        }
    };
    return push(std::move(out), true, back);
}

namespace {
Tensor transpose12_values(const Tensor& x) {
    const BatchedShape s = as_batched(x.shape);
    Tensor out(x.shape.rank() == 3 ? Shape{s.batch, s.cols, s.rows} : Shape{s.cols, s.rows});
    for (std::size_t b = 0; b < s.batch; ++b) {
        const double* src = x.v.data() + b * s.rows * s.cols;
        double* dst = out.v.data() + b * s.rows * s.cols;
        for (std::size_t i = 0; i < s.rows; ++i) {
            for (std::size_t j = 0; j < s.cols; ++j) dst[j * s.rows + i] = src[i * s.cols + j];
        }
    }
    return out;
}
} // namespace

Var Tape::transpose12(Var x) {
    check_same_tape(x);
    Tensor out = transpose12_values(nodes_[x.id].value);
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id](Tape& t, std::uint32_t self) {
        if (!t.needs(xi)) return;
        Tensor gt = transpose12_values(t.nodes_[self].grad);
        Tensor& dx = t.grad_slot(xi);
        for (std::size_t i = 0; i < gt.v.size(); ++i) dx.v[i] += gt.v[i];
    };
    return push(std::move(out), true, back);
}

// ---------------------------------------------------------------------------
// activations

Var Tape::activation(ActKind kind, Var x) {
    check_same_tape(x);
    const Tensor& xv = nodes_[x.id].value;
    Tensor out = xv;
    switch (kind) {
    case ActKind::Sigmoid:
        for (double& e : out.v) e = stable_sigmoid(e);
        break;
    case ActKind::Tanh:
        for (double& e : out.v) e = std::tanh(e);
        break;
    case ActKind::Relu:
        for (double& e : out.v) e = e > 0.0 ? e : 0.0;
        break;
    case ActKind::Softmax: {
        const std::size_t n = xv.shape.last();
        const std::size_t rows = xv.numel() / n;
        for (std::size_t r = 0; r < rows; ++r) {
            double* row = out.v.data() + r * n;
            double mx = row[0];
            for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - mx);
                s += row[j];
            }
            for (std::size_t j = 0; j < n; ++j) row[j] /= s;
        }
        break;
    }
    }
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, kind](Tape& t, std::uint32_t self) {
        if (!t.needs(xi)) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        const Tensor& xv2 = t.nodes_[xi].value;
        Tensor& dx = t.grad_slot(xi);
        switch (kind) {
        case ActKind::Sigmoid:
            for (std::size_t i = 0; i < g.v.size(); ++i)
                dx.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
            break;
        case ActKind::Tanh:
            for (std::size_t i = 0; i < g.v.size(); ++i)
                dx.v[i] += g.v[i] * (1.0 - y.v[i] * y.v[i]);
            break;
        case ActKind::Relu:
            for (std::size_t i = 0; i < g.v.size(); ++i)
                dx.v[i] += xv2.v[i] > 0.0 ? g.v[i] : 0.0;
            break;
        case ActKind::Softmax: {
            const std::size_t n = y.shape.last();
            const std::size_t rows = y.numel() / n;
            for (std::size_t r = 0; r < rows; ++r) {
                const double* yr = y.v.data() + r * n;
                const double* gr = g.v.data() + r * n;
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
                for (std::size_t j = 0; j < n; ++j) dx.v[r * n + j] += yr[j] * (gr[j] - dot);
            }
            break;
        }
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::dropout(Var x, double p, Mode mode, RngStream* rng) {
    check_same_tape(x);
    if (!(p >= 0.0 && p < 1.0)) {
        throw UsageError("dropout: probability must be in [0,1), got " + std::to_string(p));
    }
    if (mode == Mode::Eval || p == 0.0) return x;
    if (rng == nullptr) throw UsageError("dropout: train mode requires an rng stream");
    const Tensor& xv = nodes_[x.id].value;
    const std::size_t n = xv.numel();
    auto mask = std::make_shared<std::vector<double>>(n);
    const std::uint64_t base = rng->reserve(n);
    const double scale = 1.0 / (1.0 - p);
    const RngStream draws(rng->seed()); // stateless indexed access
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            (*mask)[i] = draws.uniform_at(base + i) < p ? 0.0 : scale;
        }
    });
    Tensor out = xv;
    for (std::size_t i = 0; i < n; ++i) out.v[i] *= (*mask)[i];
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, mask](Tape& t, std::uint32_t self) {
        if (!t.needs(xi)) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& dx = t.grad_slot(xi);
        for (std::size_t i = 0; i < g.v.size(); ++i) dx.v[i] += g.v[i] * (*mask)[i];
    };
    return push(std::move(out), true, back);
}

Var Tape::layer_norm(Var x, Var gamma, Var beta) {
    check_same_tape(x);
    check_same_tape(gamma);
    check_same_tape(beta);
    const Tensor& xv = nodes_[x.id].value;
    const Tensor& gv = nodes_[gamma.id].value;
    const Tensor& bv = nodes_[beta.id].value;
    const std::size_t n = xv.shape.last();
    if (gv.shape.rank() != 1 || gv.shape.extent(0) != n || bv.shape.rank() != 1 ||
        bv.shape.extent(0) != n) {
        throw ShapeError("layer_norm: gamma " + gv.shape.to_string() + " / beta " +
                         bv.shape.to_string() + " do not match last axis of " +
                         xv.shape.to_string());
    }
    const std::size_t rows = xv.numel() / n;
    auto mean = std::make_shared<std::vector<double>>(rows);
    auto inv = std::make_shared<std::vector<double>>(rows);
    Tensor out(xv.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.v.data() + r * n;
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += xr[j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(n);
        const double iv = 1.0 / std::sqrt(var + kLayerNormEps);
        (*mean)[r] = mu;
        (*inv)[r] = iv;
        for (std::size_t j = 0; j < n; ++j) {
            out.v[r * n + j] = (xr[j] - mu) * iv * gv.v[j] + bv.v[j];
        }
    }
    const bool rg = nodes_[x.id].requires_grad || nodes_[gamma.id].requires_grad ||
                    nodes_[beta.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, gi = gamma.id, bi = beta.id, mean, inv, rows,
                 n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv2 = t.nodes_[xi].value;
        const Tensor& gv2 = t.nodes_[gi].value;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xr = xv2.v.data() + r * n;
            const double* gr = g.v.data() + r * n;
            const double mu = (*mean)[r];
            const double iv = (*inv)[r];
            if (t.needs(gi) || t.needs(bi)) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double xhat = (xr[j] - mu) * iv;
                    if (t.needs(gi)) t.grad_slot(gi).v[j] += gr[j] * xhat;
                    if (t.needs(bi)) t.grad_slot(bi).v[j] += gr[j];
                }
            }
            if (t.needs(xi)) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double gh = gr[j] * gv2.v[j];
                    m1 += gh;
                    m2 += gh * (xr[j] - mu) * iv;
                }
                m1 /= static_cast<double>(n);
                m2 /= static_cast<double>(n);
                Tensor& dx = t.grad_slot(xi);
                for (std::size_t j = 0; j < n; ++j) {
                    const double xhat = (xr[j] - mu) * iv;
                    const double gh = gr[j] * gv2.v[j];
                    dx.v[r * n + j] += iv * (gh - m1 - xhat * m2);
                }
            }
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::cosine_similarity(Var a) {
    check_same_tape(a);
    const Tensor& av = nodes_[a.id].value;
    if (av.shape.rank() != 2 || av.shape.extent(0) != av.shape.extent(1)) {
        throw ShapeError("cosine_similarity: expected a square matrix, got " +
                         av.shape.to_string());
    }
    const std::size_t v = av.shape.extent(0);
    auto norms = std::make_shared<std::vector<double>>(v);
    for (std::size_t i = 0; i < v; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < v; ++j) s += av.at(i, j) * av.at(i, j);
        (*norms)[i] = std::sqrt(s);
    }
    Tensor out(Shape{v, v});
    for (std::size_t i = 0; i < v; ++i) {
        for (std::size_t j = 0; j < v; ++j) {
            if ((*norms)[i] == 0.0 || (*norms)[j] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t k = 0; k < v; ++k) dot += av.at(i, k) * av.at(j, k);
            out.at(i, j) = dot / ((*norms)[i] * (*norms)[j]);
        }
    }
    if (!nodes_[a.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [ai = a.id, norms, v](Tape& t, std::uint32_t self) {
        if (!t.needs(ai)) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& s = t.nodes_[self].value;
        const Tensor& av2 = t.nodes_[ai].value;
        Tensor& da = t.grad_slot(ai);
        // S[i,j] depends on rows i and j; the zero-norm case is constant and
        // contributes nothing.
        for (std::size_t k = 0; k < v; ++k) {
            const double rk = (*norms)[k];
            if (rk == 0.0) continue;
            for (std::size_t j = 0; j < v; ++j) {
                const double rj = (*norms)[j];
                if (rj == 0.0) continue;
                const double c = g.at(k, j) + g.at(j, k);
                if (c == 0.0) continue;
                const double skj = s.at(k, j);
                const double inv_kj = 1.0 / (rk * rj);
                const double inv_kk = 1.0 / (rk * rk);
                for (std::size_t m = 0; m < v; ++m) {
                    da.at(k, m) += c * (av2.at(j, m) * inv_kj - skj * av2.at(k, m) * inv_kk);
                }
            }
        }
    };
    return push(std::move(out), true, back);
}

// ---------------------------------------------------------------------------
// slicing / stacking / reductions

Var Tape::col_slice(Var x, std::size_t col) {
    check_same_tape(x);
    const Tensor& xv = nodes_[x.id].value;
    if (xv.shape.rank() != 3 || col >= xv.shape.extent(2)) {
        throw ShapeError("col_slice: column " + std::to_string(col) + " out of range for " +
                         xv.shape.to_string());
    }
    const std::size_t b = xv.shape.extent(0);
    const std::size_t m = xv.shape.extent(1);
    const std::size_t n = xv.shape.extent(2);
    Tensor out(Shape{b, m});
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t i = 0; i < m; ++i) out.at(bi, i) = xv.at(bi, i, col);
    }
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id, col, b, m, n](Tape& t, std::uint32_t self) {
        if (!t.needs(xi)) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& dx = t.grad_slot(xi);
        for (std::size_t bi = 0; bi < b; ++bi) {
            for (std::size_t i = 0; i < m; ++i) dx.v[(bi * m + i) * n + col] += g.at(bi, i);
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::stack_cols(const std::vector<Var>& cols) {
    if (cols.empty()) throw UsageError("stack_cols: no columns given");
    for (Var c : cols) check_same_tape(c);
    const Shape s0 = nodes_[cols[0].id].value.shape;
    if (s0.rank() != 2) {
        throw ShapeError("stack_cols: expected rank-2 columns, got " + s0.to_string());
    }
    bool rg = false;
    for (Var c : cols) {
        if (nodes_[c.id].value.shape != s0) {
            throw ShapeError("stack_cols: shape " + nodes_[c.id].value.shape.to_string() +
                             " vs " + s0.to_string());
        }
        rg = rg || nodes_[c.id].requires_grad;
    }
    const std::size_t b = s0.extent(0);
    const std::size_t m = s0.extent(1);
    const std::size_t k = cols.size();
    Tensor out(Shape{b, m, k});
    for (std::size_t j = 0; j < k; ++j) {
        const Tensor& cv = nodes_[cols[j].id].value;
        for (std::size_t bi = 0; bi < b; ++bi) {
            for (std::size_t i = 0; i < m; ++i) out.at(bi, i, j) = cv.at(bi, i);
        }
    }
    if (!rg) return push(std::move(out), false, nullptr);
    std::vector<std::uint32_t> ids(k);
    for (std::size_t j = 0; j < k; ++j) ids[j] = cols[j].id;
    auto back = [ids, b, m, k](Tape& t, std::uint32_t self) {
        const Tensor& g = t.nodes_[self].grad;
        for (std::size_t j = 0; j < k; ++j) {
            if (!t.needs(ids[j])) continue;
            Tensor& dc = t.grad_slot(ids[j]);
            for (std::size_t bi = 0; bi < b; ++bi) {
                for (std::size_t i = 0; i < m; ++i) dc.at(bi, i) += g.at(bi, i, j);
            }
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::mae(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& av = nodes_[a.id].value;
    const Tensor& bv = nodes_[b.id].value;
    if (av.shape != bv.shape) {
        throw ShapeError("mae: shape " + av.shape.to_string() + " vs " + bv.shape.to_string());
    }
    const std::size_t n = av.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(av.v[i] - bv.v[i]);
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    if (!rg) return push(std::move(out), false, nullptr);
    auto back = [ai = a.id, bi = b.id, n](Tape& t, std::uint32_t self) {
        const double gs = t.nodes_[self].grad.v[0] / static_cast<double>(n);
        const Tensor& av2 = t.nodes_[ai].value;
        const Tensor& bv2 = t.nodes_[bi].value;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = av2.v[i] - bv2.v[i];
            const double s = d > 0.0 ? gs : (d < 0.0 ? -gs : 0.0);
            if (t.needs(ai)) t.grad_slot(ai).v[i] += s;
            if (t.needs(bi)) t.grad_slot(bi).v[i] -= s;
        }
    };
    return push(std::move(out), true, back);
}

Var Tape::sum(Var x) {
    check_same_tape(x);
    const Tensor& xv = nodes_[x.id].value;
    double acc = 0.0;
    for (double e : xv.v) acc += e;
    Tensor out = Tensor::scalar(acc);
    if (!nodes_[x.id].requires_grad) return push(std::move(out), false, nullptr);
    auto back = [xi = x.id](Tape& t, std::uint32_t self) {
        if (!t.needs(xi)) return;
        const double gs = t.nodes_[self].grad.v[0];
        Tensor& dx = t.grad_slot(xi);
        for (double& e : dx.v) e += gs;
    };
    return push(std::move(out), true, back);
}

} // namespace regenn
