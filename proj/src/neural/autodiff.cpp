#include "sicl/autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <string>
#include <unordered_set>

#include "sicl/error.hpp"
#include "sicl/kernels.hpp"

namespace sicl::nn {

namespace {

constexpr double kClampLo = 1e-7, kClampHi = 1.0 - 1e-7;

thread_local bool g_grad_enabled = true;

bool any_requires(std::initializer_list<const Tensor*> xs) {
    if (!g_grad_enabled) return false;
    for (const Tensor* x : xs)
        if (*x && (*x)->requires_grad) return true;
    return false;
}

// Exponent bits all set means Inf or NaN; integer form vectorizes.
void check_finite(const std::vector<double>& v, const char* op) {
    constexpr std::uint64_t kExp = 0x7FF0000000000000ULL;
    std::uint64_t bad = 0;
    for (double x : v) bad |= static_cast<std::uint64_t>((std::bit_cast<std::uint64_t>(x) & kExp) == kExp);
    if (bad) fail(ErrorKind::Numeric, std::string("non-finite value produced by ") + op);
}

Tensor make(Shape shape, std::vector<double> value, const char* op, bool track, std::vector<Tensor> inputs,
            std::function<void(Node&)> fn) {
    check_finite(value, op);
    auto t = std::make_shared<Node>();
    t->shape = std::move(shape);
    t->value = std::move(value);
    if (track) {
        t->requires_grad = true;
        t->inputs = std::move(inputs);
        t->backward_fn = std::move(fn);
    }
    return t;
}

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Contract, what);
}

}  // namespace

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (int x : s) n *= static_cast<std::size_t>(x);
    return n;
}

std::vector<double>& Node::grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor constant(Shape shape, std::vector<double> values) {
    require(numel(shape) == values.size(), "constant: shape does not match value count");
    auto t = std::make_shared<Node>();
    t->shape = std::move(shape);
    t->value = std::move(values);
    check_finite(t->value, "constant");
    return t;
}

Tensor parameter(Shape shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t->requires_grad = true;
    return t;
}

bool grad_enabled() { return g_grad_enabled; }

NoGrad::NoGrad() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGrad::~NoGrad() { g_grad_enabled = prev_; }

void backward(const Tensor& root, double seed) {
    require(root != nullptr, "backward: null root");
    if (!root->requires_grad) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    auto& g = root->grad_buffer();
    for (double& x : g) x += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

// --- elementwise ---------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require(a->shape == b->shape, "add: shape mismatch");
    std::vector<double> v(a->value);
    kernels::axpy(1.0, b->value.data(), v.data(), v.size());
    return make(a->shape, std::move(v), "add", any_requires({&a, &b}), {a, b}, [](Node& self) {
        for (auto& in : self.inputs)
            if (in->requires_grad) kernels::axpy(1.0, self.grad.data(), in->grad_buffer().data(), self.grad.size());
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> v(a->value);
    for (double& x : v) x *= c;
    return make(a->shape, std::move(v), "scale", any_requires({&a}), {a}, [c](Node& self) {
        kernels::axpy(c, self.grad.data(), self.inputs[0]->grad_buffer().data(), self.grad.size());
    });
}

Tensor mul_const(const Tensor& a, std::span<const double> mask) {
    require(mask.size() == a->size(), "mul_const: size mismatch");
    std::vector<double> m(mask.begin(), mask.end());
    std::vector<double> v(a->value);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= m[i];
    return make(a->shape, std::move(v), "mul_const", any_requires({&a}), {a}, [m = std::move(m)](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * m[i];
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> v(x->value);
    for (double& e : v) e = e > 0.0 ? e : 0.0;
    return make(x->shape, std::move(v), "relu", any_requires({&x}), {x}, [](Node& self) {
        auto& in = *self.inputs[0];
        auto& g = in.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in.value[i] > 0.0) g[i] += self.grad[i];
    });
}

namespace {
double sigmoid1(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
    std::vector<double> v(x->value);
    for (double& e : v) e = sigmoid1(e);
    return make(x->shape, std::move(v), "sigmoid", any_requires({&x}), {x}, [](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
    });
}

Tensor and_logits(const Tensor& a, const Tensor& b) {
    require(a->shape == b->shape, "and_logits: shape mismatch");
    const std::size_t size = a->size();
    std::vector<double> v(size), wa(size), wb(size);
    for (std::size_t i = 0; i < size; ++i) {
        // -log(exp(-a) + exp(-b) + exp(-a - b)) as a shifted log-sum-exp
        const double x = -a->value[i], y = -b->value[i];
        const double m = std::max({x, y, x + y});
        const double ex = std::exp(x - m), ey = std::exp(y - m), exy = std::exp(x + y - m);
        const double sum = ex + ey + exy;
        v[i] = -(m + std::log(sum));
        wa[i] = (ex + exy) / sum;
        wb[i] = (ey + exy) / sum;
    }
    return make(a->shape, std::move(v), "and_logits", any_requires({&a, &b}), {a, b},
                [wa = std::move(wa), wb = std::move(wb)](Node& self) {
                    Node& an = *self.inputs[0];
                    Node& bn = *self.inputs[1];
                    if (an.requires_grad) {
                        auto& g = an.grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * wa[i];
                    }
                    if (bn.requires_grad) {
                        auto& g = bn.grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * wb[i];
                    }
                });
}

// --- linear algebra ------------------------------------------------------------------

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(w->shape.size() == 2 && !x->shape.empty() && x->shape.back() == w->shape[0], "linear: shape mismatch");
    const int in = w->shape[0], out = w->shape[1];
    require(!b || (b->shape.size() == 1 && b->shape[0] == out), "linear: bias shape mismatch");
    const int rows = static_cast<int>(x->size() / in);
    Shape shape = x->shape;
    shape.back() = out;
    std::vector<double> y(static_cast<std::size_t>(rows) * out);
    if (b)
        for (int r = 0; r < rows; ++r) std::copy(b->value.begin(), b->value.end(), y.begin() + static_cast<std::size_t>(r) * out);
    kernels::gemm(rows, out, in, x->value.data(), in, w->value.data(), out, y.data(), out, b != nullptr);
    std::vector<Tensor> inputs{x, w};
    if (b) inputs.push_back(b);
    return make(std::move(shape), std::move(y), "linear", any_requires({&x, &w, &b}), std::move(inputs),
                [rows, in, out](Node& self) {
                    Node& xn = *self.inputs[0];
                    Node& wn = *self.inputs[1];
                    const double* dy = self.grad.data();
                    if (xn.requires_grad) {
                        std::vector<double> wt(static_cast<std::size_t>(in) * out);
                        kernels::transpose(wn.value.data(), in, out, wt.data());
                        kernels::gemm(rows, in, out, dy, out, wt.data(), in, xn.grad_buffer().data(), in, true);
                    }
                    if (wn.requires_grad) {
                        std::vector<double> xt(static_cast<std::size_t>(in) * rows);
                        kernels::transpose(xn.value.data(), rows, in, xt.data());
                        kernels::gemm(in, out, rows, xt.data(), rows, dy, out, wn.grad_buffer().data(), out, true);
                    }
                    if (self.inputs.size() == 3 && self.inputs[2]->requires_grad) {
                        auto& db = self.inputs[2]->grad_buffer();
                        for (int r = 0; r < rows; ++r) kernels::axpy(1.0, dy + static_cast<std::size_t>(r) * out, db.data(), out);
                    }
                });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int h = x->shape.back();
    require(gamma->size() == static_cast<std::size_t>(h) && beta->size() == static_cast<std::size_t>(h),
            "layer_norm: parameter shape mismatch");
    const std::size_t rows = x->size() / h;
    std::vector<double> xhat(x->size()), inv(rows), y(x->size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x->value.data() + r * h;
        double mean = 0.0;
        for (int i = 0; i < h; ++i) mean += xr[i];
        mean /= h;
        double var = 0.0;
        for (int i = 0; i < h; ++i) var += (xr[i] - mean) * (xr[i] - mean);
        var /= h;
        inv[r] = 1.0 / std::sqrt(var + eps);
        for (int i = 0; i < h; ++i) {
            xhat[r * h + i] = (xr[i] - mean) * inv[r];
            y[r * h + i] = xhat[r * h + i] * gamma->value[i] + beta->value[i];
        }
    }
    const bool track = any_requires({&x, &gamma, &beta});
    if (!track) {
        xhat.clear();
        inv.clear();
    }
    return make(x->shape, std::move(y), "layer_norm", track, {x, gamma, beta},
                [h, rows, xhat = std::move(xhat), inv = std::move(inv)](Node& self) {
                    Node& xn = *self.inputs[0];
                    Node& gn = *self.inputs[1];
                    Node& bn = *self.inputs[2];
                    const double* dy = self.grad.data();
                    if (gn.requires_grad || bn.requires_grad) {
                        auto& dg = gn.grad_buffer();
                        auto& db = bn.grad_buffer();
                        for (std::size_t r = 0; r < rows; ++r)
                            for (int i = 0; i < h; ++i) {
                                dg[i] += dy[r * h + i] * xhat[r * h + i];
                                db[i] += dy[r * h + i];
                            }
                    }
                    if (!xn.requires_grad) return;
                    auto& dx = xn.grad_buffer();
                    std::vector<double> dxh(h);
                    for (std::size_t r = 0; r < rows; ++r) {
                        double m1 = 0.0, m2 = 0.0;
                        for (int i = 0; i < h; ++i) {
                            dxh[i] = dy[r * h + i] * gn.value[i];
                            m1 += dxh[i];
                            m2 += dxh[i] * xhat[r * h + i];
                        }
                        m1 /= h;
                        m2 /= h;
                        for (int i = 0; i < h; ++i) dx[r * h + i] += inv[r] * (dxh[i] - m1 - xhat[r * h + i] * m2);
                    }
                });
}

// --- layout ------------------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape) {
    require(numel(shape) == x->size(), "reshape: element count mismatch");
    return make(std::move(shape), x->value, "reshape", any_requires({&x}), {x}, [](Node& self) {
        kernels::axpy(1.0, self.grad.data(), self.inputs[0]->grad_buffer().data(), self.grad.size());
    });
}

Tensor swap01(const Tensor& x) {
    require(x->shape.size() >= 2, "swap01: need rank >= 2");
    const int a = x->shape[0], b = x->shape[1];
    const std::size_t m = x->size() / (static_cast<std::size_t>(a) * b);
    Shape shape = x->shape;
    std::swap(shape[0], shape[1]);
    std::vector<double> v(x->size());
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j)
            std::copy_n(x->value.data() + (static_cast<std::size_t>(i) * b + j) * m, m,
                        v.data() + (static_cast<std::size_t>(j) * a + i) * m);
    return make(std::move(shape), std::move(v), "swap01", any_requires({&x}), {x}, [a, b, m](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < b; ++j)
                kernels::axpy(1.0, self.grad.data() + (static_cast<std::size_t>(j) * a + i) * m,
                              g.data() + (static_cast<std::size_t>(i) * b + j) * m, m);
    });
}

Tensor pair_sum(const Tensor& a, const Tensor& b) {
    require(a->shape == b->shape && !a->shape.empty(), "pair_sum: shape mismatch");
    const int d = a->shape[0];
    const std::size_t m = a->size() / d;
    Shape shape{d, d};
    shape.insert(shape.end(), a->shape.begin() + 1, a->shape.end());
    std::vector<double> v(static_cast<std::size_t>(d) * d * m);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double* o = v.data() + (static_cast<std::size_t>(i) * d + j) * m;
            const double* ai = a->value.data() + i * m;
            const double* bj = b->value.data() + j * m;
            for (std::size_t t = 0; t < m; ++t) o[t] = ai[t] + bj[t];
        }
    return make(std::move(shape), std::move(v), "pair_sum", any_requires({&a, &b}), {a, b}, [d, m](Node& self) {
        Node& an = *self.inputs[0];
        Node& bn = *self.inputs[1];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double* g = self.grad.data() + (static_cast<std::size_t>(i) * d + j) * m;
                if (an.requires_grad) kernels::axpy(1.0, g, an.grad_buffer().data() + i * m, m);
                if (bn.requires_grad) kernels::axpy(1.0, g, bn.grad_buffer().data() + j * m, m);
            }
    });
}

Tensor pair_dot(const Tensor& a, const Tensor& b) {
    require(a->shape == b->shape && a->shape.size() == 2, "pair_dot: expected two [d, m] tensors");
    const int d = a->shape[0];
    const std::size_t m = static_cast<std::size_t>(a->shape[1]);
    std::vector<double> v(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v[i * d + j] = kernels::dot(a->value.data() + i * m, b->value.data() + j * m, m);
    return make({d, d}, std::move(v), "pair_dot", any_requires({&a, &b}), {a, b}, [d, m](Node& self) {
        Node& an = *self.inputs[0];
        Node& bn = *self.inputs[1];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double g = self.grad[i * d + j];
                if (an.requires_grad) kernels::axpy(g, bn.value.data() + j * m, an.grad_buffer().data() + i * m, m);
                if (bn.requires_grad) kernels::axpy(g, an.value.data() + i * m, bn.grad_buffer().data() + j * m, m);
            }
    });
}

Tensor triple_sum(const Tensor& p, const Tensor& f) {
    require(p->shape.size() >= 2 && f->shape.size() >= 1 && p->shape[0] == p->shape[1] && f->shape[0] == p->shape[0],
            "triple_sum: shape mismatch");
    const int d = p->shape[0];
    const std::size_t m = f->size() / d;
    require(p->size() == static_cast<std::size_t>(d) * d * m, "triple_sum: trailing size mismatch");
    Shape shape{d, d, d};
    shape.insert(shape.end(), f->shape.begin() + 1, f->shape.end());
    std::vector<double> v(static_cast<std::size_t>(d) * d * d * m);
    for (int k = 0; k < d; ++k)
        for (int ij = 0; ij < d * d; ++ij) {
            double* o = v.data() + (static_cast<std::size_t>(k) * d * d + ij) * m;
            const double* pij = p->value.data() + ij * m;
            const double* fk = f->value.data() + k * m;
            for (std::size_t t = 0; t < m; ++t) o[t] = pij[t] + fk[t];
        }
    return make(std::move(shape), std::move(v), "triple_sum", any_requires({&p, &f}), {p, f}, [d, m](Node& self) {
        Node& pn = *self.inputs[0];
        Node& fn = *self.inputs[1];
        for (int k = 0; k < d; ++k)
            for (int ij = 0; ij < d * d; ++ij) {
                const double* g = self.grad.data() + (static_cast<std::size_t>(k) * d * d + ij) * m;
                if (pn.requires_grad) kernels::axpy(1.0, g, pn.grad_buffer().data() + ij * m, m);
                if (fn.requires_grad) kernels::axpy(1.0, g, fn.grad_buffer().data() + k * m, m);
            }
    });
}

Tensor max_axis1(const Tensor& x) {
    require(x->shape.size() >= 2, "max_axis1: need rank >= 2");
    const int a = x->shape[0], n = x->shape[1];
    require(n > 0, "max_axis1: empty axis");
    const std::size_t m = x->size() / (static_cast<std::size_t>(a) * n);
    Shape shape{a};
    shape.insert(shape.end(), x->shape.begin() + 2, x->shape.end());
    std::vector<double> v(static_cast<std::size_t>(a) * m);
    std::vector<int> arg(v.size(), 0);
    for (int i = 0; i < a; ++i) {
        double* o = v.data() + i * m;
        int* ai = arg.data() + i * m;
        std::copy_n(x->value.data() + static_cast<std::size_t>(i) * n * m, m, o);
        for (int l = 1; l < n; ++l) {
            const double* row = x->value.data() + (static_cast<std::size_t>(i) * n + l) * m;
            for (std::size_t t = 0; t < m; ++t)
                if (row[t] > o[t]) {
                    o[t] = row[t];
                    ai[t] = l;
                }
        }
    }
    const bool track = any_requires({&x});
    if (!track) arg.clear();
    return make(std::move(shape), std::move(v), "max_axis1", track, {x}, [a, n, m, arg = std::move(arg)](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (int i = 0; i < a; ++i)
            for (std::size_t t = 0; t < m; ++t) {
                const std::size_t o = i * m + t;
                g[(static_cast<std::size_t>(i) * n + arg[o]) * m + t] += self.grad[o];
            }
    });
}

// --- attention ---------------------------------------------------------------------------

namespace {

struct HeadView {
    int B, Lq, Lk, h, heads, dh;
};

// Copies columns [c0, c0 + w) of an [L, h] slab into a dense [L, w] buffer.
void gather(const double* src, int L, int h, int c0, int w, double* dst) {
    for (int r = 0; r < L; ++r) std::copy_n(src + static_cast<std::size_t>(r) * h + c0, w, dst + static_cast<std::size_t>(r) * w);
}
void scatter_add(const double* src, int L, int h, int c0, int w, double* dst) {
    for (int r = 0; r < L; ++r)
        kernels::axpy(1.0, src + static_cast<std::size_t>(r) * w, dst + static_cast<std::size_t>(r) * h + c0, w);
}

HeadView view_of(const Tensor& q, const Tensor& k, int heads) {
    require(q->shape.size() == 3 && k->shape.size() == 3, "attention: expected rank-3 inputs");
    require(q->shape[0] == k->shape[0] && q->shape[2] == k->shape[2], "attention: shape mismatch");
    require(heads > 0 && q->shape[2] % heads == 0, "attention: hidden size not divisible by heads");
    return {q->shape[0], q->shape[1], k->shape[1], q->shape[2], heads, q->shape[2] / heads};
}

// Query rows per score block, sized so a block of Lk scores stays in cache.
int row_block(int Lk) { return std::clamp(16384 / std::max(Lk, 1) / 4 * 4, 4, 64); }

// Unnormalized softmax numerators of Q_h K_h^T / sqrt(dh) for a block of
// query rows; inv[r] receives 1 / row sum. With `normalize` the rows are
// scaled to probabilities in place.
void score_block(const double* qh, int rows, const double* kt, const HeadView& hv, double* s, double* inv,
                 bool normalize) {
    kernels::gemm(rows, hv.Lk, hv.dh, qh, hv.dh, kt, hv.Lk, s, hv.Lk, false);
    const double sc = 1.0 / std::sqrt(static_cast<double>(hv.dh));
    for (int r = 0; r < rows; ++r) {
        double* row = s + static_cast<std::size_t>(r) * hv.Lk;
        const double mx = kernels::max(row, hv.Lk);
        inv[r] = 1.0 / kernels::exp_sum(row, hv.Lk, sc, mx * sc);
        if (normalize)
            for (int c = 0; c < hv.Lk; ++c) row[c] *= inv[r];
    }
}

}  // namespace

std::vector<double> attention_weights(const Tensor& q, const Tensor& k, int heads) {
    const HeadView hv = view_of(q, k, heads);
    std::vector<double> out(static_cast<std::size_t>(hv.B) * heads * hv.Lq * hv.Lk);
    std::vector<double> qh(static_cast<std::size_t>(hv.Lq) * hv.dh), kh(static_cast<std::size_t>(hv.Lk) * hv.dh),
        kt(kh.size()), inv(hv.Lq);
    for (int b = 0; b < hv.B; ++b)
        for (int hd = 0; hd < heads; ++hd) {
            gather(q->value.data() + static_cast<std::size_t>(b) * hv.Lq * hv.h, hv.Lq, hv.h, hd * hv.dh, hv.dh, qh.data());
            gather(k->value.data() + static_cast<std::size_t>(b) * hv.Lk * hv.h, hv.Lk, hv.h, hd * hv.dh, hv.dh, kh.data());
            kernels::transpose(kh.data(), hv.Lk, hv.dh, kt.data());
            score_block(qh.data(), hv.Lq, kt.data(), hv,
                        out.data() + (static_cast<std::size_t>(b) * heads + hd) * hv.Lq * hv.Lk, inv.data(), true);
        }
    return out;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    const HeadView hv = view_of(q, k, heads);
    require(v->shape == k->shape, "attention: key/value shape mismatch");
    const bool track = any_requires({&q, &k, &v});
    const std::size_t plane = static_cast<std::size_t>(hv.Lq) * hv.Lk;
    std::vector<double> probs;
    if (track) probs.resize(static_cast<std::size_t>(hv.B) * heads * plane);
    std::vector<double> out(q->size());
    std::vector<double> qh(static_cast<std::size_t>(hv.Lq) * hv.dh), kh(static_cast<std::size_t>(hv.Lk) * hv.dh),
        kt(kh.size()), vh(kh.size()), vt(kh.size()), oh(qh.size());
    const int block = row_block(hv.Lk);
    const bool long_keys = hv.Lk >= 64;
    std::vector<double> inv(block);
    std::vector<double> sbuf(track ? 0 : static_cast<std::size_t>(std::min(block, hv.Lq)) * hv.Lk);
    for (int b = 0; b < hv.B; ++b)
        for (int hd = 0; hd < heads; ++hd) {
            const std::size_t qoff = static_cast<std::size_t>(b) * hv.Lq * hv.h;
            const std::size_t koff = static_cast<std::size_t>(b) * hv.Lk * hv.h;
            gather(q->value.data() + qoff, hv.Lq, hv.h, hd * hv.dh, hv.dh, qh.data());
            gather(k->value.data() + koff, hv.Lk, hv.h, hd * hv.dh, hv.dh, kh.data());
            gather(v->value.data() + koff, hv.Lk, hv.h, hd * hv.dh, hv.dh, vh.data());
            kernels::transpose(kh.data(), hv.Lk, hv.dh, kt.data());
            if (long_keys) kernels::transpose(vh.data(), hv.Lk, hv.dh, vt.data());
            for (int r0 = 0; r0 < hv.Lq; r0 += block) {
                const int rows = std::min(block, hv.Lq - r0);
                double* s = track ? probs.data() + (static_cast<std::size_t>(b) * heads + hd) * plane +
                                        static_cast<std::size_t>(r0) * hv.Lk
                                  : sbuf.data();
                score_block(qh.data() + static_cast<std::size_t>(r0) * hv.dh, rows, kt.data(), hv, s, inv.data(), track);
                double* o = oh.data() + static_cast<std::size_t>(r0) * hv.dh;
                if (long_keys) {
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < hv.dh; ++c)
                            o[static_cast<std::size_t>(r) * hv.dh + c] =
                                kernels::dot(s + static_cast<std::size_t>(r) * hv.Lk, vt.data() + static_cast<std::size_t>(c) * hv.Lk, hv.Lk);
                } else {
                    kernels::gemm(rows, hv.dh, hv.Lk, s, hv.Lk, vh.data(), hv.dh, o, hv.dh, false);
                }
                if (!track)
                    for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < hv.dh; ++c) o[static_cast<std::size_t>(r) * hv.dh + c] *= inv[r];
            }
            for (int r = 0; r < hv.Lq; ++r)
                std::copy_n(oh.data() + static_cast<std::size_t>(r) * hv.dh, hv.dh,
                            out.data() + qoff + static_cast<std::size_t>(r) * hv.h + hd * hv.dh);
        }
    return make(q->shape, std::move(out), "attention", track, {q, k, v},
                [hv, plane, probs = std::move(probs)](Node& self) {
                    Node& qn = *self.inputs[0];
                    Node& kn = *self.inputs[1];
                    Node& vn = *self.inputs[2];
                    const std::size_t qs = static_cast<std::size_t>(hv.Lq) * hv.dh;
                    const std::size_t ks = static_cast<std::size_t>(hv.Lk) * hv.dh;
                    std::vector<double> qh(qs), kh(ks), vh(ks), vt(ks), doh(qs), dp(plane), pt(plane), dst(plane);
                    std::vector<double> dq(qs), dk(ks), dv(ks);
                    const double sc = 1.0 / std::sqrt(static_cast<double>(hv.dh));
                    for (int b = 0; b < hv.B; ++b)
                        for (int hd = 0; hd < hv.heads; ++hd) {
                            const std::size_t qoff = static_cast<std::size_t>(b) * hv.Lq * hv.h;
                            const std::size_t koff = static_cast<std::size_t>(b) * hv.Lk * hv.h;
                            const int c0 = hd * hv.dh;
                            const double* P = probs.data() + (static_cast<std::size_t>(b) * hv.heads + hd) * plane;
                            gather(qn.value.data() + qoff, hv.Lq, hv.h, c0, hv.dh, qh.data());
                            gather(kn.value.data() + koff, hv.Lk, hv.h, c0, hv.dh, kh.data());
                            gather(vn.value.data() + koff, hv.Lk, hv.h, c0, hv.dh, vh.data());
                            gather(self.grad.data() + qoff, hv.Lq, hv.h, c0, hv.dh, doh.data());
                            if (vn.requires_grad) {
                                kernels::transpose(P, hv.Lq, hv.Lk, pt.data());
                                kernels::gemm(hv.Lk, hv.dh, hv.Lq, pt.data(), hv.Lq, doh.data(), hv.dh, dv.data(), hv.dh, false);
                                scatter_add(dv.data(), hv.Lk, hv.h, c0, hv.dh, vn.grad_buffer().data() + koff);
                            }
                            if (!qn.requires_grad && !kn.requires_grad) continue;
                            kernels::transpose(vh.data(), hv.Lk, hv.dh, vt.data());
                            kernels::gemm(hv.Lq, hv.Lk, hv.dh, doh.data(), hv.dh, vt.data(), hv.Lk, dp.data(), hv.Lk, false);
                            for (int r = 0; r < hv.Lq; ++r) {
                                const double* pr = P + static_cast<std::size_t>(r) * hv.Lk;
                                double* gr = dp.data() + static_cast<std::size_t>(r) * hv.Lk;
                                const double dotp = kernels::dot(pr, gr, hv.Lk);
                                for (int c = 0; c < hv.Lk; ++c) gr[c] = pr[c] * (gr[c] - dotp) * sc;
                            }
                            if (qn.requires_grad) {
                                kernels::gemm(hv.Lq, hv.dh, hv.Lk, dp.data(), hv.Lk, kh.data(), hv.dh, dq.data(), hv.dh, false);
                                scatter_add(dq.data(), hv.Lq, hv.h, c0, hv.dh, qn.grad_buffer().data() + qoff);
                            }
                            if (kn.requires_grad) {
                                kernels::transpose(dp.data(), hv.Lq, hv.Lk, dst.data());
                                kernels::gemm(hv.Lk, hv.dh, hv.Lq, dst.data(), hv.Lq, qh.data(), hv.dh, dk.data(), hv.dh, false);
                                scatter_add(dk.data(), hv.Lk, hv.h, c0, hv.dh, kn.grad_buffer().data() + koff);
                            }
                        }
                });
}

// --- input lifts ------------------------------------------------------------------------------

Tensor affine_lift(std::span<const double> x, int d, int n, const Tensor& w, const Tensor& b) {
    require(x.size() == static_cast<std::size_t>(d) * n, "affine_lift: input size mismatch");
    require(w->shape.size() == 1 && b->shape == w->shape, "affine_lift: parameter shape mismatch");
    const int h = w->shape[0];
    std::vector<double> v(x.size() * h);
    for (std::size_t r = 0; r < x.size(); ++r)
        for (int t = 0; t < h; ++t) v[r * h + t] = x[r] * w->value[t] + b->value[t];
    const bool track = any_requires({&w, &b});
    std::vector<double> xs;
    if (track) xs.assign(x.begin(), x.end());
    return make({d, n, h}, std::move(v), "affine_lift", track, {w, b}, [h, xs = std::move(xs)](Node& self) {
        Node& wn = *self.inputs[0];
        Node& bn = *self.inputs[1];
        for (std::size_t r = 0; r < xs.size(); ++r) {
            const double* g = self.grad.data() + r * h;
            if (wn.requires_grad) kernels::axpy(xs[r], g, wn.grad_buffer().data(), h);
            if (bn.requires_grad) kernels::axpy(1.0, g, bn.grad_buffer().data(), h);
        }
    });
}

Tensor embedding(std::span<const int> codes, int d, int n, const Tensor& table) {
    require(codes.size() == static_cast<std::size_t>(d) * n, "embedding: input size mismatch");
    require(table->shape.size() == 2, "embedding: table must be rank 2");
    const int K = table->shape[0], h = table->shape[1];
    std::vector<double> v(codes.size() * h);
    for (std::size_t r = 0; r < codes.size(); ++r) {
        if (codes[r] < 0 || codes[r] >= K)
            fail(ErrorKind::InvalidInput, "category " + std::to_string(codes[r]) + " outside trained arity " + std::to_string(K));
        std::copy_n(table->value.data() + static_cast<std::size_t>(codes[r]) * h, h, v.data() + r * h);
    }
    const bool track = any_requires({&table});
    std::vector<int> cs;
    if (track) cs.assign(codes.begin(), codes.end());
    return make({d, n, h}, std::move(v), "embedding", track, {table}, [h, cs = std::move(cs)](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        for (std::size_t r = 0; r < cs.size(); ++r)
            kernels::axpy(1.0, self.grad.data() + r * h, g.data() + static_cast<std::size_t>(cs[r]) * h, h);
    });
}

// --- losses ------------------------------------------------------------------------------

Tensor bce(const Tensor& p, std::span<const double> target, std::span<const double> mask) {
    require(target.size() == p->size() && mask.size() == p->size(), "bce: size mismatch");
    std::size_t count = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < p->size(); ++i) {
        if (mask[i] == 0.0) continue;
        const double pc = std::clamp(p->value[i], kClampLo, kClampHi);
        total -= target[i] * std::log(pc) + (1.0 - target[i]) * std::log(1.0 - pc);
        ++count;
    }
    const double mean = count ? total / static_cast<double>(count) : 0.0;
    std::vector<double> y(target.begin(), target.end()), m(mask.begin(), mask.end());
    return make({}, {mean}, "bce", count > 0 && any_requires({&p}), {p},
                [count, y = std::move(y), m = std::move(m)](Node& self) {
                    Node& pn = *self.inputs[0];
                    auto& g = pn.grad_buffer();
                    const double s = self.grad[0] / static_cast<double>(count);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        if (m[i] == 0.0) continue;
                        const double pc = std::clamp(pn.value[i], kClampLo, kClampHi);
                        g[i] += s * (-y[i] / pc + (1.0 - y[i]) / (1.0 - pc));
                    }
                });
}

Tensor bce_with_logits(const Tensor& z, std::span<const double> target, std::span<const double> mask) {
    require(target.size() == z->size() && mask.size() == z->size(), "bce_with_logits: size mismatch");
    std::size_t count = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < z->size(); ++i) {
        if (mask[i] == 0.0) continue;
        const double x = z->value[i];
        total += std::max(x, 0.0) - x * target[i] + std::log1p(std::exp(-std::abs(x)));
        ++count;
    }
    const double mean = count ? total / static_cast<double>(count) : 0.0;
    std::vector<double> y(target.begin(), target.end()), m(mask.begin(), mask.end());
    return make({}, {mean}, "bce_with_logits", count > 0 && any_requires({&z}), {z},
                [count, y = std::move(y), m = std::move(m)](Node& self) {
                    Node& zn = *self.inputs[0];
                    auto& g = zn.grad_buffer();
                    const double s = self.grad[0] / static_cast<double>(count);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (m[i] != 0.0) g[i] += s * (sigmoid1(zn.value[i]) - y[i]);
                });
}

}  // namespace sicl::nn
