#pragma once

// Minimal reverse-mode autodiff over dense row-major f64 tensors.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sicl::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& s);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized on first use; empty until backward reaches the node
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;

    std::size_t size() const { return value.size(); }
    std::vector<double>& grad_buffer();
};

using Tensor = std::shared_ptr<Node>;

Tensor constant(Shape shape, std::vector<double> values);
Tensor parameter(Shape shape, std::vector<double> values);

// Graph recording is on by default; the guard turns it off for inference.
bool grad_enabled();
class NoGrad {
   public:
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

   private:
    bool prev_;
};

// Accumulates seed * d(root)/d(x) into x->grad for every reachable x.
void backward(const Tensor& root, double seed = 1.0);

// --- ops -----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor mul_const(const Tensor& a, std::span<const double> mask);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// logit of sigmoid(a) * sigmoid(b), elementwise
Tensor and_logits(const Tensor& a, const Tensor& b);

// x: [..., in], w: [in, out], b: [out] or null.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
// Normalizes over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor reshape(const Tensor& x, Shape shape);
// [a, b, rest...] -> [b, a, rest...]
Tensor swap01(const Tensor& x);
// a, b: [d, rest...] -> [d, d, rest...], out[i, j] = a[i] + b[j]
Tensor pair_sum(const Tensor& a, const Tensor& b);
// a, b: [d, m] -> [d, d], out[i, j] = <a[i], b[j]>
Tensor pair_dot(const Tensor& a, const Tensor& b);
// p: [d, d, m], f: [d, m] -> [d, d, d, m], out[k, i, j] = p[i, j] + f[k]
Tensor triple_sum(const Tensor& p, const Tensor& f);
// x: [a, n, m] -> [a, m], max over the middle axis (first index wins ties).
Tensor max_axis1(const Tensor& x);

// Scaled dot-product attention split into `heads` heads.
// q: [B, Lq, h], k and v: [B, Lk, h] -> [B, Lq, h].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads);
// Softmax weights of the same attention, [B, heads, Lq, Lk]; for inspection.
std::vector<double> attention_weights(const Tensor& q, const Tensor& k, int heads);

// x: [d, n] constants -> [d, n, h] with out = x * w + b.
Tensor affine_lift(std::span<const double> x, int d, int n, const Tensor& w, const Tensor& b);
// codes: [d, n] category indices -> [d, n, h] rows of table [K, h].
Tensor embedding(std::span<const int> codes, int d, int n, const Tensor& table);

// Mean binary cross-entropy over entries with mask != 0; zero when the mask
// is empty. Probabilities are clamped to [1e-7, 1 - 1e-7].
Tensor bce(const Tensor& p, std::span<const double> target, std::span<const double> mask);
Tensor bce_with_logits(const Tensor& z, std::span<const double> target, std::span<const double> mask);

}  // namespace sicl::nn
