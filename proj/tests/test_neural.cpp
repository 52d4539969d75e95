#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "sicl/error.hpp"
#include "sicl/kernels.hpp"
#include "sicl/nn.hpp"
#include "sicl/train.hpp"
#include "support/gradcheck.hpp"

using namespace sicl;
using namespace sicl::nn;
using sicl::testing::grad_check;
using sicl::testing::random_param;
using sicl::testing::weighted_sum;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.hidden = 8;
    c.blocks = 1;
    c.heads = 2;
    c.ffn = 8;
    c.head_hidden = 8;
    return c;
}

scm::DataSample toy_data(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    Dag g = scm::sample_graph(scm::ErdosRenyi{}, d, rng);
    return scm::sample_data(scm::sample_scm(g, scm::LinearGaussian{}, rng), n, rng);
}

std::vector<int> shuffled(int d, std::uint64_t seed) {
    std::vector<int> p(d);
    std::iota(p.begin(), p.end(), 0);
    Rng rng(seed);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_grad(const std::function<Tensor()>& f, const std::vector<Tensor>& inputs, double tol = 1e-5) {
    const auto r = grad_check(f, inputs, tol);
    INFO("max relative error " << r.max_rel);
    CHECK(r.checked > 0);
    CHECK(r.failed == 0);
}

struct BackendGuard {
    kernels::Backend saved = kernels::active_backend();
    ~BackendGuard() { kernels::set_backend(saved); }
};

}  // namespace

// --- kernels ------------------------------------------------------------------------

TEST_CASE("kernel variants agree with the scalar reference") {
    if (!kernels::backend_available(kernels::Backend::Avx2) && !kernels::backend_available(kernels::Backend::Neon)) {
        MESSAGE("no SIMD backend on this host");
        return;
    }
    const auto simd = kernels::backend_available(kernels::Backend::Avx2) ? kernels::Backend::Avx2 : kernels::Backend::Neon;
    const auto& ref = kernels::table(kernels::Backend::Scalar);
    const auto& vec = kernels::table(simd);
    Rng rng(5);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 1001u}) {
        auto a = sicl::testing::random_values(n, rng), b = sicl::testing::random_values(n, rng);
        double mag = 0.0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        CHECK(std::abs(ref.dot(a.data(), b.data(), n) - vec.dot(a.data(), b.data(), n)) <= 1e-14 * mag + 1e-300);
        auto y1 = b, y2 = b;
        ref.axpy(0.7, a.data(), y1.data(), n);
        vec.axpy(0.7, a.data(), y2.data(), n);
        CHECK(max_abs_diff(y1, y2) <= 1e-15);
        CHECK(ref.max(a.data(), n) == vec.max(a.data(), n));
        CHECK(std::abs(ref.sum(a.data(), n) - vec.sum(a.data(), n)) <= 1e-13);
        auto e1 = sicl::testing::random_values(n, rng, -30.0, 5.0), e2 = e1;
        ref.exp(e1.data(), n);
        vec.exp(e2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(e1[i] - e2[i]) <= 1e-13 * e1[i]);
        auto s1 = sicl::testing::random_values(n, rng, -10.0, 2.0), s2 = s1;
        const double t1 = ref.exp_sum(s1.data(), n, 0.5, 0.3), t2 = vec.exp_sum(s2.data(), n, 0.5, 0.3);
        CHECK(std::abs(t1 - t2) <= 1e-13 * t1);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(s1[i] - s2[i]) <= 1e-13 * s1[i]);
    }
    for (int m : {1, 3, 4, 5, 9}) {
        for (int n : {1, 4, 6, 8, 13, 17}) {
            for (int k : {1, 2, 8, 33}) {
                auto A = sicl::testing::random_values(static_cast<std::size_t>(m) * k, rng);
                auto B = sicl::testing::random_values(static_cast<std::size_t>(k) * n, rng);
                auto C0 = sicl::testing::random_values(static_cast<std::size_t>(m) * n, rng);
                for (bool acc : {false, true}) {
                    auto C1 = C0, C2 = C0;
                    ref.gemm(m, n, k, A.data(), k, B.data(), n, C1.data(), n, acc);
                    vec.gemm(m, n, k, A.data(), k, B.data(), n, C2.data(), n, acc);
                    CHECK(max_abs_diff(C1, C2) <= 1e-13 * (k + 1));
                }
            }
        }
    }
}

TEST_CASE("kernel exp matches std::exp") {
    Rng rng(2);
    auto x = sicl::testing::random_values(257, rng, -700.0, 700.0);
    auto y = x;
    kernels::exp_inplace(y.data(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - std::exp(x[i])) <= 1e-14 * std::exp(x[i]));
    double lo = -1000.0;
    kernels::exp_inplace(&lo, 1);
    CHECK(lo > 0.0);
    CHECK(lo < 1e-300);
}

TEST_CASE("backend selection") {
    BackendGuard guard;
    CHECK(kernels::backend_available(kernels::Backend::Scalar));
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    if (!kernels::backend_available(kernels::Backend::Neon))
        CHECK_THROWS_AS(kernels::set_backend(kernels::Backend::Neon), Error);
}

TEST_CASE("network outputs agree across kernel backends") {
    BackendGuard guard;
    Network net(ModelKind::Vpn, tiny_config(), 3);
    const auto data = toy_data(40, 4, 8);
    kernels::set_backend(kernels::Backend::Scalar);
    const auto ref = vstruct_probs(net, data);
    for (auto b : {kernels::Backend::Avx2, kernels::Backend::Neon}) {
        if (!kernels::backend_available(b)) continue;
        kernels::set_backend(b);
        CHECK(max_abs_diff(ref, vstruct_probs(net, data)) < 1e-12);
    }
}

// --- gradient checks ------------------------------------------------------------------

TEST_CASE("gradient checks: elementwise and layout ops") {
    Rng rng(11);
    auto a = random_param({3, 4, 5}, rng), b = random_param({3, 4, 5}, rng);
    check_grad([&] { return weighted_sum(add(a, b)); }, {a, b});
    check_grad([&] { return weighted_sum(scale(a, -1.7)); }, {a});
    const auto m = sicl::testing::random_values(a->size(), rng);
    check_grad([&] { return weighted_sum(mul_const(a, m)); }, {a});
    check_grad([&] { return weighted_sum(sigmoid(scale(a, 3.0))); }, {a});
    auto r = random_param({50}, rng);
    for (double& x : r->value) x = (x < 0 ? -0.05 : 0.05) + x;  // keep away from the kink
    check_grad([&] { return weighted_sum(relu(r)); }, {r});
    check_grad([&] { return weighted_sum(reshape(a, {12, 5})); }, {a});
    check_grad([&] { return weighted_sum(swap01(a)); }, {a});
    auto p = random_param({4, 6}, rng), q = random_param({4, 6}, rng);
    check_grad([&] { return weighted_sum(pair_sum(p, q)); }, {p, q});
    check_grad([&] { return weighted_sum(pair_dot(p, q)); }, {p, q});
    check_grad([&] { return weighted_sum(pair_dot(p, p)); }, {p});
    check_grad([&] { return weighted_sum(and_logits(p, q)); }, {p, q});
    auto pp = random_param({4, 4, 3}, rng), f = random_param({4, 3}, rng);
    check_grad([&] { return weighted_sum(triple_sum(pp, f)); }, {pp, f});
    auto mx = random_param({3, 7, 4}, rng);
    check_grad([&] { return weighted_sum(max_axis1(mx)); }, {mx});
}

TEST_CASE("gradient checks: linear, layer norm, attention, lifts") {
    Rng rng(12);
    auto x = random_param({2, 5, 6}, rng), w = random_param({6, 3}, rng), b = random_param({3}, rng);
    check_grad([&] { return weighted_sum(linear(x, w, b)); }, {x, w, b});
    check_grad([&] { return weighted_sum(linear(x, w, nullptr)); }, {x, w});
    auto g = random_param({6}, rng, 0.5, 1.5), be = random_param({6}, rng);
    check_grad([&] { return weighted_sum(layer_norm(x, g, be)); }, {x, g, be});
    auto q = random_param({3, 5, 8}, rng), k = random_param({3, 4, 8}, rng), v = random_param({3, 4, 8}, rng);
    check_grad([&] { return weighted_sum(attention(q, k, v, 2)); }, {q, k, v});
    check_grad([&] { return weighted_sum(attention(q, k, v, 1)); }, {q, k, v});
    auto kl = random_param({1, 70, 4}, rng), vl = random_param({1, 70, 4}, rng), ql = random_param({1, 3, 4}, rng);
    check_grad([&] { return weighted_sum(attention(ql, kl, vl, 2)); }, {ql, kl, vl});
    const auto xs = sicl::testing::random_values(12, rng);
    auto lw = random_param({5}, rng), lb = random_param({5}, rng);
    check_grad([&] { return weighted_sum(affine_lift(xs, 3, 4, lw, lb)); }, {lw, lb});
    const std::vector<int> codes{0, 1, 2, 1, 1, 0};
    auto table = random_param({3, 4}, rng);
    check_grad([&] { return weighted_sum(embedding(codes, 2, 3, table)); }, {table});
}

TEST_CASE("gradient checks: losses") {
    Rng rng(13);
    const Dag g(4, std::vector<Edge>{{0, 1}, {2, 1}, {1, 3}});
    auto S = random_param({4, 4}, rng, 0.05, 0.95);
    check_grad([&] { return skeleton_loss(S, g); }, {S}, 1e-6);
    auto U = random_param({4, 4, 4}, rng, 0.05, 0.95);
    check_grad([&] { return vstruct_loss(U, g, skeleton_of(g)).loss; }, {U}, 1e-6);
    auto z = random_param({4, 4}, rng, -3.0, 3.0);
    check_grad([&] { return skeleton_loss_logits(z, g); }, {z}, 1e-6);
    check_grad([&] { return node_edge_loss_logits(z, g); }, {z}, 1e-6);
    auto zu = random_param({4, 4, 4}, rng, -3.0, 3.0);
    check_grad([&] { return vstruct_loss_logits(zu, g, skeleton_of(g)).loss; }, {zu}, 1e-6);
}

TEST_CASE("gradient checks: layers and full networks") {
    Rng rng(14);
    ParamStore ps;
    const auto enc = EncoderLayer::make(ps, "enc", 8, 2, 12, 4);
    auto x = random_param({3, 5, 8}, rng);
    std::vector<Tensor> inputs{x};
    for (const auto& [name, t] : ps.items()) inputs.push_back(t);
    check_grad([&] { return weighted_sum(enc(x)); }, inputs);

    const auto data = toy_data(6, 3, 21);
    for (ModelKind kind : {ModelKind::Spn, ModelKind::Vpn, ModelKind::NodeEdge}) {
        CAPTURE(to_string(kind));
        Network net(kind, tiny_config(), 5);
        std::vector<Tensor> params;
        for (const auto& [name, t] : net.params().items()) params.push_back(t);
        const Dag truth(3, std::vector<Edge>{{0, 1}, {2, 1}});
        check_grad([&] { return instance_loss(net, {truth, data}).loss; }, params);
    }
}

// --- shapes and simple contracts ---------------------------------------------------------------

TEST_CASE("embedding contracts") {
    ModelConfig cfg;
    cfg.hidden = 16;
    Network net(ModelKind::Spn, cfg, 1);
    const auto data = toy_data(50, 6, 2);
    CHECK(net.embed(data)->shape == Shape{6, 50, 16});

    const scm::DataSample zeros(5, 3, std::vector<double>(15, 0.0));
    const Tensor e = net.embed(zeros);
    const auto& bias = net.params().get("embed.b")->value;
    for (std::size_t r = 0; r < 15; ++r)
        for (int t = 0; t < 16; ++t) CHECK(e->value[r * 16 + t] == bias[t]);

    ModelConfig dc = cfg;
    dc.max_arity = 2;
    Network disc(ModelKind::Spn, dc, 1);
    const scm::DataSample bin(2, 1, std::vector<double>{0.0, 1.0}, std::vector<int>{2});
    const Tensor de = disc.embed(bin);
    std::vector<double> r0(de->value.begin(), de->value.begin() + 16), r1(de->value.begin() + 16, de->value.end());
    CHECK(r0 != r1);
    const scm::DataSample tri(1, 1, std::vector<double>{2.0}, std::vector<int>{3});
    CHECK_THROWS_AS(disc.embed(tri), Error);
    CHECK_THROWS_AS(disc.embed(data), Error);
}

TEST_CASE("encoder and head shapes") {
    ModelConfig cfg;
    cfg.hidden = 16;
    Network spn(ModelKind::Spn, cfg, 1);
    const auto data = toy_data(50, 6, 3);
    NoGrad ng;
    const Tensor F = spn.encode_nodes(spn.embed(data));
    CHECK(F->shape == Shape{6, 50, 16});
    CHECK(spn.encode_pairs(F)->shape == Shape{6, 6, 50, 16});
    for (double s : skeleton_probs(spn, data)) CHECK((s > 0.0 && s < 1.0));

    Network vpn(ModelKind::Vpn, cfg, 1);
    const auto U = vstruct_probs(vpn, data);
    CHECK(U.size() == 216u);
    for (double u : U) CHECK((u > 0.0 && u < 1.0));

    Network ne(ModelKind::NodeEdge, cfg, 1);
    const auto A = node_edge_probs(ne, data);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            if (i == j)
                CHECK(A[i * 6 + j] == 0.0);
            else
                CHECK((A[i * 6 + j] > 0.0 && A[i * 6 + j] < 1.0));
            if (i < j) CHECK(A[i * 6 + j] + A[j * 6 + i] <= 1.0 + 1e-12);  // the two directions share one existence factor
        }
    CHECK_THROWS_AS(ne.encode_pairs(F), Error);
}

TEST_CASE("and_logits is the logit of a product of sigmoids") {
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const std::vector<double> av{-3.0, 0.0, 2.5, 40.0, -40.0, 800.0, -800.0};
    for (double x : av)
        for (double y : av) {
            const auto z = and_logits(constant({}, {x}), constant({}, {y}));
            const double v = z->value[0];
            REQUIRE(std::isfinite(v));
            if (std::abs(x) < 50 && std::abs(y) < 50) CHECK(sig(v) == doctest::Approx(sig(x) * sig(y)).epsilon(1e-12));
            CHECK(v <= std::min(x, y) + 1e-12);
        }
}

TEST_CASE("zero-weight skeleton head gives sigmoid(bias)") {
    Network spn(ModelKind::Spn, tiny_config(), 4);
    auto& w = spn.params().get("skeleton_head.w")->value;
    std::fill(w.begin(), w.end(), 0.0);
    const double b = spn.params().get("skeleton_head.b")->value[0];
    for (double s : skeleton_probs(spn, toy_data(20, 4, 5))) CHECK(s == doctest::Approx(1.0 / (1.0 + std::exp(-b))).epsilon(1e-15));
}

TEST_CASE("attention weights sum to one per query") {
    Rng rng(6);
    auto q = random_param({2, 5, 8}, rng, -3.0, 3.0), k = random_param({2, 9, 8}, rng, -3.0, 3.0);
    const auto w = attention_weights(q, k, 2);
    for (std::size_t row = 0; row < w.size() / 9; ++row) {
        double s = 0.0;
        for (int c = 0; c < 9; ++c) s += w[row * 9 + c];
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("non-finite values raise") {
    auto x = parameter({2}, {1.0, 2.0});
    x->value[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(relu(x), Error);
    try {
        relu(x);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
    }
    CHECK_THROWS_AS(constant({1}, {std::nan("")}), Error);
}

// --- equivariance ------------------------------------------------------------------------------

TEST_CASE("node encoder equivariance") {
    Network net(ModelKind::Spn, tiny_config(), 7);
    const int d = 5, n = 12;
    const auto data = toy_data(n, d, 9);
    const auto perm = shuffled(d, 3);
    NoGrad ng;
    const Tensor F = net.encode_nodes(net.embed(data));
    const Tensor Fp = net.encode_nodes(net.embed(data.permute_columns(perm)));
    const int h = F->shape[2];
    double dev = 0.0;
    for (int i = 0; i < d; ++i)
        for (int t = 0; t < n * h; ++t)
            dev = std::max(dev, std::abs(F->value[i * n * h + t] - Fp->value[perm[i] * n * h + t]));
    CHECK(dev < 1e-9);

    const auto rperm = shuffled(n, 4);
    const Tensor Fr = net.encode_nodes(net.embed(data.permute_rows(rperm)));
    dev = 0.0;
    for (int i = 0; i < d; ++i)
        for (int l = 0; l < n; ++l)
            for (int t = 0; t < h; ++t)
                dev = std::max(dev, std::abs(F->value[(i * n + l) * h + t] - Fr->value[(i * n + rperm[l]) * h + t]));
    CHECK(dev < 1e-9);

    const Tensor P = net.encode_pairs(F);
    const Tensor Pp = net.encode_pairs(Fp);
    dev = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int t = 0; t < n * h; ++t)
                dev = std::max(dev, std::abs(P->value[(i * d + j) * n * h + t] - Pp->value[(perm[i] * d + perm[j]) * n * h + t]));
    CHECK(dev < 1e-9);
}

TEST_CASE("head outputs are permutation equivariant") {
    const int d = 5;
    const auto data = toy_data(15, d, 10);
    const auto perm = shuffled(d, 8);
    const auto dp = data.permute_columns(perm);
    Network spn(ModelKind::Spn, tiny_config(), 1), vpn(ModelKind::Vpn, tiny_config(), 2), ne(ModelKind::NodeEdge, tiny_config(), 3);
    const auto S = skeleton_probs(spn, data), Sp = skeleton_probs(spn, dp);
    const auto A = node_edge_probs(ne, data), Ap = node_edge_probs(ne, dp);
    const auto U = vstruct_probs(vpn, data), Up = vstruct_probs(vpn, dp);
    double dev = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            dev = std::max(dev, std::abs(S[i * d + j] - Sp[perm[i] * d + perm[j]]));
            dev = std::max(dev, std::abs(A[i * d + j] - Ap[perm[i] * d + perm[j]]));
            for (int k = 0; k < d; ++k)
                dev = std::max(dev, std::abs(U[(k * d + i) * d + j] - Up[(perm[k] * d + perm[i]) * d + perm[j]]));
        }
    CHECK(dev < 1e-7);
}

// --- losses ------------------------------------------------------------------------------------

TEST_CASE("skeleton loss values") {
    const Dag g(4, std::vector<Edge>{{0, 1}, {1, 2}, {3, 2}});
    auto y = skeleton_labels(g);
    for (double& v : y) v = std::clamp(v, 1e-7, 1.0 - 1e-7);
    CHECK(skeleton_loss(constant({4, 4}, y), g)->value[0] <= 1e-6 * 16);
    CHECK(std::abs(skeleton_loss(constant({4, 4}, std::vector<double>(16, 0.5)), g)->value[0] - std::log(2.0)) < 1e-12);
}

TEST_CASE("v-structure labels and UT masks") {
    const Dag collider(3, std::vector<Edge>{{0, 1}, {2, 1}});
    const Dag chain(3, std::vector<Edge>{{0, 1}, {1, 2}});
    const auto m = ut_mask(skeleton_of(collider));
    CHECK(std::accumulate(m.begin(), m.end(), 0.0) == 2.0);  // (1;0,2) in both leaf orders
    CHECK(m[(1 * 3 + 0) * 3 + 2] == 1.0);
    CHECK(vstruct_labels(collider)[(1 * 3 + 0) * 3 + 2] == 1.0);
    CHECK(vstruct_labels(chain)[(1 * 3 + 0) * 3 + 2] == 0.0);

    const std::vector<double> half(27, 0.5);
    const auto lc = vstruct_loss(constant({3, 3, 3}, half), collider, skeleton_of(collider));
    CHECK(!lc.empty_mask);
    CHECK(std::abs(lc.loss->value[0] - std::log(2.0)) < 1e-12);
    const Dag empty(3);
    const auto le = vstruct_loss(constant({3, 3, 3}, half), empty, skeleton_of(empty));
    CHECK(le.empty_mask);
    CHECK(le.loss->value[0] == 0.0);
}

TEST_CASE("v-structure loss ignores non-UT entries exactly") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 5;
        const Dag g = scm::sample_graph(scm::ErdosRenyi{scm::ErdosRenyi::Param::ExpectedDegree, 2.5}, d, rng);
        const Skeleton s = skeleton_of(g);
        const auto mask = ut_mask(s);
        auto U = sicl::testing::random_values(static_cast<std::size_t>(d) * d * d, rng, 0.01, 0.99);
        const double base = vstruct_loss(constant({d, d, d}, U), g, s).loss->value[0];
        auto V = U;
        for (std::size_t i = 0; i < V.size(); ++i)
            if (mask[i] == 0.0) V[i] = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        CHECK(vstruct_loss(constant({d, d, d}, V), g, s).loss->value[0] == base);
    }
}

// --- optimizer, training, checkpoints ------------------------------------------------------------

TEST_CASE("adam minimizes a quadratic") {
    ParamStore ps;
    auto x = ps.add("x", {3}, {1.0, -2.0, 3.0});
    Adam opt;
    opt.lr = 0.05;
    for (int it = 0; it < 500; ++it) {
        ps.zero_grad();
        const std::vector<double> target{0.5, 0.5, 0.5};
        backward(bce(sigmoid(x), target, std::vector<double>(3, 1.0)));
        opt.step(ps);
    }
    for (double v : x->value) CHECK(std::abs(v) < 0.05);
}

TEST_CASE("parameter store contracts") {
    ParamStore ps;
    ps.add("a", {2}, {1.0, 2.0});
    CHECK_THROWS_AS(ps.add("a", {1}, {0.0}), Error);
    CHECK_THROWS_AS(ps.get("b"), Error);
    ParamStore other;
    other.add("a", {3}, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(ps.copy_from(other, {"a"}), Error);
    CHECK(Network(ModelKind::Spn, tiny_config(), 1).params().shape_hash() ==
          Network(ModelKind::Spn, tiny_config(), 2).params().shape_hash());
    CHECK(Network(ModelKind::Spn, tiny_config(), 1).params().shape_hash() !=
          Network(ModelKind::Vpn, tiny_config(), 1).params().shape_hash());
}

namespace {
TrainConfig tiny_train(ModelKind target) {
    TrainConfig c;
    c.target = target;
    c.model = tiny_config();
    c.stream.d = 4;
    c.stream.n_min = 8;
    c.stream.n_max = 12;
    c.stream.graph = scm::ErdosRenyi{scm::ErdosRenyi::Param::ExpectedDegree, 2.0};
    c.steps = 4;
    c.batch = 2;
    c.validation_size = 3;
    c.eval_every = 2;
    c.seed = 17;
    return c;
}
}  // namespace

TEST_CASE("training replays bit-for-bit") {
    const auto c = tiny_train(ModelKind::Spn);
    const auto a = train(c), b = train(c);
    REQUIRE(a.log.size() == 4u);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].loss == b.log[i].loss);
        CHECK(a.log[i].validation_loss == b.log[i].validation_loss);
    }
    for (std::size_t i = 0; i < a.net.params().items().size(); ++i)
        CHECK(a.net.params().items()[i].second->value == b.net.params().items()[i].second->value);
    CHECK(log_to_csv(a.log) == log_to_csv(b.log));
    auto c2 = c;
    c2.seed = 18;
    CHECK(train(c2).log[0].loss != a.log[0].loss);
}

TEST_CASE("vpn starts from the spn encoders") {
    const auto spn = train(tiny_train(ModelKind::Spn));
    auto vc = tiny_train(ModelKind::Vpn);
    vc.steps = 0;
    const auto vpn = train(vc, &spn.net);
    int shared = 0;
    for (const auto& [name, t] : vpn.net.params().items()) {
        if (name.rfind("vstruct_head", 0) == 0) continue;
        CHECK(t->value == spn.net.params().get(name)->value);
        ++shared;
    }
    CHECK(shared > 0);
    auto bad = vc;
    bad.model.hidden = 16;
    CHECK_THROWS_AS(train(bad, &spn.net), Error);
}

TEST_CASE("same-kind initialization continues training") {
    const auto c = tiny_train(ModelKind::NodeEdge);
    const auto first = train(c);
    auto c0 = c;
    c0.steps = 0;
    c0.model.block_rows = 7;
    const auto copy = train(c0, &first.net);
    for (const auto& [name, t] : first.net.params().items()) CHECK(copy.net.params().get(name)->value == t->value);
    CHECK(copy.initial_validation_loss == doctest::Approx(first.final_validation_loss).epsilon(1e-12));
    const auto spn = train(tiny_train(ModelKind::Spn));
    CHECK_THROWS_AS(train(c, &spn.net), Error);
    auto wide = c;
    wide.model.hidden = 16;
    CHECK_THROWS_AS(train(wide, &first.net), Error);
}

TEST_CASE("training config json") {
    auto c = tiny_train(ModelKind::Vpn);
    c.lr_final = 0.1;
    const auto back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK_THROWS_AS(train_config_from_json({{"steps", "many"}}), Error);
    CHECK_THROWS_AS(train_config_from_json({{"lr_final", 2.0}}), Error);
    CHECK_THROWS_AS(train_config_from_json({{"target", "mlp"}}), Error);
    CHECK_THROWS_AS(train_config_from_json({{"model", {{"hidden", 10}, {"heads", 4}}}}), Error);
}

TEST_CASE("predict runs each encoder once") {
    Network spn(ModelKind::Spn, tiny_config(), 1), vpn(ModelKind::Vpn, tiny_config(), 2);
    const auto data = toy_data(10, 4, 3);
    const long s0 = spn.encoder_calls(), v0 = vpn.encoder_calls();
    const auto p = predict(spn, vpn, data);
    CHECK(spn.encoder_calls() == s0 + 1);
    CHECK(vpn.encoder_calls() == v0 + 1);
    CHECK(p.d == 4);
    CHECK_THROWS_AS(predict(vpn, spn, data), Error);

    // Larger samples run once per row block.
    const auto big = toy_data(250, 4, 3);
    const long s1 = spn.encoder_calls();
    predict(spn, vpn, big);
    CHECK(spn.encoder_calls() == s1 + 3);
}

TEST_CASE("row blocks partition the sample") {
    const auto data = toy_data(23, 3, 4);
    CHECK(row_blocks(data, 0).size() == 1u);
    CHECK(row_blocks(data, 23).front() == data);
    const auto blocks = row_blocks(data, 5);
    REQUIRE(blocks.size() == 5u);
    int rows = 0;
    for (int b = 0; b < 5; ++b) {
        CHECK(blocks[b].n() <= 5);
        CHECK(blocks[b].n() >= 4);
        for (int r = 0; r < blocks[b].n(); ++r)
            for (int c = 0; c < 3; ++c) CHECK(blocks[b].at(r, c) == data.at(b + 5 * r, c));
        rows += blocks[b].n();
    }
    CHECK(rows == 23);

    ModelConfig cfg = tiny_config();
    cfg.block_rows = 5;
    Network net(ModelKind::Spn, cfg, 6);
    const auto whole = skeleton_probs(net, data);
    std::vector<double> mean(9, 0.0);
    for (const auto& b : blocks) {
        const auto p = skeleton_probs(net, b);
        for (int i = 0; i < 9; ++i) mean[i] += p[i] / 5.0;
    }
    CHECK(max_abs_diff(whole, mean) < 1e-15);
}

TEST_CASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "sicl_test_checkpoint";
    std::filesystem::create_directories(dir);
    Network net(ModelKind::Vpn, tiny_config(), 12);
    save_checkpoint(dir / "vpn.json", net, {{"steps", 0}});
    const Network back = load_checkpoint(dir / "vpn.json");
    CHECK(back.kind() == ModelKind::Vpn);
    CHECK(back.config() == net.config());
    for (std::size_t i = 0; i < net.params().items().size(); ++i)
        CHECK(back.params().items()[i].second->value == net.params().items()[i].second->value);
    const auto data = toy_data(10, 4, 1);
    CHECK(vstruct_probs(back, data) == vstruct_probs(net, data));

    {
        std::ofstream trunc(dir / "vpn.json.bin", std::ios::binary | std::ios::trunc);
        trunc << "xx";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "vpn.json"), Error);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), Error);
    std::filesystem::remove_all(dir);
}
