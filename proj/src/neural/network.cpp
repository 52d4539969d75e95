#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sicl/error.hpp"
#include "sicl/nn.hpp"
#include "sicl/rng.hpp"

namespace sicl::nn {

// --- parameters ------------------------------------------------------------------

Tensor ParamStore::add(const std::string& name, Shape shape, std::vector<double> init) {
    if (index_.count(name)) fail(ErrorKind::Contract, "duplicate parameter name: " + name);
    Tensor t = parameter(std::move(shape), std::move(init));
    index_[name] = items_.size();
    items_.emplace_back(name, t);
    return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::InvalidInput, "unknown parameter: " + name);
    return items_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t->size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : items_) t->grad.assign(t->size(), 0.0);
}

int ParamStore::copy_from(const ParamStore& other, const std::vector<std::string>& prefixes) {
    int copied = 0;
    for (auto& [name, t] : items_) {
        const bool match = std::any_of(prefixes.begin(), prefixes.end(),
                                        [&](const std::string& p) { return name.rfind(p, 0) == 0; });
        if (!match || !other.contains(name)) continue;
        const Tensor& src = other.get(name);
        if (src->shape != t->shape) fail(ErrorKind::InvalidInput, "parameter shape mismatch: " + name);
        t->value = src->value;
        ++copied;
    }
    return copied;
}

std::string ParamStore::shape_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
    };
    for (const auto& [name, t] : items_) {
        mix(name);
        for (int x : t->shape) mix(":" + std::to_string(x));
        mix(";");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Adam::step(ParamStore& params) {
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto& [name, t] : params.items()) {
        if (t->grad.empty()) continue;
        auto& mm = m[name];
        auto& vv = v[name];
        if (mm.empty()) {
            mm.assign(t->size(), 0.0);
            vv.assign(t->size(), 0.0);
        }
        for (std::size_t i = 0; i < t->size(); ++i) {
            const double g = t->grad[i];
            mm[i] = beta1 * mm[i] + (1.0 - beta1) * g;
            vv[i] = beta2 * vv[i] + (1.0 - beta2) * g * g;
            t->value[i] -= lr * (mm[i] / c1) / (std::sqrt(vv[i] / c2) + eps);
        }
    }
}

// --- layers ---------------------------------------------------------------------------

namespace {

std::vector<double> uniform_init(std::size_t n, double bound, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace

Linear Linear::make(ParamStore& ps, const std::string& name, int in, int out, std::uint64_t seed, bool bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear l;
    l.w = ps.add(name + ".w", {in, out}, uniform_init(static_cast<std::size_t>(in) * out, bound, derive_seed(seed, name + ".w")));
    if (bias) l.b = ps.add(name + ".b", {out}, uniform_init(out, bound, derive_seed(seed, name + ".b")));
    return l;
}

LayerNorm LayerNorm::make(ParamStore& ps, const std::string& name, int h) {
    return {ps.add(name + ".gamma", {h}, std::vector<double>(h, 1.0)), ps.add(name + ".beta", {h}, std::vector<double>(h, 0.0))};
}

MultiHeadAttention MultiHeadAttention::make(ParamStore& ps, const std::string& name, int h, int heads, std::uint64_t seed) {
    MultiHeadAttention m;
    m.q = Linear::make(ps, name + ".q", h, h, seed);
    m.k = Linear::make(ps, name + ".k", h, h, seed);
    m.v = Linear::make(ps, name + ".v", h, h, seed);
    m.o = Linear::make(ps, name + ".o", h, h, seed);
    m.heads = heads;
    return m;
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& source) const {
    return o(attention(q(query), k(source), v(source), heads));
}

EncoderLayer EncoderLayer::make(ParamStore& ps, const std::string& name, int h, int heads, int ffn, std::uint64_t seed) {
    EncoderLayer e;
    e.attn = MultiHeadAttention::make(ps, name + ".attn", h, heads, seed);
    e.ln1 = LayerNorm::make(ps, name + ".ln1", h);
    e.ff1 = Linear::make(ps, name + ".ff1", h, ffn, seed);
    e.ff2 = Linear::make(ps, name + ".ff2", ffn, h, seed);
    e.ln2 = LayerNorm::make(ps, name + ".ln2", h);
    return e;
}

Tensor EncoderLayer::operator()(const Tensor& x) const {
    Tensor x1 = ln1(add(x, attn(x, x)));
    return ln2(add(x1, ff2(relu(ff1(x1)))));
}

// --- network -----------------------------------------------------------------------------

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Spn: return "spn";
        case ModelKind::Vpn: return "vpn";
        case ModelKind::NodeEdge: return "node-edge";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "spn") return ModelKind::Spn;
    if (s == "vpn") return ModelKind::Vpn;
    if (s == "node-edge") return ModelKind::NodeEdge;
    fail(ErrorKind::InvalidInput, "unknown model kind: " + s);
}

nlohmann::json to_json(const ModelConfig& c) {
    return {{"hidden", c.hidden}, {"blocks", c.blocks},           {"heads", c.heads},
            {"ffn", c.ffn},       {"head_hidden", c.head_hidden}, {"max_arity", c.max_arity}, {"block_rows", c.block_rows}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::InvalidInput, "model: expected an object");
    ModelConfig c;
    auto field = [&](const char* key, int& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer()) fail(ErrorKind::InvalidInput, std::string("model.") + key + ": expected an integer");
        out = j[key].get<int>();
    };
    field("hidden", c.hidden);
    field("blocks", c.blocks);
    field("heads", c.heads);
    field("ffn", c.ffn);
    field("head_hidden", c.head_hidden);
    field("max_arity", c.max_arity);
    field("block_rows", c.block_rows);
    if (c.hidden < 1 || c.blocks < 0 || c.heads < 1 || c.ffn < 1 || c.head_hidden < 1 || c.max_arity < 0 ||
        c.block_rows < 0)
        fail(ErrorKind::InvalidInput, "model: sizes must be positive");
    if (c.hidden % c.heads != 0) fail(ErrorKind::InvalidInput, "model.heads: must divide model.hidden");
    return c;
}

Network::Network(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed) : kind_(kind), cfg_(cfg) {
    if (cfg.hidden % cfg.heads != 0) fail(ErrorKind::InvalidInput, "model.heads: must divide model.hidden");
    const int h = cfg.hidden, f = cfg.head_hidden;
    if (cfg.max_arity > 0) {
        Rng rng(derive_seed(seed, "embed.table"));
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<double> t(static_cast<std::size_t>(cfg.max_arity) * h);
        for (double& x : t) x = nd(rng);
        embed_table_ = params_.add("embed.table", {cfg.max_arity, h}, std::move(t));
    } else {
        embed_w_ = params_.add("embed.w", {h}, uniform_init(h, 1.0, derive_seed(seed, "embed.w")));
        embed_b_ = params_.add("embed.b", {h}, uniform_init(h, 1.0, derive_seed(seed, "embed.b")));
    }
    for (int l = 0; l < cfg.blocks; ++l) {
        const std::string p = "encoder." + std::to_string(l);
        obs_layers_.push_back(EncoderLayer::make(params_, p + ".obs", h, cfg.heads, cfg.ffn, seed));
        node_layers_.push_back(EncoderLayer::make(params_, p + ".node", h, cfg.heads, cfg.ffn, seed));
    }
    if (kind != ModelKind::NodeEdge) {
        pair_a_ = Linear::make(params_, "pairwise.mlp.0a", h, h, seed);
        pair_b_ = Linear::make(params_, "pairwise.mlp.0b", h, h, seed, false);
        pair_2_ = Linear::make(params_, "pairwise.mlp.1", h, h, seed);
        pair_3_ = Linear::make(params_, "pairwise.mlp.2", h, h, seed);
        cross_ = MultiHeadAttention::make(params_, "pairwise.cross", h, cfg.heads, seed);
        pair_ln1_ = LayerNorm::make(params_, "pairwise.ln1", h);
        pair_ff1_ = Linear::make(params_, "pairwise.ff1", h, cfg.ffn, seed);
        pair_ff2_ = Linear::make(params_, "pairwise.ff2", cfg.ffn, h, seed);
        pair_ln2_ = LayerNorm::make(params_, "pairwise.ln2", h);
    }
    switch (kind) {
        case ModelKind::Spn: skel_out_ = Linear::make(params_, "skeleton_head", h, 1, seed); break;
        case ModelKind::Vpn:
            v_pair_ = Linear::make(params_, "vstruct_head.pair", h, f, seed);
            v_node_ = Linear::make(params_, "vstruct_head.node", h, f, seed, false);
            v_out_ = Linear::make(params_, "vstruct_head.out", f, 1, seed);
            break;
        case ModelKind::NodeEdge:
            ne_u_ = Linear::make(params_, "node_edge_head.u", h, f, seed);
            ne_a_ = Linear::make(params_, "node_edge_head.a", h, f, seed);
            ne_b_ = Linear::make(params_, "node_edge_head.b", h, f, seed, false);
            ne_out_ = Linear::make(params_, "node_edge_head.out", 1, 1, seed);
            break;
    }
}

std::vector<double> standardized_columns(const scm::DataSample& data) {
    const int n = data.n(), d = data.d();
    std::vector<double> x(static_cast<std::size_t>(d) * n);
    for (int v = 0; v < d; ++v) {
        double mean = 0.0;
        for (int l = 0; l < n; ++l) mean += data.at(l, v);
        mean /= n;
        double var = 0.0;
        for (int l = 0; l < n; ++l) var += (data.at(l, v) - mean) * (data.at(l, v) - mean);
        var /= n;
        const double inv = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
        for (int l = 0; l < n; ++l) x[static_cast<std::size_t>(v) * n + l] = (data.at(l, v) - mean) * inv;
    }
    return x;
}

Tensor Network::embed(const scm::DataSample& data) const {
    const int n = data.n(), d = data.d();
    if (n < 1 || d < 1) fail(ErrorKind::InvalidInput, "network input must have at least one row and column");
    if (cfg_.max_arity > 0) {
        if (!data.is_discrete()) fail(ErrorKind::InvalidInput, "network expects discrete data");
        std::vector<int> codes(static_cast<std::size_t>(d) * n);
        for (int v = 0; v < d; ++v)
            for (int l = 0; l < n; ++l) codes[static_cast<std::size_t>(v) * n + l] = static_cast<int>(data.at(l, v));
        return embedding(codes, d, n, embed_table_);
    }
    if (data.is_discrete()) fail(ErrorKind::InvalidInput, "network expects continuous data");
    return affine_lift(standardized_columns(data), d, n, embed_w_, embed_b_);
}

Tensor Network::encode_nodes(const Tensor& raw) const {
    ++encoder_calls_;
    Tensor x = raw;
    for (std::size_t l = 0; l < obs_layers_.size(); ++l) {
        x = obs_layers_[l](x);
        x = swap01(node_layers_[l](swap01(x)));
    }
    return x;
}

Tensor Network::encode_pairs(const Tensor& F) const {
    if (kind_ == ModelKind::NodeEdge) fail(ErrorKind::Contract, "node-edge network has no pairwise encoder");
    const int d = F->shape[0], n = F->shape[1], h = F->shape[2];
    Tensor x = relu(pair_sum(pair_a_(F), pair_b_(F)));
    x = relu(pair_2_(x));
    Tensor p1 = pair_3_(x);
    Tensor q = swap01(reshape(p1, {d * d, n, h}));
    Tensor p2 = reshape(swap01(cross_(q, swap01(F))), {d, d, n, h});
    Tensor p3 = pair_ln1_(add(p1, p2));
    return pair_ln2_(add(pair_ff2_(relu(pair_ff1_(p3))), p3));
}

ForwardResult Network::forward(const scm::DataSample& data) const {
    ForwardResult r;
    r.F = encode_nodes(embed(data));
    const int d = r.F->shape[0], n = r.F->shape[1], h = r.F->shape[2];
    if (kind_ == ModelKind::NodeEdge) {
        Tensor z = max_axis1(r.F);
        // P(i -> j) = P(i ~ j) * P(i -> j | i ~ j): symmetric existence, antisymmetric orientation
        const Tensor u = ne_u_(z);
        const Tensor exist = reshape(ne_out_(reshape(pair_dot(u, u), {d * d, 1})), {d, d});
        const Tensor ab = pair_dot(ne_a_(z), ne_b_(z));
        r.logits = and_logits(exist, add(ab, scale(swap01(ab), -1.0)));
        return r;
    }
    r.P = encode_pairs(r.F);
    Tensor pooled = max_axis1(reshape(r.P, {d * d, n, h}));
    if (kind_ == ModelKind::Spn) {
        r.logits = reshape(skel_out_(pooled), {d, d});
    } else {
        Tensor pp = reshape(v_pair_(pooled), {d, d, cfg_.head_hidden});
        Tensor fk = v_node_(max_axis1(r.F));
        r.logits = reshape(v_out_(relu(triple_sum(pp, fk))), {d, d, d});
    }
    return r;
}

std::vector<scm::DataSample> row_blocks(const scm::DataSample& data, int block_rows) {
    const int n = data.n(), d = data.d();
    if (block_rows <= 0 || n <= block_rows) return {data};
    const int count = (n + block_rows - 1) / block_rows;
    std::vector<scm::DataSample> out;
    for (int b = 0; b < count; ++b) {
        std::vector<double> v;
        int rows = 0;
        for (int r = b; r < n; r += count, ++rows)
            for (int c = 0; c < d; ++c) v.push_back(data.at(r, c));
        if (data.is_discrete())
            out.emplace_back(rows, d, std::move(v), data.arity());
        else
            out.emplace_back(rows, d, std::move(v));
    }
    return out;
}

namespace {
std::vector<double> probs_of(const Network& net, ModelKind want, const scm::DataSample& data) {
    if (net.kind() != want) fail(ErrorKind::InvalidInput, std::string("expected a ") + to_string(want) + " network");
    NoGrad ng;
    const auto blocks = row_blocks(data, net.config().block_rows);
    std::vector<double> out;
    for (const auto& b : blocks) {
        const std::vector<double> p = sigmoid(net.forward(b).logits)->value;
        if (out.empty()) out.assign(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
    }
    for (double& x : out) x /= static_cast<double>(blocks.size());
    return out;
}
}  // namespace

std::vector<double> skeleton_probs(const Network& spn, const scm::DataSample& data) {
    return probs_of(spn, ModelKind::Spn, data);
}

std::vector<double> vstruct_probs(const Network& vpn, const scm::DataSample& data) {
    return probs_of(vpn, ModelKind::Vpn, data);
}

std::vector<double> node_edge_probs(const Network& net, const scm::DataSample& data) {
    std::vector<double> a = probs_of(net, ModelKind::NodeEdge, data);
    const int d = data.d();
    for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i) * d + i] = 0.0;
    return a;
}

StructurePrediction predict(const Network& spn, const Network& vpn, const scm::DataSample& data) {
    StructurePrediction p;
    p.d = data.d();
    p.S = skeleton_probs(spn, data);
    p.U = vstruct_probs(vpn, data);
    p.validate();
    return p;
}

}  // namespace sicl::nn
