#include "sicl/train.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <sstream>

#include "sicl/error.hpp"

namespace sicl::nn {

Instance draw_instance(const DataStream& stream, std::uint64_t seed) {
    if (stream.n_min < 1 || stream.n_max < stream.n_min) fail(ErrorKind::InvalidInput, "stream: need 1 <= n_min <= n_max");
    Rng rng(seed);
    const int n = std::uniform_int_distribution<int>(stream.n_min, stream.n_max)(rng);
    if (stream.fig_cto) {
        scm::FigCtoInstance fc = scm::make_fig_cto_dataset(n, rng);
        std::vector<int> perm(fc.truth.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        return {fc.truth.relabel(perm), fc.data.permute_columns(perm)};
    }
    if (stream.d < 2) fail(ErrorKind::InvalidInput, "stream.d: need at least 2 variables");
    Dag g = scm::sample_graph(stream.graph, stream.d, rng);
    scm::Scm model = scm::sample_scm(g, stream.mechanism, rng);
    scm::DataSample data = scm::sample_data(model, n, rng);
    return {std::move(g), std::move(data)};
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json stream = {{"fig_cto", c.stream.fig_cto}, {"d", c.stream.d}, {"n_min", c.stream.n_min}, {"n_max", c.stream.n_max}};
    if (!c.stream.fig_cto) {
        stream["graph_model"] = scm::graph_model_to_json(c.stream.graph);
        stream["mechanism"] = scm::mechanism_to_json(c.stream.mechanism);
    }
    return {{"target", to_string(c.target)},
            {"model", to_json(c.model)},
            {"stream", stream},
            {"steps", c.steps},
            {"batch", c.batch},
            {"lr", c.lr},
            {"lr_final", c.lr_final},
            {"clip_norm", c.clip_norm},
            {"validation_size", c.validation_size},
            {"eval_every", c.eval_every},
            {"seed", c.seed}};
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j[key];
    bool ok;
    if constexpr (std::is_same_v<T, bool>)
        ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T>)
        ok = v.is_number_integer();
    else
        ok = v.is_number();
    if (!ok) fail(ErrorKind::InvalidInput, path + key + ": wrong type");
    out = v.get<T>();
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    if (!j.is_object()) fail(ErrorKind::InvalidInput, "train config: expected an object");
    if (j.contains("target")) {
        if (!j["target"].is_string()) fail(ErrorKind::InvalidInput, "target: expected a string");
        c.target = model_kind_from_string(j["target"].get<std::string>());
    }
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
    if (j.contains("stream")) {
        const auto& s = j["stream"];
        if (!s.is_object()) fail(ErrorKind::InvalidInput, "stream: expected an object");
        read_field(s, "fig_cto", "stream.", c.stream.fig_cto);
        read_field(s, "d", "stream.", c.stream.d);
        read_field(s, "n_min", "stream.", c.stream.n_min);
        read_field(s, "n_max", "stream.", c.stream.n_max);
        if (s.contains("n")) {
            read_field(s, "n", "stream.", c.stream.n_min);
            c.stream.n_max = c.stream.n_min;
        }
        if (s.contains("graph_model")) c.stream.graph = scm::graph_model_from_json(s["graph_model"]);
        if (s.contains("mechanism")) c.stream.mechanism = scm::mechanism_from_json(s["mechanism"]);
    }
    read_field(j, "steps", "", c.steps);
    read_field(j, "batch", "", c.batch);
    read_field(j, "lr", "", c.lr);
    read_field(j, "lr_final", "", c.lr_final);
    read_field(j, "clip_norm", "", c.clip_norm);
    read_field(j, "validation_size", "", c.validation_size);
    read_field(j, "eval_every", "", c.eval_every);
    read_field(j, "seed", "", c.seed);
    if (c.steps < 0) fail(ErrorKind::InvalidInput, "steps: must be >= 0");
    if (c.batch < 1) fail(ErrorKind::InvalidInput, "batch: must be >= 1");
    if (!(c.lr > 0.0)) fail(ErrorKind::InvalidInput, "lr: must be > 0");
    if (!(c.lr_final >= 0.0 && c.lr_final <= 1.0)) fail(ErrorKind::InvalidInput, "lr_final: must be in [0, 1]");
    if (c.validation_size < 1) fail(ErrorKind::InvalidInput, "validation_size: must be >= 1");
    if (c.eval_every < 1) fail(ErrorKind::InvalidInput, "eval_every: must be >= 1");
    if (c.stream.n_min < 1 || c.stream.n_max < c.stream.n_min)
        fail(ErrorKind::InvalidInput, "stream.n_min: need 1 <= n_min <= n_max");
    if (!c.stream.fig_cto && c.stream.d < 2) fail(ErrorKind::InvalidInput, "stream.d: need at least 2 variables");
    return c;
}

MaskedLoss instance_loss(const Network& net, const Instance& inst) {
    ForwardResult r = net.forward(inst.data);
    switch (net.kind()) {
        case ModelKind::Spn: return {skeleton_loss_logits(r.logits, inst.dag), false};
        case ModelKind::Vpn: return vstruct_loss_logits(r.logits, inst.dag, skeleton_of(inst.dag));
        case ModelKind::NodeEdge: return {node_edge_loss_logits(r.logits, inst.dag), false};
    }
    fail(ErrorKind::Contract, "unknown model kind");
}

std::vector<Instance> validation_batch(const TrainConfig& cfg) {
    std::vector<Instance> out;
    for (int i = 0; i < cfg.validation_size; ++i) out.push_back(draw_instance(cfg.stream, derive_seed(cfg.seed, "validation", i)));
    return out;
}

double validation_loss(const Network& net, const std::vector<Instance>& batch) {
    NoGrad ng;
    double total = 0.0;
    int used = 0;
    for (const Instance& inst : batch) {
        MaskedLoss l = instance_loss(net, inst);
        if (l.empty_mask) continue;
        total += l.loss->value[0];
        ++used;
    }
    return used ? total / used : 0.0;
}

TrainResult train(const TrainConfig& cfg, const Network* init, const ProgressFn& progress) {
    TrainResult res{Network(cfg.target, cfg.model, derive_seed(cfg.seed, "init")), {}, 0.0, 0.0};
    Network& net = res.net;
    if (init) {
        ModelConfig other = init->config();
        other.block_rows = cfg.model.block_rows;
        if (!(other == cfg.model)) fail(ErrorKind::InvalidInput, "initial network and training config have different dimensions");
        if (init->kind() == cfg.target)
            net.params().copy_from(init->params(), {""});
        else if (cfg.target == ModelKind::Vpn && init->kind() == ModelKind::Spn)
            net.params().copy_from(init->params(), {"embed.", "encoder.", "pairwise."});
        else
            fail(ErrorKind::InvalidInput, std::string("cannot initialize a ") + to_string(cfg.target) + " network from a " + to_string(init->kind()) + " network");
    }
    Adam opt;
    opt.lr = cfg.lr;
    const auto val = validation_batch(cfg);
    res.initial_validation_loss = validation_loss(net, val);
    res.final_validation_loss = res.initial_validation_loss;

    for (int step = 0; step < cfg.steps; ++step) {
        net.params().zero_grad();
        double total = 0.0;
        int used = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const Instance inst = draw_instance(
                cfg.stream, derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(step) * cfg.batch + b));
            MaskedLoss l = instance_loss(net, inst);
            if (l.empty_mask) continue;
            total += l.loss->value[0];
            ++used;
            backward(l.loss, 1.0 / cfg.batch);
        }
        const double mean = used ? total / used : 0.0;
        if (!std::isfinite(mean)) fail(ErrorKind::Numeric, "training diverged at step " + std::to_string(step));
        if (cfg.clip_norm > 0.0) {
            double sq = 0.0;
            for (const auto& [name, t] : net.params().items())
                for (double g : t->grad) sq += g * g;
            const double norm = std::sqrt(sq);
            if (!std::isfinite(norm)) fail(ErrorKind::Numeric, "non-finite gradient at step " + std::to_string(step));
            if (norm > cfg.clip_norm)
                for (const auto& [name, t] : net.params().items())
                    for (double& g : t->grad) g *= cfg.clip_norm / norm;
        }
        const double frac = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 0.0;
        opt.lr = cfg.lr * (cfg.lr_final + (1.0 - cfg.lr_final) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac)));
        opt.step(net.params());
        TrainLogEntry e{step, mean, std::nullopt};
        if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) {
            e.validation_loss = validation_loss(net, val);
            res.final_validation_loss = *e.validation_loss;
        }
        res.log.push_back(e);
        if (progress) progress(e);
    }
    return res;
}

std::string log_to_csv(const std::vector<TrainLogEntry>& log) {
    std::ostringstream os;
    os.precision(17);
    os << "step,loss,validation_loss\n";
    for (const auto& e : log) {
        os << e.step << ',' << e.loss << ',';
        if (e.validation_loss) os << *e.validation_loss;
        os << '\n';
    }
    return os.str();
}

}  // namespace sicl::nn
