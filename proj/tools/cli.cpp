#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "sicl/biaslab.hpp"
#include "sicl/citest.hpp"
#include "sicl/constraint.hpp"
#include "sicl/data_io.hpp"
#include "sicl/error.hpp"
#include "sicl/graph_io.hpp"
#include "sicl/metrics.hpp"
#include "sicl/nn.hpp"
#include "sicl/postproc.hpp"
#include "sicl/train.hpp"

namespace sicl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] void usage(const std::string& msg) { throw UsageError(msg); }

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        usage(path + ": " + e.what());
    } catch (const Error& e) {
        usage(e.what());
    }
    if (!j.is_object()) usage(path + ": expected a JSON object");
    return j;
}

int int_field(const json& j, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) usage(std::string(key) + ": expected an integer");
    return j[key].get<int>();
}

std::uint64_t seed_field(const json& j, const char* key, std::uint64_t def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0))
        usage(std::string(key) + ": expected a non-negative integer");
    return j[key].get<std::uint64_t>();
}

std::string string_field(const json& j, const char* key, const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_string()) usage(std::string(key) + ": expected a string");
    return j[key].get<std::string>();
}

// Library errors raised while reading user-supplied configuration are usage errors.
template <class F>
auto as_usage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput) usage(e.what());
        throw;
    }
}

std::string instance_id(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "instance_%04d", i);
    return buf;
}

// --- generate -----------------------------------------------------------------------------

struct GenerateOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> count, d, n;
    std::string out_dir;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
    json cfg = load_config(o.config);
    const bool fig_cto = cfg.contains("fig_cto") && cfg["fig_cto"].is_boolean() && cfg["fig_cto"].get<bool>();
    if (cfg.contains("fig_cto") && !cfg["fig_cto"].is_boolean()) usage("fig_cto: expected a boolean");
    const scm::GraphModel graph = as_usage([&] {
        return cfg.contains("graph_model") ? scm::graph_model_from_json(cfg["graph_model"]) : scm::GraphModel{scm::ErdosRenyi{}};
    });
    const scm::Mechanism mech = as_usage([&] {
        return cfg.contains("mechanism") ? scm::mechanism_from_json(cfg["mechanism"]) : scm::Mechanism{scm::LinearGaussian{}};
    });
    const int d = o.d.value_or(int_field(cfg, "d", fig_cto ? 6 : 5));
    const int n = o.n.value_or(int_field(cfg, "n", 1000));
    const int count = o.count.value_or(int_field(cfg, "count", 1));
    const std::uint64_t seed = o.seed.value_or(seed_field(cfg, "seed", 0));
    const std::string out_dir = o.out_dir.empty() ? string_field(cfg, "out_dir", "") : o.out_dir;
    if (out_dir.empty()) usage("out_dir: required (config field or --out-dir)");
    if (d < 1) usage("d: must be >= 1");
    if (fig_cto && d != 6) usage("d: the constructed dataset has 6 variables");
    if (n < 1) usage("n: must be >= 1");
    if (count < 0) usage("count: must be >= 0");

    fs::create_directories(out_dir);
    json resolved{{"d", d}, {"n", n}, {"count", count}, {"seed", seed}, {"fig_cto", fig_cto}};
    if (!fig_cto) {
        resolved["graph_model"] = scm::graph_model_to_json(graph);
        resolved["mechanism"] = scm::mechanism_to_json(mech);
    }
    json instances = json::array();
    for (int i = 0; i < count; ++i) {
        const std::string id = instance_id(i);
        const std::uint64_t s = derive_seed(seed, "instance", static_cast<std::uint64_t>(i));
        Rng rng(s);
        json entry{{"id", id}, {"seed", s}};
        scm::Scm model;
        scm::DataSample data;
        Dag truth;
        if (fig_cto) {
            auto fc = scm::make_fig_cto_dataset(n, rng);
            model = std::move(fc.scm);
            data = std::move(fc.data);
            truth = std::move(fc.truth);
        } else {
            auto gs = as_usage([&] { return scm::sample_graph_info(graph, d, rng); });
            if (std::holds_alternative<scm::WattsStrogatz>(graph)) entry["lattice_dim"] = gs.lattice_dim;
            truth = std::move(gs.dag);
            model = as_usage([&] { return scm::sample_scm(truth, mech, rng); });
            data = scm::sample_data(model, n, rng);
        }
        const fs::path dir = fs::path(out_dir) / id;
        fs::create_directories(dir);
        write_dag(dir / "graph.json", truth);
        write_data_csv(dir / "data.csv", data);
        write_text_file(dir / "scm.json", dump_json(scm::scm_to_json(model)));
        entry["graph"] = id + "/graph.json";
        entry["data"] = id + "/data.csv";
        entry["scm"] = id + "/scm.json";
        entry["edges"] = truth.num_edges();
        instances.push_back(std::move(entry));
    }
    write_text_file(fs::path(out_dir) / "manifest.json", dump_json({{"config", resolved}, {"instances", instances}}));
    out << "wrote " << count << " instance(s) to " << out_dir << "\n";
    return kExitOk;
}

// --- discover -----------------------------------------------------------------------------

struct InputInstance {
    std::string id;
    fs::path data;
    std::optional<fs::path> truth;
};

std::vector<InputInstance> collect_inputs(const std::string& manifest, const std::vector<std::string>& data,
                                          const std::vector<std::string>& truth) {
    std::vector<InputInstance> out;
    if (!manifest.empty()) {
        const json m = load_config(manifest);
        if (!m.contains("instances") || !m["instances"].is_array()) usage(manifest + ": instances: expected an array");
        const fs::path base = fs::path(manifest).parent_path();
        for (std::size_t k = 0; k < m["instances"].size(); ++k) {
            const json& e = m["instances"][k];
            const std::string where = "instances[" + std::to_string(k) + "]";
            if (!e.is_object() || !e.contains("id") || !e["id"].is_string() || !e.contains("data") || !e["data"].is_string())
                usage(manifest + ": " + where + ": expected {id, data[, graph]}");
            InputInstance in{e["id"].get<std::string>(), base / e["data"].get<std::string>(), std::nullopt};
            if (e.contains("graph")) in.truth = base / e["graph"].get<std::string>();
            out.push_back(std::move(in));
        }
    }
    if (!truth.empty() && truth.size() != data.size()) usage("--truth: give one graph per --data file");
    for (std::size_t k = 0; k < data.size(); ++k) {
        InputInstance in{fs::path(data[k]).stem().string(), data[k], std::nullopt};
        if (!truth.empty()) in.truth = truth[k];
        if (data.size() > 1) in.id = instance_id(static_cast<int>(k));
        out.push_back(std::move(in));
    }
    if (out.empty()) usage("no input: give --manifest or --data");
    return out;
}

// Probabilities thresholded at tau with the stronger direction of each pair;
// cycles broken by dropping the weakest edge on them.
Dag threshold_dag(const std::vector<double>& A, int d, double tau) {
    std::vector<ScoredEdge> edges;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double a = A[i * d + j], b = A[j * d + i];
            if (i != j && a > tau && (a > b || (a == b && i < j))) edges.push_back({{i, j}, a});
        }
    std::stable_sort(edges.begin(), edges.end(), [](const ScoredEdge& x, const ScoredEdge& y) { return x.score > y.score; });
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 0);
    for (const auto& e : edges) {
        adj[e.edge.from * d + e.edge.to] = 1;
        if (!is_acyclic(d, adj)) adj[e.edge.from * d + e.edge.to] = 0;
    }
    return Dag::from_matrix(d, std::move(adj));
}

json matrix_json(const std::vector<double>& v, int d) {
    json rows = json::array();
    for (int i = 0; i < d; ++i) rows.push_back(std::vector<double>(v.begin() + i * d, v.begin() + (i + 1) * d));
    return rows;
}

struct DiscoverOptions {
    std::string method;
    bool oracle = false;
    std::string manifest;
    std::vector<std::string> data, truth;
    std::string spn, vpn, checkpoint;
    double alpha = kDefaultAlpha;
    std::string rule = "sepset";
    double tau_s = kDefaultTau, tau_v = kDefaultTau, tau_edge = 0.5;
    std::string priority = "higher";
    std::string out_dir;
    std::uint64_t seed = 0;
};

int cmd_discover(const DiscoverOptions& o, std::ostream& out, std::ostream& err) {
    const std::string& m = o.method;
    if (m != "pc" && m != "sicl" && m != "node-edge") usage("--method: expected pc, sicl or node-edge");
    if (o.oracle && m != "pc") usage("--oracle: only valid with --method pc");
    if (o.rule != "sepset" && o.rule != "majority") usage("--rule: expected sepset or majority");
    if (o.priority != "higher" && o.priority != "lower") usage("--priority: expected higher or lower");
    if (o.out_dir.empty()) usage("--out-dir: required");
    const auto inputs = collect_inputs(o.manifest, o.data, o.truth);

    std::optional<nn::Network> spn, vpn, ne;
    if (m == "sicl") {
        if (o.spn.empty() || o.vpn.empty()) usage("--method sicl: requires --spn and --vpn checkpoints");
        spn.emplace(nn::load_checkpoint(o.spn));
        vpn.emplace(nn::load_checkpoint(o.vpn));
        if (spn->kind() != nn::ModelKind::Spn) usage("--spn: checkpoint is not a skeleton network");
        if (vpn->kind() != nn::ModelKind::Vpn) usage("--vpn: checkpoint is not a v-structure network");
    } else if (m == "node-edge") {
        if (o.checkpoint.empty()) usage("--method node-edge: requires --checkpoint");
        ne.emplace(nn::load_checkpoint(o.checkpoint));
        if (ne->kind() != nn::ModelKind::NodeEdge) usage("--checkpoint: not a node-edge network");
    }
    const auto priority = o.priority == "higher" ? ConflictPriority::Higher : ConflictPriority::Lower;

    fs::create_directories(o.out_dir);
    std::vector<NamedMetrics> rows;
    std::vector<std::string> failed;
    for (const auto& in : inputs) {
        try {
            const fs::path dir = fs::path(o.out_dir) / in.id;
            fs::create_directories(dir);
            std::optional<Dag> truth;
            if (in.truth) truth = read_dag(*in.truth);
            if (o.oracle && !truth) fail(ErrorKind::InvalidInput, "--oracle needs the true graph");
            Pdag pred;
            std::vector<double> skeleton_scores;
            json extra = json::object();
            if (m == "pc") {
                std::unique_ptr<CiTester> tester;
                std::optional<scm::DataSample> data;
                if (o.oracle) {
                    tester = std::make_unique<DsepOracle>(*truth);
                } else {
                    data = read_data_csv(in.data);
                    if (data->is_discrete())
                        tester = std::make_unique<GSquareTest>(*data);
                    else
                        tester = std::make_unique<FisherZTest>(*data);
                }
                PcOptions po;
                po.alpha = o.alpha;
                po.rule = o.rule == "sepset" ? VRule::Sepset : VRule::Majority;
                const PcResult r = pc_full(*tester, po);
                pred = r.cpdag;
                extra = {{"tests", r.search.tests}, {"test_failures", r.search.failures}, {"dropped", r.dropped.size()},
                         {"unchecked", r.unchecked}};
            } else if (m == "sicl") {
                const auto data = read_data_csv(in.data);
                const StructurePrediction p = nn::predict(*spn, *vpn, data);
                const CpdagResult r = to_cpdag_full(p, o.tau_s, o.tau_v, priority);
                pred = r.cpdag;
                skeleton_scores = p.S;
                write_text_file(dir / "skeleton.json",
                                dump_json({{"scores", matrix_json(p.S, p.d)}, {"skeleton", pdag_to_json(Pdag(p.d, {}, r.skeleton.edges()))}}));
                json u = json::array();
                for (const auto& t : unshielded_triples(r.skeleton))
                    u.push_back({{"center", t.center}, {"a", t.a}, {"b", t.b}, {"score", std::max(p.u(t.center, t.a, t.b), p.u(t.center, t.b, t.a))}});
                write_text_file(dir / "vstructures.json", dump_json(u));
                extra = to_json(r.diagnostics);
            } else {
                const auto data = read_data_csv(in.data);
                const auto A = nn::node_edge_probs(*ne, data);
                const int d = data.d();
                const Dag dag = threshold_dag(A, d, o.tau_edge);
                write_text_file(dir / "adjacency.json", dump_json({{"probs", matrix_json(A, d)}}));
                write_dag(dir / "dag.json", dag);
                pred = cpdag_of(dag);
                skeleton_scores.resize(A.size());
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) skeleton_scores[i * d + j] = std::max(A[i * d + j], A[j * d + i]);
                if (truth) extra["expected_o_f1"] = expected_orientation_f1(A, d, cpdag_of(*truth)).value;
            }
            write_pdag(dir / "cpdag.json", pred);
            json report{{"id", in.id}, {"method", m}, {"oracle", o.oracle}, {"seed", o.seed}, {"details", extra}};
            if (truth) {
                const GraphMetrics gm = evaluate(pred, cpdag_of(*truth), skeleton_scores);
                report["metrics"] = to_json(gm);
                rows.push_back({in.id, gm});
            }
            write_text_file(dir / "report.json", dump_json(report));
        } catch (const Error& e) {
            failed.push_back(in.id);
            err << in.id << ": " << to_string(e.kind()) << ": " << e.what() << "\n";
        }
    }
    json summary = batch_report(rows);
    summary["method"] = m;
    summary["failed"] = failed;
    write_text_file(fs::path(o.out_dir) / "metrics.json", dump_json(summary));
    out << "processed " << inputs.size() - failed.size() << "/" << inputs.size() << " instance(s)";
    if (!rows.empty()) out << "; mean o-F1 " << summary["mean"]["o_f1"].get<double>() << ", mean SHD " << summary["mean"]["shd"].get<double>();
    out << "\n";
    if (!failed.empty()) {
        err << "failed instances:";
        for (const auto& id : failed) err << " " << id;
        err << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

// --- train --------------------------------------------------------------------------------

struct TrainOptions {
    std::string target, config, spn, init, out, log;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps, batch;
    std::optional<double> lr;
    bool quiet = false;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
    const json cfg_json = load_config(o.config);
    nn::TrainConfig cfg = as_usage([&] { return nn::train_config_from_json(cfg_json); });
    if (!o.target.empty()) cfg.target = as_usage([&] { return nn::model_kind_from_string(o.target); });
    if (o.seed) cfg.seed = *o.seed;
    if (o.steps) cfg.steps = *o.steps;
    if (o.batch) cfg.batch = *o.batch;
    if (o.lr) cfg.lr = *o.lr;
    if (cfg.steps < 0 || cfg.batch < 1 || !(cfg.lr > 0)) usage("steps >= 0, batch >= 1 and lr > 0 required");
    if (o.out.empty()) usage("--out: required");
    std::optional<nn::Network> init;
    if (cfg.target == nn::ModelKind::Vpn) {
        if (o.spn.empty()) usage("--target vpn: requires --spn <checkpoint> to initialize the encoders");
        init.emplace(nn::load_checkpoint(o.spn));
        if (init->kind() != nn::ModelKind::Spn) usage("--spn: checkpoint is not a skeleton network");
        if (!(init->config() == cfg.model)) usage("--spn: model dimensions differ from the training config");
    } else if (!o.spn.empty()) {
        usage("--spn: only used with --target vpn");
    }
    if (!o.init.empty()) {
        if (init) usage("--init: cannot be combined with --spn");
        init.emplace(nn::load_checkpoint(o.init));
        if (init->kind() != cfg.target) usage("--init: checkpoint is a " + std::string(nn::to_string(init->kind())) + " network");
        nn::ModelConfig mc = init->config();
        mc.block_rows = cfg.model.block_rows;
        if (!(mc == cfg.model)) usage("--init: model dimensions differ from the training config");
    }
    auto progress = [&](const nn::TrainLogEntry& e) {
        if (!o.quiet && e.validation_loss) out << "step " << e.step << " loss " << e.loss << " validation " << *e.validation_loss << "\n";
    };
    nn::TrainResult r = as_usage([&] { return nn::train(cfg, init ? &*init : nullptr, progress); });
    json meta{{"config", nn::to_json(cfg)},
              {"initial_validation_loss", r.initial_validation_loss},
              {"final_validation_loss", r.final_validation_loss}};
    if (!o.spn.empty()) meta["init"] = fs::path(o.spn).filename().string();
    if (!o.init.empty()) meta["init"] = fs::path(o.init).filename().string();
    nn::save_checkpoint(o.out, r.net, meta);
    const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;
    write_text_file(log_path, nn::log_to_csv(r.log));
    out << "validation loss " << r.initial_validation_loss << " -> " << r.final_validation_loss << "; wrote " << o.out << "\n";
    return kExitOk;
}

// --- bias ---------------------------------------------------------------------------------

struct BiasOptions {
    std::int64_t n = 2;
    std::string q;
    bool worst = false;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    int chain = 0;
    std::string out;
};

std::vector<double> parse_q(const std::string& s) {
    std::vector<double> q;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            q.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            usage("--q: not a number: '" + tok + "'");
        }
    }
    return q;
}

int cmd_bias(const BiasOptions& o, std::ostream& out) {
    if (o.n < 2) usage("--n: must be >= 2");
    if (!o.q.empty() && o.worst) usage("--q and --worst are exclusive");
    if (o.samples < 0) usage("--samples: must be >= 0");
    json report{{"n", o.n}, {"seed", o.seed}};
    const bias::WorstCase wc = bias::worst_case_error(o.n);
    report["worst_case"] = {{"error", wc.error}, {"q", wc.q}};
    std::optional<bias::StarDistribution> sd;
    if (!o.q.empty()) {
        sd = bias::StarDistribution{parse_q(o.q)};
        if (static_cast<std::int64_t>(sd->q.size()) != o.n) usage("--q: expected " + std::to_string(o.n) + " values");
        as_usage([&] { sd->validate(); return 0; });
    } else if (o.samples > 0 && o.n <= 1000000) {
        sd = bias::StarDistribution{std::vector<double>(static_cast<std::size_t>(o.n), wc.q)};
    }
    if (sd) {
        const double exact = bias::marginal_error_exact(*sd);
        report["exact"] = exact;
        report["q"] = o.q.empty() ? json("worst") : json(sd->q);
        if (o.samples > 0) {
            Rng rng(derive_seed(o.seed, "bias.mc"));
            const double mc = bias::monte_carlo_error(*sd, o.samples, rng);
            const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(o.samples));
            report["monte_carlo"] = {{"samples", o.samples}, {"error", mc}, {"std_error", se},
                                     {"within_3sigma", std::abs(mc - exact) <= 3.0 * se}};
        }
    }
    if (o.chain > 0) {
        Rng rng(derive_seed(o.seed, "bias.chain"));
        report["chain_demo"] = bias::to_json(bias::chain_demo(o.chain, rng));
    }
    const std::string text = dump_json(report);
    if (!o.out.empty()) write_text_file(o.out, text);
    out << text;
    return kExitOk;
}

// --- eval ---------------------------------------------------------------------------------

struct EvalOptions {
    std::string pred, truth, scores, manifest, pred_dir, out;
};

// A graph file holding either a DAG or a PDAG; DAGs are compared through their CPDAG.
Pdag read_as_cpdag(const fs::path& path) {
    const json j = json::parse(read_text_file(path));
    if (j.contains("undirected")) return pdag_from_json(j);
    return cpdag_of(dag_from_json(j));
}

Pdag read_prediction(const fs::path& path) {
    const json j = json::parse(read_text_file(path));
    if (j.contains("undirected")) return pdag_from_json(j);
    return Pdag(dag_from_json(j).size(), dag_from_json(j).edges(), {});
}

std::vector<double> read_scores(const fs::path& path) {
    const json j = json::parse(read_text_file(path));
    const json& rows = j.contains("scores") ? j["scores"] : j.contains("probs") ? j["probs"] : j;
    std::vector<double> v;
    for (const auto& r : rows)
        for (const auto& x : r) v.push_back(x.get<double>());
    return v;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    std::vector<std::tuple<std::string, fs::path, fs::path, std::optional<fs::path>>> jobs;
    if (!o.manifest.empty()) {
        if (o.pred_dir.empty()) usage("--manifest: requires --pred-dir");
        for (const auto& in : collect_inputs(o.manifest, {}, {})) {
            if (!in.truth) usage(o.manifest + ": instance " + in.id + " has no graph");
            const fs::path d = fs::path(o.pred_dir) / in.id;
            std::optional<fs::path> sc;
            if (fs::exists(d / "skeleton.json")) sc = d / "skeleton.json";
            else if (fs::exists(d / "adjacency.json")) sc = d / "adjacency.json";
            jobs.emplace_back(in.id, d / "cpdag.json", *in.truth, sc);
        }
    } else {
        if (o.pred.empty() || o.truth.empty()) usage("give --pred and --truth, or --manifest and --pred-dir");
        std::optional<fs::path> sc;
        if (!o.scores.empty()) sc = o.scores;
        jobs.emplace_back(fs::path(o.pred).stem().string(), o.pred, o.truth, sc);
    }
    std::vector<NamedMetrics> rows;
    std::vector<std::string> failed;
    for (const auto& [id, pred, truth, sc] : jobs) {
        try {
            const Pdag p = read_prediction(pred);
            const Pdag t = read_as_cpdag(truth);
            std::vector<double> s;
            if (sc) s = read_scores(*sc);
            rows.push_back({id, evaluate(p, t, s)});
        } catch (const std::exception& e) {
            failed.push_back(id);
            err << id << ": " << e.what() << "\n";
        }
    }
    json report = batch_report(rows);
    report["failed"] = failed;
    const std::string text = dump_json(report);
    if (!o.out.empty()) write_text_file(o.out, text);
    out << text;
    if (!failed.empty()) {
        err << "failed instances:";
        for (const auto& id : failed) err << " " << id;
        err << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structure identification benchmark tools"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "sicl 1.0");

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Sample graphs, structural equations and data");
    g->add_option("--config", gen.config, "JSON config {graph_model, mechanism, d, n, count, seed, out_dir}");
    g->add_option("--seed", gen.seed);
    g->add_option("--count", gen.count);
    g->add_option("--d", gen.d);
    g->add_option("--n", gen.n);
    g->add_option("--out-dir", gen.out_dir);

    DiscoverOptions disc;
    auto* dsc = app.add_subcommand("discover", "Run a structure learner on data files");
    dsc->add_option("--method", disc.method, "pc | sicl | node-edge")->required();
    dsc->add_flag("--oracle", disc.oracle, "pc with the d-separation oracle of the true graph");
    dsc->add_option("--manifest", disc.manifest, "manifest.json written by generate");
    dsc->add_option("--data", disc.data, "data CSV file(s)");
    dsc->add_option("--truth", disc.truth, "true DAG JSON file(s), one per --data");
    dsc->add_option("--spn", disc.spn, "skeleton network checkpoint (sicl)");
    dsc->add_option("--vpn", disc.vpn, "v-structure network checkpoint (sicl)");
    dsc->add_option("--checkpoint", disc.checkpoint, "node-edge checkpoint");
    dsc->add_option("--alpha", disc.alpha);
    dsc->add_option("--rule", disc.rule, "sepset | majority");
    dsc->add_option("--tau-s", disc.tau_s);
    dsc->add_option("--tau-v", disc.tau_v);
    dsc->add_option("--tau-edge", disc.tau_edge);
    dsc->add_option("--priority", disc.priority, "higher | lower");
    dsc->add_option("--out-dir", disc.out_dir)->required();
    dsc->add_option("--seed", disc.seed);

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train a network and write a checkpoint");
    t->add_option("--target", tr.target, "spn | vpn | node-edge");
    t->add_option("--config", tr.config, "training config JSON");
    t->add_option("--spn", tr.spn, "skeleton checkpoint that initializes a vpn");
    t->add_option("--init", tr.init, "checkpoint of the same target to continue from");
    t->add_option("--out", tr.out, "checkpoint path")->required();
    t->add_option("--log", tr.log, "training log CSV (default <out>.log.csv)");
    t->add_option("--seed", tr.seed);
    t->add_option("--steps", tr.steps);
    t->add_option("--batch", tr.batch);
    t->add_option("--lr", tr.lr);
    t->add_flag("--quiet", tr.quiet);

    BiasOptions bi;
    auto* b = app.add_subcommand("bias", "Error of independent edge sampling on a star");
    b->add_option("--n", bi.n, "number of leaves");
    b->add_option("--q", bi.q, "comma-separated outward probabilities");
    b->add_flag("--worst", bi.worst, "use the maximizing q");
    b->add_option("--samples", bi.samples, "Monte Carlo samples");
    b->add_option("--chain", bi.chain, "also run the two-model chain demo with this many rows");
    b->add_option("--seed", bi.seed);
    b->add_option("--out", bi.out);

    EvalOptions ev;
    std::uint64_t eval_seed = 0;
    auto* e = app.add_subcommand("eval", "Score predicted graphs against the truth");
    e->add_option("--pred", ev.pred, "predicted CPDAG or DAG JSON");
    e->add_option("--truth", ev.truth, "true DAG or CPDAG JSON");
    e->add_option("--scores", ev.scores, "skeleton score matrix JSON");
    e->add_option("--manifest", ev.manifest);
    e->add_option("--pred-dir", ev.pred_dir);
    e->add_option("--out", ev.out);
    e->add_option("--seed", eval_seed);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& ex) {
        err << ex.what() << "\n";
        return kExitUsage;
    }
    try {
        if (*g) return cmd_generate(gen, out);
        if (*dsc) return cmd_discover(disc, out, err);
        if (*t) return cmd_train(tr, out);
        if (*b) return cmd_bias(bi, out);
        if (*e) return cmd_eval(ev, out, err);
    } catch (const UsageError& ex) {
        err << "usage error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const Error& ex) {
        err << to_string(ex.kind()) << ": " << ex.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr); }

}  // namespace sicl::cli
