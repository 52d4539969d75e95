#include "sicl/scm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "sicl/error.hpp"
#include "sicl/graph_io.hpp"

namespace sicl::scm {

namespace {

using nlohmann::json;

std::vector<int> random_permutation(int d, Rng& rng) {
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

// Orients each undirected edge from lower to higher position in a uniformly
// random order.
Dag orient_by_random_order(int d, const std::set<Pair>& und, Rng& rng) {
    const std::vector<int> rank = random_permutation(d, rng);
    std::vector<Edge> edges;
    edges.reserve(und.size());
    for (const Pair& p : und) {
        if (rank[p.first] < rank[p.second])
            edges.push_back({p.first, p.second});
        else
            edges.push_back({p.second, p.first});
    }
    return Dag(d, edges);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::set<Pair> er_topology(int d, double p, Rng& rng) {
    std::set<Pair> und;
    std::bernoulli_distribution coin(p);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (coin(rng)) und.insert({i, j});
    return und;
}

std::set<Pair> sf_topology(int d, int m, Rng& rng) {
    std::set<Pair> und;
    std::vector<int> degree(d, 0);
    for (int t = 1; t < d; ++t) {
        const int want = std::min(m, t);
        std::set<int> targets;
        while (static_cast<int>(targets.size()) < want) {
            // Weight degree + 1 so isolated early vertices remain reachable.
            double total = 0.0;
            for (int v = 0; v < t; ++v)
                if (!targets.count(v)) total += degree[v] + 1.0;
            double u = uniform(rng, 0.0, total);
            int pick = -1;
            for (int v = 0; v < t; ++v) {
                if (targets.count(v)) continue;
                pick = v;
                u -= degree[v] + 1.0;
                if (u < 0.0) break;
            }
            targets.insert(pick);
        }
        for (int v : targets) {
            und.insert(make_pair_sorted(v, t));
            ++degree[v];
            ++degree[t];
        }
    }
    return und;
}

std::set<Pair> ws_topology(int d, int dim, double rewire, Rng& rng) {
    int side = 1;
    auto sites = [&](int s) {
        long long c = 1;
        for (int k = 0; k < dim; ++k) c *= s;
        return c;
    };
    while (sites(side) < d) ++side;

    auto coords = [&](int v) {
        std::vector<int> c(dim);
        for (int k = 0; k < dim; ++k) {
            c[k] = v % side;
            v /= side;
        }
        return c;
    };
    auto index = [&](const std::vector<int>& c) {
        int v = 0;
        for (int k = dim - 1; k >= 0; --k) v = v * side + c[k];
        return v;
    };

    std::set<Pair> und;
    for (int v = 0; v < d; ++v) {
        const auto c = coords(v);
        for (int k = 0; k < dim; ++k) {
            for (int step : {-1, 1}) {
                auto nc = c;
                nc[k] = (nc[k] + step + side) % side;
                const int w = index(nc);
                if (w != v && w < d) und.insert(make_pair_sorted(v, w));
            }
        }
    }

    std::vector<Pair> edges(und.begin(), und.end());
    std::bernoulli_distribution coin(rewire);
    for (const Pair& e : edges) {
        if (!coin(rng)) continue;
        std::vector<int> free;
        for (int w = 0; w < d; ++w) {
            if (w != e.first && !und.count(make_pair_sorted(e.first, w))) free.push_back(w);
        }
        if (free.empty()) continue;
        const int w = free[std::uniform_int_distribution<int>(0, static_cast<int>(free.size()) - 1)(rng)];
        und.erase(e);
        und.insert(make_pair_sorted(e.first, w));
    }
    return und;
}

std::set<Pair> sbm_topology(int d, const StochasticBlock& m, Rng& rng) {
    const std::vector<int> order = random_permutation(d, rng);
    std::vector<int> block(d);
    std::vector<long long> sizes(m.blocks, 0);
    for (int k = 0; k < d; ++k) {
        block[order[k]] = k % m.blocks;
        ++sizes[k % m.blocks];
    }
    long long within = 0;
    for (long long s : sizes) within += s * (s - 1) / 2;
    const long long total = static_cast<long long>(d) * (d - 1) / 2;
    const long long between = total - within;
    const double denom = static_cast<double>(within) + m.between_ratio * static_cast<double>(between);
    const double p_in = denom > 0.0 ? m.mean_degree * d / 2.0 / denom : 0.0;
    const double p_out = m.between_ratio * p_in;
    if (p_in > 1.0 || p_out > 1.0)
        fail(ErrorKind::InvalidInput, "sample_graph: SBM mean degree infeasible for this size and block count");

    std::set<Pair> und;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double p = block[i] == block[j] ? p_in : p_out;
            if (uniform(rng, 0.0, 1.0) < p) und.insert({i, j});
        }
    }
    return und;
}

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidInput, what);
}

}  // namespace

GraphSample sample_graph_info(const GraphModel& model, int d, Rng& rng) {
    require(d >= 1, "sample_graph: d must be >= 1");
    GraphSample out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ErdosRenyi>) {
                double p = m.value;
                if (m.param == ErdosRenyi::Param::ExpectedDegree) {
                    require(m.value >= 0.0, "sample_graph: ER expected degree must be >= 0");
                    p = d > 1 ? m.value / (d - 1) : 0.0;
                }
                require(p >= 0.0 && p <= 1.0, "sample_graph: ER edge probability outside [0,1]");
                out.dag = orient_by_random_order(d, er_topology(d, p, rng), rng);
            } else if constexpr (std::is_same_v<T, ScaleFree>) {
                require(m.attachments >= 1, "sample_graph: SF attachment count must be >= 1");
                require(m.attachments < d, "sample_graph: SF attachment count must be < d");
                out.dag = orient_by_random_order(d, sf_topology(d, m.attachments, rng), rng);
            } else if constexpr (std::is_same_v<T, WattsStrogatz>) {
                require(m.rewire_prob >= 0.0 && m.rewire_prob <= 1.0, "sample_graph: WS rewire probability outside [0,1]");
                out.lattice_dim = std::uniform_int_distribution<int>(2, 3)(rng);
                out.dag = orient_by_random_order(d, ws_topology(d, out.lattice_dim, m.rewire_prob, rng), rng);
            } else if constexpr (std::is_same_v<T, StochasticBlock>) {
                require(m.blocks >= 1 && m.blocks <= d, "sample_graph: SBM block count must be in [1,d]");
                require(m.mean_degree > 0.0, "sample_graph: SBM mean degree must be positive");
                require(m.between_ratio >= 0.0 && m.between_ratio <= 1.0, "sample_graph: SBM between ratio outside [0,1]");
                out.dag = orient_by_random_order(d, sbm_topology(d, m, rng), rng);
            } else if constexpr (std::is_same_v<T, Star>) {
                require(m.leaves >= 1, "sample_graph: star needs at least one leaf");
                require(d == m.leaves + 1, "sample_graph: star with n leaves needs d = n + 1");
                std::set<Pair> und;
                for (int v = 1; v < d; ++v) und.insert({0, v});
                out.dag = orient_by_random_order(d, und, rng);
            } else {
                require(m.dag.size() == d, "sample_graph: custom graph size differs from d");
                out.dag = m.dag;
            }
        },
        model);
    return out;
}

Dag sample_graph(const GraphModel& model, int d, Rng& rng) { return sample_graph_info(model, d, rng).dag; }

std::string model_name(const GraphModel& model) {
    static const char* names[] = {"er", "sf", "ws", "sbm", "star", "custom"};
    return names[model.index()];
}

// ---------------------------------------------------------------------------

Scm sample_scm(const Dag& g, const Mechanism& mech, Rng& rng) {
    Scm scm;
    scm.graph = g;
    const int d = g.size();
    scm.nodes.resize(d);
    for (int v = 0; v < d; ++v) scm.nodes[v].parents = g.parents(v);

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearGaussian>) {
                require(m.weight_low >= 0.0 && m.weight_high >= m.weight_low, "sample_scm: bad weight range");
                require(m.noise_var_low > 0.0 && m.noise_var_high >= m.noise_var_low, "sample_scm: bad noise variance range");
                scm.kind = MechanismKind::Linear;
                std::bernoulli_distribution sign(0.5);
                for (auto& node : scm.nodes) {
                    for (std::size_t p = 0; p < node.parents.size(); ++p) {
                        const double w = uniform(rng, m.weight_low, m.weight_high);
                        node.weights.push_back(sign(rng) ? w : -w);
                    }
                    node.noise_var = uniform(rng, m.noise_var_low, m.noise_var_high);
                }
            } else if constexpr (std::is_same_v<T, RandomFourier>) {
                require(m.features >= 1, "sample_scm: RFF needs at least one feature");
                require(m.length_scale > 0.0 && m.output_scale > 0.0, "sample_scm: RFF scales must be positive");
                require(m.noise_var_low > 0.0 && m.noise_var_high >= m.noise_var_low, "sample_scm: bad noise variance range");
                scm.kind = MechanismKind::Rff;
                std::normal_distribution<double> freq(0.0, 1.0 / m.length_scale);
                std::normal_distribution<double> amp(0.0, m.output_scale / std::sqrt(static_cast<double>(m.features)));
                for (auto& node : scm.nodes) {
                    if (!node.parents.empty()) {
                        const std::size_t np = node.parents.size();
                        node.frequency.resize(static_cast<std::size_t>(m.features) * np);
                        for (auto& w : node.frequency) w = freq(rng);
                        node.phase.resize(m.features);
                        for (auto& b : node.phase) b = uniform(rng, 0.0, 2.0 * std::numbers::pi);
                        node.amplitude.resize(m.features);
                        for (auto& a : node.amplitude) a = amp(rng);
                    }
                    node.noise_var = uniform(rng, m.noise_var_low, m.noise_var_high);
                }
            } else {
                require(m.concentration > 0.0, "sample_scm: Dirichlet concentration must be positive");
                require(m.arities.empty() || static_cast<int>(m.arities.size()) == d, "sample_scm: per-node arity list has wrong length");
                scm.kind = MechanismKind::Cpt;
                for (int v = 0; v < d; ++v) {
                    scm.nodes[v].arity = m.arities.empty() ? m.arity : m.arities[v];
                    require(scm.nodes[v].arity >= 2, "sample_scm: arity must be >= 2");
                }
                std::gamma_distribution<double> gamma(m.concentration, 1.0);
                for (auto& node : scm.nodes) {
                    std::size_t rows = 1;
                    for (int p : node.parents) rows *= static_cast<std::size_t>(scm.nodes[p].arity);
                    node.cpt.resize(rows * node.arity);
                    for (std::size_t r = 0; r < rows; ++r) {
                        double* row = node.cpt.data() + r * node.arity;
                        double total = 0.0;
                        for (int c = 0; c < node.arity; ++c) total += row[c] = gamma(rng);
                        for (int c = 0; c < node.arity; ++c) row[c] /= total;
                    }
                }
            }
        },
        mech);
    return scm;
}

// ---------------------------------------------------------------------------

DataSample::DataSample(int n, int d, std::vector<double> values)
    : n_(n), d_(d), dtype_(DataType::Continuous), values_(std::move(values)) {
    if (n < 0 || d < 0 || values_.size() != static_cast<std::size_t>(n) * d)
        fail(ErrorKind::InvalidInput, "DataSample: values size does not match n x d");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "DataSample: non-finite continuous value");
}

DataSample::DataSample(int n, int d, std::vector<double> values, std::vector<int> arity)
    : n_(n), d_(d), dtype_(DataType::Discrete), arity_(std::move(arity)), values_(std::move(values)) {
    if (n < 0 || d < 0 || values_.size() != static_cast<std::size_t>(n) * d)
        fail(ErrorKind::InvalidInput, "DataSample: values size does not match n x d");
    if (static_cast<int>(arity_.size()) != d) fail(ErrorKind::InvalidInput, "DataSample: arity list must have d entries");
    for (int a : arity_)
        if (a < 1) fail(ErrorKind::InvalidInput, "DataSample: arity must be positive");
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) {
            const double v = values_[static_cast<std::size_t>(r) * d + c];
            if (v != std::floor(v) || v < 0 || v >= arity_[c])
                fail(ErrorKind::InvalidInput, "DataSample: discrete value outside [0, arity)");
        }
    }
}

std::vector<double> DataSample::column(int col) const {
    std::vector<double> out(n_);
    for (int r = 0; r < n_; ++r) out[r] = at(r, col);
    return out;
}

DataSample DataSample::permute_columns(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != d_) fail(ErrorKind::InvalidInput, "permute_columns: bad permutation size");
    std::vector<double> v(values_.size());
    std::vector<int> ar(arity_.size());
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < d_; ++c) v[static_cast<std::size_t>(r) * d_ + perm[c]] = at(r, c);
    for (std::size_t c = 0; c < arity_.size(); ++c) ar[perm[c]] = arity_[c];
    return is_discrete() ? DataSample(n_, d_, std::move(v), std::move(ar)) : DataSample(n_, d_, std::move(v));
}

DataSample DataSample::permute_rows(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != n_) fail(ErrorKind::InvalidInput, "permute_rows: bad permutation size");
    std::vector<double> v(values_.size());
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < d_; ++c) v[static_cast<std::size_t>(perm[r]) * d_ + c] = at(r, c);
    return is_discrete() ? DataSample(n_, d_, std::move(v), arity_) : DataSample(n_, d_, std::move(v));
}

DataSample DataSample::head(int rows) const {
    rows = std::clamp(rows, 0, n_);
    std::vector<double> v(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(rows) * d_);
    return is_discrete() ? DataSample(rows, d_, std::move(v), arity_) : DataSample(rows, d_, std::move(v));
}

DataSample sample_data(const Scm& scm, int n, Rng& rng) {
    if (n < 1) fail(ErrorKind::InvalidInput, "sample_data: n must be >= 1");
    const int d = scm.graph.size();
    std::vector<double> values(static_cast<std::size_t>(n) * d, 0.0);
    auto cell = [&](int r, int c) -> double& { return values[static_cast<std::size_t>(r) * d + c]; };
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int v : scm.graph.topological_order()) {
        const NodeEquation& eq = scm.nodes[v];
        const std::size_t np = eq.parents.size();
        switch (scm.kind) {
            case MechanismKind::Linear: {
                const double sd = std::sqrt(eq.noise_var);
                for (int r = 0; r < n; ++r) {
                    double x = sd * gauss(rng);
                    for (std::size_t p = 0; p < np; ++p) x += eq.weights[p] * cell(r, eq.parents[p]);
                    cell(r, v) = x;
                }
                break;
            }
            case MechanismKind::Rff: {
                const double sd = std::sqrt(eq.noise_var);
                const std::size_t k_features = eq.amplitude.size();
                for (int r = 0; r < n; ++r) {
                    double f = 0.0;
                    for (std::size_t k = 0; k < k_features; ++k) {
                        double arg = eq.phase[k];
                        for (std::size_t p = 0; p < np; ++p) arg += eq.frequency[k * np + p] * cell(r, eq.parents[p]);
                        f += eq.amplitude[k] * std::cos(arg);
                    }
                    cell(r, v) = f + sd * gauss(rng);
                }
                break;
            }
            case MechanismKind::Cpt: {
                for (int r = 0; r < n; ++r) {
                    std::size_t row = 0;
                    for (int p : eq.parents) row = row * scm.nodes[p].arity + static_cast<std::size_t>(cell(r, p));
                    const double* probs = eq.cpt.data() + row * eq.arity;
                    double u = unit(rng);
                    int cat = eq.arity - 1;
                    for (int c = 0; c < eq.arity; ++c) {
                        u -= probs[c];
                        if (u < 0.0) {
                            cat = c;
                            break;
                        }
                    }
                    cell(r, v) = cat;
                }
                break;
            }
        }
    }
    if (scm.kind == MechanismKind::Cpt) {
        std::vector<int> arity(d);
        for (int v = 0; v < d; ++v) arity[v] = scm.nodes[v].arity;
        return DataSample(n, d, std::move(values), std::move(arity));
    }
    return DataSample(n, d, std::move(values));
}

std::vector<double> analytic_covariance(const Scm& scm) {
    if (scm.kind != MechanismKind::Linear) fail(ErrorKind::InvalidInput, "analytic_covariance: linear-Gaussian SCM required");
    const int d = scm.graph.size();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(d, d);
    for (int v = 0; v < d; ++v) {
        const NodeEquation& eq = scm.nodes[v];
        for (std::size_t p = 0; p < eq.parents.size(); ++p) b(v, eq.parents[p]) = eq.weights[p];
        noise(v, v) = eq.noise_var;
    }
    // x = B x + e  =>  x = A e with A = (I - B)^{-1}; B is nilpotent so A = sum B^k.
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(d, d);
    for (int k = 1; k < d; ++k) {
        power = power * b;
        a += power;
    }
    const Eigen::MatrixXd cov = a * noise * a.transpose();
    std::vector<double> out(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] = cov(i, j);
    return out;
}

std::vector<double> empirical_covariance(const DataSample& data) {
    const int n = data.n(), d = data.d();
    if (n < 2) fail(ErrorKind::SampleSize, "empirical_covariance: need at least two rows");
    std::vector<double> mean(d, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) mean[c] += data.at(r, c);
    for (auto& m : mean) m /= n;
    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < d; ++i) {
            const double xi = data.at(r, i) - mean[i];
            for (int j = 0; j < d; ++j) cov[static_cast<std::size_t>(i) * d + j] += xi * (data.at(r, j) - mean[j]);
        }
    for (auto& c : cov) c /= (n - 1);
    return cov;
}

// ---------------------------------------------------------------------------

namespace {
Scm linear_scm(const Dag& g, const std::vector<std::vector<double>>& weights, const std::vector<double>& noise) {
    Scm scm;
    scm.graph = g;
    scm.kind = MechanismKind::Linear;
    scm.nodes.resize(g.size());
    for (int v = 0; v < g.size(); ++v) {
        scm.nodes[v].parents = g.parents(v);
        scm.nodes[v].weights = weights[v];
        scm.nodes[v].noise_var = noise[v];
    }
    return scm;
}
}  // namespace

Scm chain_model_1() {
    constexpr int X = 0, Y = 1, T = 2;
    const std::vector<Edge> edges{{X, T}, {T, Y}};
    std::vector<std::vector<double>> w(3);
    w[T] = {1.0};
    w[Y] = {1.0};
    return linear_scm(Dag(3, edges), w, {1.0, 1.0, 1.0});
}

Scm chain_model_2() {
    constexpr int X = 0, Y = 1, T = 2;
    const std::vector<Edge> edges{{Y, T}, {T, X}};
    std::vector<std::vector<double>> w(3);
    w[T] = {2.0 / 3.0};
    w[X] = {0.5};
    std::vector<double> noise(3);
    noise[X] = 0.5;
    noise[Y] = 3.0;
    noise[T] = 2.0 / 3.0;
    return linear_scm(Dag(3, edges), w, noise);
}

Dag fig_cto_graph() {
    const std::vector<Edge> edges{{0, 1}, {2, 1}, {3, 4}, {4, 5}};
    return Dag(6, edges);
}

FigCtoInstance make_fig_cto_dataset(int n, Rng& rng) {
    if (n < 1) fail(ErrorKind::InvalidInput, "make_fig_cto_dataset: n must be >= 1");
    FigCtoInstance out;
    out.truth = fig_cto_graph();
    // Every variable has unit variance and edge coefficients are i.i.d., so
    // the chain D -> E -> F and its reversal are equally likely to have
    // produced any covariance.
    std::bernoulli_distribution sign(0.5);
    auto coef = [&](double lo, double hi) {
        const double c = uniform(rng, lo, hi);
        return sign(rng) ? c : -c;
    };
    std::vector<std::vector<double>> w(6);
    std::vector<double> noise(6, 1.0);
    w[1] = {coef(0.4, 0.65), coef(0.4, 0.65)};
    noise[1] = 1.0 - w[1][0] * w[1][0] - w[1][1] * w[1][1];
    w[4] = {coef(0.4, 0.8)};
    noise[4] = 1.0 - w[4][0] * w[4][0];
    w[5] = {coef(0.4, 0.8)};
    noise[5] = 1.0 - w[5][0] * w[5][0];
    out.scm = linear_scm(out.truth, w, noise);
    out.data = sample_data(out.scm, n, rng);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

const char* kind_name(MechanismKind k) {
    switch (k) {
        case MechanismKind::Linear: return "linear";
        case MechanismKind::Rff: return "rff";
        case MechanismKind::Cpt: return "cpt";
    }
    return "linear";
}

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorKind::InvalidInput, path + "." + key + ": missing field");
    return j.at(key);
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(ErrorKind::InvalidInput, path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

int integer_or(const json& j, const std::string& key, int fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) fail(ErrorKind::InvalidInput, path + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

}  // namespace

json scm_to_json(const Scm& scm) {
    json nodes = json::array();
    for (const NodeEquation& eq : scm.nodes) {
        json n{{"parents", eq.parents}};
        switch (scm.kind) {
            case MechanismKind::Linear:
                n["weights"] = eq.weights;
                n["noise_var"] = eq.noise_var;
                break;
            case MechanismKind::Rff:
                n["frequency"] = eq.frequency;
                n["phase"] = eq.phase;
                n["amplitude"] = eq.amplitude;
                n["noise_var"] = eq.noise_var;
                break;
            case MechanismKind::Cpt:
                n["arity"] = eq.arity;
                n["cpt"] = eq.cpt;
                break;
        }
        nodes.push_back(std::move(n));
    }
    return json{{"graph", dag_to_json(scm.graph)}, {"mechanism", kind_name(scm.kind)}, {"nodes", nodes}};
}

Scm scm_from_json(const json& j) {
    Scm scm;
    scm.graph = dag_from_json(field(j, "graph", "scm"));
    const std::string kind = field(j, "mechanism", "scm").get<std::string>();
    if (kind == "linear")
        scm.kind = MechanismKind::Linear;
    else if (kind == "rff")
        scm.kind = MechanismKind::Rff;
    else if (kind == "cpt")
        scm.kind = MechanismKind::Cpt;
    else
        fail(ErrorKind::InvalidInput, "scm.mechanism: unknown kind '" + kind + "'");
    const json& nodes = field(j, "nodes", "scm");
    if (!nodes.is_array() || static_cast<int>(nodes.size()) != scm.graph.size())
        fail(ErrorKind::InvalidInput, "scm.nodes: need one entry per vertex");
    scm.nodes.resize(scm.graph.size());
    for (int v = 0; v < scm.graph.size(); ++v) {
        const json& n = nodes[v];
        NodeEquation& eq = scm.nodes[v];
        eq.parents = n.at("parents").get<std::vector<int>>();
        if (eq.parents != scm.graph.parents(v)) fail(ErrorKind::InvalidInput, "scm.nodes: parent list disagrees with graph");
        if (n.contains("weights")) eq.weights = n["weights"].get<std::vector<double>>();
        if (n.contains("noise_var")) eq.noise_var = n["noise_var"].get<double>();
        if (n.contains("frequency")) eq.frequency = n["frequency"].get<std::vector<double>>();
        if (n.contains("phase")) eq.phase = n["phase"].get<std::vector<double>>();
        if (n.contains("amplitude")) eq.amplitude = n["amplitude"].get<std::vector<double>>();
        if (n.contains("arity")) eq.arity = n["arity"].get<int>();
        if (n.contains("cpt")) eq.cpt = n["cpt"].get<std::vector<double>>();
    }
    return scm;
}

json graph_model_to_json(const GraphModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ErdosRenyi>) {
                if (m.param == ErdosRenyi::Param::EdgeProb) return json{{"type", "er"}, {"edge_prob", m.value}};
                return json{{"type", "er"}, {"expected_degree", m.value}};
            } else if constexpr (std::is_same_v<T, ScaleFree>) {
                return json{{"type", "sf"}, {"attachments", m.attachments}};
            } else if constexpr (std::is_same_v<T, WattsStrogatz>) {
                return json{{"type", "ws"}, {"rewire_prob", m.rewire_prob}};
            } else if constexpr (std::is_same_v<T, StochasticBlock>) {
                return json{{"type", "sbm"}, {"blocks", m.blocks}, {"mean_degree", m.mean_degree}, {"between_ratio", m.between_ratio}};
            } else if constexpr (std::is_same_v<T, Star>) {
                return json{{"type", "star"}, {"leaves", m.leaves}};
            } else {
                return json{{"type", "custom"}, {"graph", dag_to_json(m.dag)}};
            }
        },
        model);
}

GraphModel graph_model_from_json(const json& j) {
    const std::string path = "graph_model";
    const json& type = field(j, "type", path);
    if (!type.is_string()) fail(ErrorKind::InvalidInput, path + ".type: expected a string");
    const std::string t = type.get<std::string>();
    if (t == "er") {
        if (j.contains("edge_prob")) return ErdosRenyi{ErdosRenyi::Param::EdgeProb, number_or(j, "edge_prob", 0.0, path)};
        return ErdosRenyi{ErdosRenyi::Param::ExpectedDegree, number_or(j, "expected_degree", 2.0, path)};
    }
    if (t == "sf") return ScaleFree{integer_or(j, "attachments", 1, path)};
    if (t == "ws") return WattsStrogatz{number_or(j, "rewire_prob", 0.3, path)};
    if (t == "sbm")
        return StochasticBlock{integer_or(j, "blocks", 2, path), number_or(j, "mean_degree", 2.0, path),
                               number_or(j, "between_ratio", 0.1, path)};
    if (t == "star") return Star{integer_or(j, "leaves", 2, path)};
    if (t == "custom") return Custom{dag_from_json(field(j, "graph", path))};
    fail(ErrorKind::InvalidInput, path + ".type: unknown graph model '" + t + "'");
}

json mechanism_to_json(const Mechanism& mech) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearGaussian>) {
                return json{{"type", "linear"},           {"weight_low", m.weight_low},
                            {"weight_high", m.weight_high}, {"noise_var_low", m.noise_var_low},
                            {"noise_var_high", m.noise_var_high}};
            } else if constexpr (std::is_same_v<T, RandomFourier>) {
                return json{{"type", "rff"},
                            {"features", m.features},
                            {"length_scale", m.length_scale},
                            {"output_scale", m.output_scale},
                            {"noise_var_low", m.noise_var_low},
                            {"noise_var_high", m.noise_var_high}};
            } else {
                json out{{"type", "cpt"}, {"arity", m.arity}, {"concentration", m.concentration}};
                if (!m.arities.empty()) out["arities"] = m.arities;
                return out;
            }
        },
        mech);
}

Mechanism mechanism_from_json(const json& j) {
    const std::string path = "mechanism";
    const json& type = field(j, "type", path);
    if (!type.is_string()) fail(ErrorKind::InvalidInput, path + ".type: expected a string");
    const std::string t = type.get<std::string>();
    if (t == "linear") {
        LinearGaussian m;
        m.weight_low = number_or(j, "weight_low", m.weight_low, path);
        m.weight_high = number_or(j, "weight_high", m.weight_high, path);
        m.noise_var_low = number_or(j, "noise_var_low", m.noise_var_low, path);
        m.noise_var_high = number_or(j, "noise_var_high", m.noise_var_high, path);
        return m;
    }
    if (t == "rff") {
        RandomFourier m;
        m.features = integer_or(j, "features", m.features, path);
        m.length_scale = number_or(j, "length_scale", m.length_scale, path);
        m.output_scale = number_or(j, "output_scale", m.output_scale, path);
        m.noise_var_low = number_or(j, "noise_var_low", m.noise_var_low, path);
        m.noise_var_high = number_or(j, "noise_var_high", m.noise_var_high, path);
        return m;
    }
    if (t == "cpt") {
        Categorical m;
        m.arity = integer_or(j, "arity", m.arity, path);
        m.concentration = number_or(j, "concentration", m.concentration, path);
        if (j.contains("arities")) m.arities = j["arities"].get<std::vector<int>>();
        return m;
    }
    fail(ErrorKind::InvalidInput, path + ".type: unknown mechanism '" + t + "'");
}

}  // namespace sicl::scm
