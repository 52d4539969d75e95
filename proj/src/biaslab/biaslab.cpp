#include "sicl/biaslab.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <thread>

#include "sicl/error.hpp"
#include "sicl/graph.hpp"
#include "sicl/scm.hpp"

namespace sicl::bias {

void StarDistribution::validate() const {
    if (q.empty()) fail(ErrorKind::InvalidInput, "star distribution: need at least one leaf");
    for (double x : q)
        if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::InvalidInput, "star distribution: q entries must lie in [0,1]");
}

double marginal_error_exact(const StarDistribution& sd) {
    sd.validate();
    const std::size_t n = sd.q.size();
    // P(v) = prod Q_i + sum_j (1 - Q_j) prod_{i != j} Q_i, with prefix and
    // suffix products so that zero entries need no special case.
    std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * sd.q[i];
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * sd.q[i];
    double pv = prefix[n];
    for (std::size_t j = 0; j < n; ++j) pv += (1.0 - sd.q[j]) * prefix[j] * suffix[j + 1];
    return std::clamp(1.0 - pv, 0.0, 1.0);
}

double marginal_error_enumerated(const StarDistribution& sd) {
    sd.validate();
    const std::size_t n = sd.q.size();
    if (n > 24) fail(ErrorKind::Capacity, "marginal_error_enumerated: at most 24 leaves");
    double err = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        // bit set = edge points inward
        if (std::popcount(mask) < 2) continue;
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= (mask >> i) & 1u ? 1.0 - sd.q[i] : sd.q[i];
        err += p;
    }
    return err;
}

WorstCase worst_case_error(std::int64_t n) {
    if (n < 2) fail(ErrorKind::InvalidInput, "worst_case_error: n must be >= 2");
    const double nd = static_cast<double>(n);
    const double power = n <= 64 ? std::pow(1.0 - 1.0 / nd, nd) : std::exp(nd * std::log1p(-1.0 / nd));
    WorstCase w;
    w.error = 1.0 - (2.0 * nd - 1.0) / (nd - 1.0) * power;
    w.q = (nd - 1.0) / nd;
    return w;
}

SearchResult worst_case_search(int n, int grid) {
    if (n < 2 || n > 12) fail(ErrorKind::InvalidInput, "worst_case_search: 2 <= n <= 12");
    if (grid <= 0) grid = n <= 5 ? 8 * n : 2 * n;
    SearchResult out;
    auto error_of = [&](const std::vector<double>& p) {
        StarDistribution sd{std::vector<double>(n)};
        for (int i = 0; i < n; ++i) sd.q[i] = 1.0 - p[i];
        ++out.evaluations;
        return marginal_error_exact(sd);
    };

    // Inward masses p_i = 1 - q_i on the simplex sum p <= 1, step 1/grid.
    std::vector<double> best_p(n, 0.0);
    double best = -1.0;
    std::vector<int> k(n, 0);
    std::function<void(int, int)> walk = [&](int i, int left) {
        if (i == n) {
            std::vector<double> p(n);
            for (int t = 0; t < n; ++t) p[t] = static_cast<double>(k[t]) / grid;
            const double e = error_of(p);
            if (e > best) {
                best = e;
                best_p = p;
            }
            return;
        }
        for (int v = 0; v <= left; ++v) {
            k[i] = v;
            walk(i + 1, left - v);
        }
    };
    walk(0, grid);

    // Pattern search: move mass along single coordinates and between pairs.
    double step = 1.0 / grid;
    while (step > 1e-10) {
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            for (int j = -1; j < n; ++j) {
                if (j == i) continue;
                for (double s : {step, -step}) {
                    std::vector<double> p = best_p;
                    p[i] += s;
                    if (j >= 0) p[j] -= s;
                    double sum = 0.0;
                    bool ok = true;
                    for (double x : p) {
                        ok = ok && x >= 0.0 && x <= 1.0;
                        sum += x;
                    }
                    if (!ok || sum > 1.0 + 1e-15) continue;
                    const double e = error_of(p);
                    if (e > best + 1e-15) {
                        best = e;
                        best_p = p;
                        improved = true;
                    }
                }
            }
        }
        if (!improved) step /= 2.0;
    }
    out.error = best;
    out.q.resize(n);
    for (int i = 0; i < n; ++i) out.q[i] = 1.0 - best_p[i];

    // Without the constraint every edge may point inward.
    if (n <= 6) {
        const int pts = 5;
        std::vector<int> idx(n, 0);
        double ub = 0.0;
        while (true) {
            StarDistribution sd{std::vector<double>(n)};
            for (int i = 0; i < n; ++i) sd.q[i] = static_cast<double>(idx[i]) / (pts - 1);
            ub = std::max(ub, marginal_error_exact(sd));
            int t = 0;
            while (t < n && ++idx[t] == pts) idx[t++] = 0;
            if (t == n) break;
        }
        out.unconstrained_error = ub;
    }
    return out;
}

double monte_carlo_error(const StarDistribution& sd, std::int64_t samples, Rng& rng) {
    sd.validate();
    if (samples < 1) fail(ErrorKind::InvalidInput, "monte_carlo_error: samples must be >= 1");
    const std::uint64_t master = rng();
    constexpr std::int64_t kShard = 1 << 16;
    const std::int64_t shards = (samples + kShard - 1) / kShard;
    std::vector<std::int64_t> hits(static_cast<std::size_t>(shards), 0);

    auto run_shard = [&](std::int64_t s) {
        Rng local(derive_seed(master, "star-mc", static_cast<std::uint64_t>(s)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::int64_t count = std::min(kShard, samples - s * kShard);
        std::int64_t h = 0;
        for (std::int64_t t = 0; t < count; ++t) {
            int inward = 0;
            for (double q : sd.q) inward += unit(local) >= q;
            h += inward >= 2;
        }
        hits[static_cast<std::size_t>(s)] = h;
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(shards)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::int64_t s = w; s < shards; s += workers) run_shard(s);
        });
    for (std::int64_t s = 0; s < shards; s += workers) run_shard(s);
    for (auto& t : pool) t.join();

    std::int64_t total = 0;
    for (auto h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(samples);
}

namespace {

using Q = boost::rational<std::int64_t>;
using QMatrix = std::array<std::array<Q, 3>, 3>;

// Covariance of x = B x + e for a 3-variable linear SCM, exactly.
QMatrix rational_covariance(const QMatrix& b, const std::array<Q, 3>& noise) {
    QMatrix a{}, power{}, next{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = power[i][j] = Q(i == j ? 1 : 0);
    for (int step = 1; step < 3; ++step) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                next[i][j] = 0;
                for (int k = 0; k < 3; ++k) next[i][j] += power[i][k] * b[k][j];
            }
        power = next;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a[i][j] += power[i][j];
    }
    QMatrix cov{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            cov[i][j] = 0;
            for (int k = 0; k < 3; ++k) cov[i][j] += a[i][k] * noise[k] * a[j][k];
        }
    return cov;
}

std::vector<double> flatten(const QMatrix& m) {
    std::vector<double> out;
    for (const auto& row : m)
        for (const Q& x : row) out.push_back(boost::rational_cast<double>(x));
    return out;
}

}  // namespace

ChainDemoReport chain_demo(int n, Rng& rng) {
    if (n < 2) fail(ErrorKind::InvalidInput, "chain_demo: n must be >= 2");
    constexpr int X = 0, Y = 1, T = 2;
    ChainDemoReport r;
    r.n = n;

    // B[child][parent]
    QMatrix b1{}, b2{};
    b1[T][X] = 1;
    b1[Y][T] = 1;
    b2[T][Y] = Q(2, 3);
    b2[X][T] = Q(1, 2);
    const QMatrix c1 = rational_covariance(b1, {Q(1), Q(1), Q(1)});
    const QMatrix c2 = rational_covariance(b2, {Q(1, 2), Q(3), Q(2, 3)});
    const QMatrix target{{{Q(1), Q(1), Q(1)}, {Q(1), Q(3), Q(2)}, {Q(1), Q(2), Q(2)}}};
    r.analytic_equal = c1 == c2;
    r.analytic_matches_target = c1 == target;
    r.analytic_1 = flatten(c1);
    r.analytic_2 = flatten(c2);

    const scm::Scm m1 = scm::chain_model_1(), m2 = scm::chain_model_2();
    r.empirical_1 = scm::empirical_covariance(scm::sample_data(m1, n, rng));
    r.empirical_2 = scm::empirical_covariance(scm::sample_data(m2, n, rng));
    const std::vector<double> t = flatten(target);
    for (std::size_t k = 0; k < 9; ++k) {
        r.max_empirical_deviation =
            std::max({r.max_empirical_deviation, std::abs(r.empirical_1[k] - t[k]), std::abs(r.empirical_2[k] - t[k])});
        r.max_empirical_gap = std::max(r.max_empirical_gap, std::abs(r.empirical_1[k] - r.empirical_2[k]));
    }

    // A calibrated independent-edge predictor over {Model 1, Model 2} puts
    // probability 1/2 on each direction of X - T and T - Y.
    r.node_edge_error = marginal_error_exact(StarDistribution{{0.5, 0.5}});
    r.identifiable_target_error = cpdag_of(m1.graph) == cpdag_of(m2.graph) ? 0.0 : 1.0;
    return r;
}

nlohmann::json to_json(const ChainDemoReport& r) {
    return nlohmann::json{{"n", r.n},
                          {"analytic_covariance_model_1", r.analytic_1},
                          {"analytic_covariance_model_2", r.analytic_2},
                          {"analytic_equal", r.analytic_equal},
                          {"analytic_matches_target", r.analytic_matches_target},
                          {"empirical_covariance_model_1", r.empirical_1},
                          {"empirical_covariance_model_2", r.empirical_2},
                          {"max_empirical_deviation", r.max_empirical_deviation},
                          {"max_empirical_gap", r.max_empirical_gap},
                          {"node_edge_error", r.node_edge_error},
                          {"identifiable_target_error", r.identifiable_target_error}};
}

}  // namespace sicl::bias
