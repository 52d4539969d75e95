#include "sicl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sicl/error.hpp"

namespace sicl {

namespace {

void require_same_size(int a, int b, const char* what) {
    if (a != b) fail(ErrorKind::InvalidInput, std::string(what) + ": graphs differ in size");
}

template <class T>
std::size_t overlap(const std::set<T>& a, const std::set<T>& b) {
    std::size_t n = 0;
    for (const T& x : a) n += b.count(x);
    return n;
}

}  // namespace

F1Score f1_from_counts(std::size_t true_pos, std::size_t predicted, std::size_t actual) {
    F1Score s;
    if (actual == 0) {
        s.degenerate = true;
        s.f1 = predicted == 0 ? 100.0 : 0.0;
        s.precision = predicted == 0 ? 100.0 : 0.0;
        s.recall = 100.0;
        return s;
    }
    s.recall = 100.0 * static_cast<double>(true_pos) / static_cast<double>(actual);
    s.precision = predicted ? 100.0 * static_cast<double>(true_pos) / static_cast<double>(predicted) : 0.0;
    s.f1 = true_pos ? 200.0 * static_cast<double>(true_pos) / static_cast<double>(predicted + actual) : 0.0;
    return s;
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k;
        while (e < n && scores[order[e]] == scores[order[k]]) ++e;
        const double avg_rank = (static_cast<double>(k + 1) + static_cast<double>(e)) / 2.0;
        for (std::size_t t = k; t < e; ++t) {
            if (labels[order[t]]) {
                rank_sum += avg_rank;
                ++pos;
            } else {
                ++neg;
            }
        }
        k = e;
    }
    if (pos == 0 || neg == 0) return std::nullopt;
    return 100.0 * (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.size();
    double total_pos = 0;
    for (auto l : labels) total_pos += l ? 1 : 0;
    if (total_pos == 0 || total_pos == static_cast<double>(n)) return std::nullopt;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double tp = 0, seen = 0, ap = 0, prev_recall = 0;
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k;
        while (e < n && scores[order[e]] == scores[order[k]]) ++e;
        for (std::size_t t = k; t < e; ++t) {
            tp += labels[order[t]] ? 1 : 0;
            ++seen;
        }
        const double recall = tp / total_pos;
        ap += (recall - prev_recall) * (tp / seen);
        prev_recall = recall;
        k = e;
    }
    return 100.0 * ap;
}

SkeletonScores skeleton_metrics(const Skeleton& pred, const Skeleton& truth) {
    require_same_size(pred.size(), truth.size(), "skeleton_metrics");
    const int d = truth.size();
    std::vector<double> scores(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) scores[static_cast<std::size_t>(i) * d + j] = pred.adjacent(i, j) ? 1.0 : 0.0;
    return skeleton_metrics(scores, truth, 0.5);
}

SkeletonScores skeleton_metrics(std::span<const double> scores, const Skeleton& truth, double threshold) {
    const int d = truth.size();
    if (scores.size() != static_cast<std::size_t>(d) * d) fail(ErrorKind::InvalidInput, "skeleton_metrics: score matrix must be d x d");
    std::vector<double> sym;
    std::vector<std::uint8_t> labels;
    std::size_t tp = 0, predicted = 0, actual = 0, correct = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double s = std::max(scores[static_cast<std::size_t>(i) * d + j], scores[static_cast<std::size_t>(j) * d + i]);
            const bool p = s > threshold, t = truth.adjacent(i, j);
            sym.push_back(s);
            labels.push_back(t);
            tp += p && t;
            predicted += p;
            actual += t;
            correct += p == t;
        }
    }
    SkeletonScores out;
    out.f1 = f1_from_counts(tp, predicted, actual);
    out.accuracy = sym.empty() ? 100.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(sym.size());
    out.auc = roc_auc(sym, labels);
    out.auprc = average_precision(sym, labels);
    return out;
}

std::vector<VStructure> pdag_vstructures(const Pdag& p) {
    const int d = p.size();
    std::vector<VStructure> out;
    for (int c = 0; c < d; ++c)
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                if (a != c && b != c && p.is_directed(a, c) && p.is_directed(b, c) && !p.adjacent(a, b))
                    out.push_back({c, a, b});
    return out;
}

F1Score vstructure_f1(const Pdag& pred, const Pdag& truth) {
    require_same_size(pred.size(), truth.size(), "vstructure_f1");
    const auto pv = pdag_vstructures(pred), tv = pdag_vstructures(truth);
    const std::set<VStructure> ps(pv.begin(), pv.end()), ts(tv.begin(), tv.end());
    return f1_from_counts(overlap(ps, ts), ps.size(), ts.size());
}

F1Score orientation_f1(std::span<const Edge> pred_directed, const Pdag& truth) {
    const std::set<Edge> ps(pred_directed.begin(), pred_directed.end());
    const auto td = truth.directed_edges();
    const std::set<Edge> ts(td.begin(), td.end());
    return f1_from_counts(overlap(ps, ts), ps.size(), ts.size());
}

F1Score orientation_f1(const Pdag& pred, const Pdag& truth) {
    require_same_size(pred.size(), truth.size(), "orientation_f1");
    const auto pd = pred.directed_edges();
    return orientation_f1(pd, truth);
}

int shd_cpdag(const Pdag& pred, const Pdag& truth) {
    require_same_size(pred.size(), truth.size(), "shd_cpdag");
    const int d = truth.size();
    int shd = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const bool pa = pred.adjacent(i, j), ta = truth.adjacent(i, j);
            if (pa != ta) {
                ++shd;
            } else if (pa && (pred.is_directed(i, j) != truth.is_directed(i, j) ||
                              pred.is_directed(j, i) != truth.is_directed(j, i))) {
                ++shd;
            }
        }
    }
    return shd;
}

GraphMetrics evaluate(const Pdag& pred, const Pdag& truth, std::span<const double> skeleton_scores) {
    GraphMetrics m;
    const SkeletonScores s =
        skeleton_scores.empty() ? skeleton_metrics(pred.skeleton(), truth.skeleton()) : skeleton_metrics(skeleton_scores, truth.skeleton());
    m.s_f1 = s.f1.f1;
    m.s_acc = s.accuracy;
    if (!skeleton_scores.empty()) {
        m.s_auc = s.auc;
        m.s_auprc = s.auprc;
    }
    m.o_f1 = orientation_f1(pred, truth).f1;
    m.v_f1 = vstructure_f1(pred, truth).f1;
    m.shd = shd_cpdag(pred, truth);
    return m;
}

nlohmann::json to_json(const GraphMetrics& m) {
    nlohmann::json j{{"s_f1", m.s_f1}, {"s_acc", m.s_acc}, {"o_f1", m.o_f1}, {"v_f1", m.v_f1}, {"shd", m.shd}};
    if (m.s_auc) j["s_auc"] = *m.s_auc;
    if (m.s_auprc) j["s_auprc"] = *m.s_auprc;
    return j;
}

nlohmann::json batch_report(const std::vector<NamedMetrics>& rows) {
    nlohmann::json graphs = nlohmann::json::array();
    double s_f1 = 0, s_acc = 0, o_f1 = 0, v_f1 = 0, shd = 0, auc = 0, auprc = 0;
    int n_auc = 0, n_auprc = 0;
    for (const auto& r : rows) {
        nlohmann::json j{{"id", r.id}};
        j.update(to_json(r.metrics));
        graphs.push_back(std::move(j));
        s_f1 += r.metrics.s_f1;
        s_acc += r.metrics.s_acc;
        o_f1 += r.metrics.o_f1;
        v_f1 += r.metrics.v_f1;
        shd += r.metrics.shd;
        if (r.metrics.s_auc) auc += *r.metrics.s_auc, ++n_auc;
        if (r.metrics.s_auprc) auprc += *r.metrics.s_auprc, ++n_auprc;
    }
    nlohmann::json mean = nlohmann::json::object();
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        mean = {{"s_f1", s_f1 / n}, {"s_acc", s_acc / n}, {"o_f1", o_f1 / n}, {"v_f1", v_f1 / n}, {"shd", shd / n}};
        if (n_auc) mean["s_auc"] = auc / n_auc;
        if (n_auprc) mean["s_auprc"] = auprc / n_auprc;
    }
    return {{"graphs", graphs}, {"mean", mean}, {"count", rows.size()}};
}

ExpectedF1 expected_orientation_f1(std::span<const double> probs, int d, const Pdag& truth, double round_eps,
                                   int max_enumerated) {
    if (probs.size() != static_cast<std::size_t>(d) * d || truth.size() != d)
        fail(ErrorKind::InvalidInput, "expected_orientation_f1: size mismatch");
    ExpectedF1 out;
    std::vector<std::uint8_t> base(static_cast<std::size_t>(d) * d, 0);
    std::vector<std::pair<std::size_t, double>> free;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            const std::size_t k = static_cast<std::size_t>(i) * d + j;
            const double p = std::clamp(probs[k], 0.0, 1.0);
            if (p <= round_eps) {
                out.neglected_mass += p;
            } else if (p >= 1.0 - round_eps) {
                base[k] = 1;
                out.neglected_mass += 1.0 - p;
            } else {
                free.emplace_back(k, p);
            }
        }
    }
    // Keep the most uncertain pairs when there are too many to enumerate.
    if (static_cast<int>(free.size()) > max_enumerated) {
        std::stable_sort(free.begin(), free.end(), [](const auto& a, const auto& b) {
            return std::abs(a.second - 0.5) < std::abs(b.second - 0.5);
        });
        for (std::size_t t = max_enumerated; t < free.size(); ++t) {
            const auto [k, p] = free[t];
            if (p >= 0.5) base[k] = 1;
            out.neglected_mass += std::min(p, 1.0 - p);
        }
        free.resize(max_enumerated);
    }
    out.enumerated_pairs = static_cast<int>(free.size());

    std::vector<std::uint8_t> adj = base;
    const std::uint64_t total = std::uint64_t{1} << free.size();
    double expected = 0.0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double weight = 1.0;
        for (std::size_t t = 0; t < free.size(); ++t) {
            const bool on = (mask >> t) & 1;
            adj[free[t].first] = on;
            weight *= on ? free[t].second : 1.0 - free[t].second;
        }
        if (weight == 0.0) continue;
        double f1;
        if (is_acyclic(d, adj)) {
            f1 = orientation_f1(cpdag_of(Dag::from_matrix(d, adj)), truth).f1;
        } else {
            std::vector<Edge> edges;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    if (adj[static_cast<std::size_t>(i) * d + j]) edges.push_back({i, j});
            f1 = orientation_f1(edges, truth).f1;
        }
        expected += weight * f1;
    }
    out.value = expected;
    return out;
}

}  // namespace sicl
