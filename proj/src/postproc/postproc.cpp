#include "sicl/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "sicl/error.hpp"

namespace sicl {

void StructurePrediction::validate() const {
    const std::size_t dd = static_cast<std::size_t>(d) * d;
    if (d < 0 || S.size() != dd || U.size() != dd * d) fail(ErrorKind::InvalidInput, "prediction: S must be d*d and U d*d*d");
    for (double x : S)
        if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::InvalidInput, "prediction: S entries must lie in [0,1]");
    for (double x : U)
        if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::InvalidInput, "prediction: U entries must lie in [0,1]");
}

StructurePrediction indicator_prediction(const Dag& g) {
    const int d = g.size();
    StructurePrediction p;
    p.d = d;
    p.S.assign(static_cast<std::size_t>(d) * d, 0.0);
    p.U.assign(static_cast<std::size_t>(d) * d * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p.S[static_cast<std::size_t>(i) * d + j] = g.adjacent(i, j) ? 1.0 : 0.0;
    for (const VStructure& v : vstructures_of(g)) {
        p.U[(static_cast<std::size_t>(v.center) * d + v.a) * d + v.b] = 1.0;
        p.U[(static_cast<std::size_t>(v.center) * d + v.b) * d + v.a] = 1.0;
    }
    return p;
}

Skeleton threshold_skeleton(std::span<const double> S, int d, double tau_s) {
    if (S.size() != static_cast<std::size_t>(d) * d) fail(ErrorKind::InvalidInput, "threshold_skeleton: S must be d x d");
    std::vector<std::uint8_t> und(S.size(), 0);
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            if (std::max(S[static_cast<std::size_t>(i) * d + j], S[static_cast<std::size_t>(j) * d + i]) > tau_s) {
                und[static_cast<std::size_t>(i) * d + j] = und[static_cast<std::size_t>(j) * d + i] = 1;
            }
        }
    }
    return Skeleton::from_matrix(d, std::move(und));
}

std::vector<ScoredVStructure> extract_candidates(const StructurePrediction& pred, const Skeleton& s, double tau_v) {
    if (s.size() != pred.d) fail(ErrorKind::InvalidInput, "extract_candidates: size mismatch");
    std::vector<ScoredVStructure> out;
    for (const UnshieldedTriple& t : unshielded_triples(s)) {
        const double score = std::max(pred.u(t.center, t.a, t.b), pred.u(t.center, t.b, t.a));
        if (score > tau_v) out.push_back({t, score});
    }
    return out;
}

bool conflicting(const VStructure& x, const VStructure& y) {
    const bool y_center_in_x = y.center == x.a || y.center == x.b;
    const bool x_center_in_y = x.center == y.a || x.center == y.b;
    return y_center_in_x && x_center_in_y;
}

std::vector<ScoredVStructure> resolve_conflicts(const std::vector<ScoredVStructure>& cands, ConflictPriority priority) {
    auto key = [](const ScoredVStructure& c) { return std::make_tuple(c.vs.center, c.vs.a, c.vs.b); };
    // Does `other` take precedence over `c`?
    auto beats = [&](const ScoredVStructure& other, const ScoredVStructure& c) {
        if (priority == ConflictPriority::Higher) {
            if (other.score != c.score) return other.score > c.score;
            return key(other) < key(c);
        }
        if (other.score != c.score) return other.score < c.score;
        return key(other) > key(c);
    };
    std::vector<ScoredVStructure> kept;
    for (std::size_t a = 0; a < cands.size(); ++a) {
        bool keep = true;
        for (std::size_t b = 0; b < cands.size() && keep; ++b) {
            if (a != b && conflicting(cands[a].vs, cands[b].vs) && beats(cands[b], cands[a])) keep = false;
        }
        if (keep) kept.push_back(cands[a]);
    }
    return kept;
}

namespace {

bool by_score(const ScoredEdge& x, const ScoredEdge& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.edge < y.edge;
}

// Any directed cycle, as a list of edges; empty if acyclic.
std::vector<Edge> find_cycle(int d, const std::vector<std::vector<int>>& out) {
    std::vector<int> state(d, 0), parent(d, -1);
    for (int root = 0; root < d; ++root) {
        if (state[root]) continue;
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < out[v].size()) {
                const int w = out[v][next++];
                if (state[w] == 1) {
                    std::vector<Edge> cycle{{v, w}};
                    for (int x = v; x != w; x = parent[x]) cycle.push_back({parent[x], x});
                    return cycle;
                }
                if (state[w] == 0) {
                    state[w] = 1;
                    parent[w] = v;
                    stack.push_back({w, 0});
                }
            } else {
                state[v] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

}  // namespace

Orientation orient_and_break_cycles(const std::vector<ScoredVStructure>& kept) {
    std::map<Edge, double> score;
    int d = 0;
    for (const auto& c : kept) {
        for (int leaf : {c.vs.a, c.vs.b}) {
            const Edge e{leaf, c.vs.center};
            auto [it, fresh] = score.emplace(e, c.score);
            if (!fresh) it->second = std::max(it->second, c.score);
            d = std::max({d, leaf + 1, c.vs.center + 1});
        }
    }
    Orientation out;
    while (true) {
        std::vector<std::vector<int>> adj(d);
        for (const auto& [e, s] : score) adj[e.from].push_back(e.to);
        const std::vector<Edge> cycle = find_cycle(d, adj);
        if (cycle.empty()) break;
        Edge weakest = cycle.front();
        for (const Edge& e : cycle) {
            const double s = score[e], w = score[weakest];
            if (s < w || (s == w && e < weakest)) weakest = e;
        }
        out.removed.push_back({weakest, score[weakest]});
        score.erase(weakest);
        ++out.cycles_broken;
    }
    for (const auto& [e, s] : score) out.edges.push_back({e, s});
    std::sort(out.edges.begin(), out.edges.end(), by_score);
    return out;
}

CpdagResult to_cpdag_full(const StructurePrediction& pred, double tau_s, double tau_v, ConflictPriority priority) {
    pred.validate();
    CpdagResult out;
    out.skeleton = threshold_skeleton(pred.S, pred.d, tau_s);
    const auto cands = extract_candidates(pred, out.skeleton, tau_v);
    const auto kept = resolve_conflicts(cands, priority);
    const Orientation orient = orient_and_break_cycles(kept);

    std::vector<Edge> directed;
    for (const ScoredEdge& e : orient.edges) directed.push_back(e.edge);
    RelaxedClosure closed = meek_closure_relaxed(out.skeleton, directed);
    out.cpdag = std::move(closed.pdag);

    out.diagnostics.candidates = static_cast<int>(cands.size());
    out.diagnostics.conflicts_discarded = static_cast<int>(cands.size() - kept.size());
    out.diagnostics.cycles_broken = orient.cycles_broken;
    out.diagnostics.meek_dropped = static_cast<int>(closed.dropped.size());
    out.diagnostics.unchecked = closed.unchecked;
    return out;
}

Pdag to_cpdag(const StructurePrediction& pred, double tau_s, double tau_v) {
    return to_cpdag_full(pred, tau_s, tau_v).cpdag;
}

nlohmann::json to_json(const PostprocDiagnostics& d) {
    return nlohmann::json{{"candidates", d.candidates},
                          {"conflicts_discarded", d.conflicts_discarded},
                          {"cycles_broken", d.cycles_broken},
                          {"meek_dropped", d.meek_dropped},
                          {"unchecked", d.unchecked}};
}

}  // namespace sicl
