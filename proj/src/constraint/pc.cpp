#include "sicl/constraint.hpp"

#include <algorithm>
#include <set>

#include "sicl/error.hpp"

namespace sicl {

namespace {

int resolve_max_cond(int d, int max_cond) { return max_cond < 0 ? std::max(d - 2, 0) : max_cond; }

std::vector<int> without(std::vector<int> v, int x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

}  // namespace

SkeletonSearch pc_skeleton(const CiTester& tester, double alpha, int max_cond) {
    const int d = tester.num_vars();
    max_cond = resolve_max_cond(d, max_cond);
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d, 1);
    for (int v = 0; v < d; ++v) adj[static_cast<std::size_t>(v) * d + v] = 0;

    SkeletonSearch out;
    auto neighbours = [&](int v) {
        std::vector<int> nb;
        for (int u = 0; u < d; ++u)
            if (adj[static_cast<std::size_t>(v) * d + u]) nb.push_back(u);
        return nb;
    };

    for (int level = 0; level <= max_cond; ++level) {
        // Adjacency sets frozen for the whole level.
        std::vector<std::vector<int>> frozen(d);
        for (int v = 0; v < d; ++v) frozen[v] = neighbours(v);
        bool any_eligible = false;
        std::vector<Pair> removed;

        for (int i = 0; i < d; ++i) {
            for (int j = i + 1; j < d; ++j) {
                if (!adj[static_cast<std::size_t>(i) * d + j]) continue;
                bool separated = false;
                for (int side = 0; side < 2 && !separated; ++side) {
                    const int a = side == 0 ? i : j, b = side == 0 ? j : i;
                    const std::vector<int> pool = without(frozen[a], b);
                    if (static_cast<int>(pool.size()) < level) continue;
                    any_eligible = true;
                    separated = for_each_subset(pool, level, [&](const std::vector<int>& z) {
                        ++out.tests;
                        try {
                            if (tester.test(i, j, z, alpha).independent) {
                                out.sepsets.set(i, j, z);
                                return true;
                            }
                        } catch (const Error& e) {
                            out.failures.push_back("(" + std::to_string(i) + "," + std::to_string(j) + "): " + e.what());
                        }
                        return false;
                    });
                }
                if (separated) removed.push_back({i, j});
            }
        }
        for (const Pair& p : removed) {
            adj[static_cast<std::size_t>(p.first) * d + p.second] = 0;
            adj[static_cast<std::size_t>(p.second) * d + p.first] = 0;
        }
        if (!any_eligible) break;
    }
    out.skeleton = Skeleton::from_matrix(d, std::move(adj));
    return out;
}

std::vector<VStructure> vstructs_from_sepsets(const Skeleton& s, const SepsetMap& sep) {
    std::vector<VStructure> out;
    for (const UnshieldedTriple& t : unshielded_triples(s)) {
        const std::vector<int>* z = sep.find(t.a, t.b);
        if (!z)
            fail(ErrorKind::Contract, "vstructs_from_sepsets: no sepset for (" + std::to_string(t.a) + "," +
                                          std::to_string(t.b) + ")");
        if (!std::binary_search(z->begin(), z->end(), t.center)) out.push_back(t);
    }
    return out;
}

MajorityResult vstructs_majority(const CiTester& tester, const Skeleton& s, double alpha, int max_cond) {
    const int d = s.size();
    max_cond = resolve_max_cond(d, max_cond);
    MajorityResult out;
    for (const UnshieldedTriple& t : unshielded_triples(s)) {
        std::set<int> pool_set;
        for (int v : s.neighbors(t.a)) pool_set.insert(v);
        for (int v : s.neighbors(t.b)) pool_set.insert(v);
        pool_set.erase(t.a);
        pool_set.erase(t.b);
        const std::vector<int> pool(pool_set.begin(), pool_set.end());

        MajorityVote vote{t};
        for (int k = 0; k <= std::min<int>(max_cond, static_cast<int>(pool.size())); ++k) {
            for_each_subset(pool, k, [&](const std::vector<int>& z) {
                try {
                    if (tester.test(t.a, t.b, z, alpha).independent) {
                        ++vote.separating;
                        if (std::binary_search(z.begin(), z.end(), t.center)) ++vote.containing;
                    }
                } catch (const Error&) {
                    // untestable sets carry no vote
                }
                return false;
            });
        }
        vote.classified = vote.separating > 0;
        if (!vote.classified)
            ++out.unclassified;
        else if (vote.fraction() <= 0.5)
            out.vstructures.push_back(t);
        out.votes.push_back(vote);
    }
    return out;
}

PcResult pc_full(const CiTester& tester, const PcOptions& options) {
    PcResult out;
    out.search = pc_skeleton(tester, options.alpha, options.max_cond);
    const Skeleton& s = out.search.skeleton;
    if (options.rule == VRule::Sepset)
        out.vstructures = vstructs_from_sepsets(s, out.search.sepsets);
    else
        out.vstructures = vstructs_majority(tester, s, options.alpha, options.max_cond).vstructures;

    // First v-structure to claim an edge wins; later opposing arms are skipped.
    std::vector<Edge> directed;
    std::set<Edge> claimed;
    for (const VStructure& v : out.vstructures) {
        const Edge e1{v.a, v.center}, e2{v.b, v.center};
        if (claimed.count({v.center, v.a}) || claimed.count({v.center, v.b})) {
            out.dropped.push_back(e1);
            out.dropped.push_back(e2);
            continue;
        }
        for (const Edge& e : {e1, e2})
            if (claimed.insert(e).second) directed.push_back(e);
    }
    RelaxedClosure closed = meek_closure_relaxed(s, directed);
    out.cpdag = std::move(closed.pdag);
    out.dropped.insert(out.dropped.end(), closed.dropped.begin(), closed.dropped.end());
    out.unchecked = closed.unchecked;
    return out;
}

Pdag pc(const CiTester& tester, double alpha, int max_cond) { return pc_full(tester, {alpha, max_cond, VRule::Sepset}).cpdag; }

}  // namespace sicl
