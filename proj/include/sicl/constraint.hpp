#pragma once

// Constraint-based predictors: PC-stable adjacency search, the sepset and
// majority rules for unshielded triples, and the composed PC pipeline.

#include <string>
#include <vector>

#include "sicl/citest.hpp"
#include "sicl/graph.hpp"

namespace sicl {

struct SkeletonSearch {
    Skeleton skeleton;
    SepsetMap sepsets;
    int tests = 0;
    // Tests that threw; each counted as dependent.
    std::vector<std::string> failures;
};

// max_cond < 0 means d - 2.
SkeletonSearch pc_skeleton(const CiTester& tester, double alpha = kDefaultAlpha, int max_cond = -1);

// v-structure iff the center is outside the recorded sepset of its leaves.
std::vector<VStructure> vstructs_from_sepsets(const Skeleton& s, const SepsetMap& sep);

struct MajorityVote {
    UnshieldedTriple triple;
    int separating = 0;  // separating sets found
    int containing = 0;  // of those, sets containing the center
    bool classified = false;
    double fraction() const { return separating ? static_cast<double>(containing) / separating : 0.0; }
};

struct MajorityResult {
    std::vector<VStructure> vstructures;
    std::vector<MajorityVote> votes;  // one per unshielded triple of s
    int unclassified = 0;
};

// Candidate sets: subsets of (adj(i) + adj(j)) \ {i, j} of size <= max_cond.
// A triple is a v-structure iff fraction <= 0.5; triples with no separating
// set are left unclassified (not v-structures).
MajorityResult vstructs_majority(const CiTester& tester, const Skeleton& s, double alpha = kDefaultAlpha,
                                 int max_cond = -1);

enum class VRule { Sepset, Majority };

struct PcOptions {
    double alpha = kDefaultAlpha;
    int max_cond = -1;
    VRule rule = VRule::Sepset;
};

struct PcResult {
    Pdag cpdag;
    SkeletonSearch search;
    std::vector<VStructure> vstructures;
    std::vector<Edge> dropped;  // orientations given up to keep the graph consistent
    bool unchecked = false;
};

PcResult pc_full(const CiTester& tester, const PcOptions& options = {});
Pdag pc(const CiTester& tester, double alpha = kDefaultAlpha, int max_cond = -1);

// Visits every k-subset of `items` (ascending, lexicographic); stops early
// when `visit` returns true. Returns whether it stopped early.
template <class F>
bool for_each_subset(const std::vector<int>& items, int k, F&& visit) {
    const int m = static_cast<int>(items.size());
    if (k > m || k < 0) return false;
    std::vector<int> pos(k);
    for (int t = 0; t < k; ++t) pos[t] = t;
    std::vector<int> subset(k);
    while (true) {
        for (int t = 0; t < k; ++t) subset[t] = items[pos[t]];
        if (visit(static_cast<const std::vector<int>&>(subset))) return true;
        int t = k - 1;
        while (t >= 0 && pos[t] == m - k + t) --t;
        if (t < 0) return false;
        ++pos[t];
        for (int u = t + 1; u < k; ++u) pos[u] = pos[u - 1] + 1;
    }
}

}  // namespace sicl
