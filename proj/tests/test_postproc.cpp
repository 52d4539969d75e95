#include <doctest.h>

#include "sicl/error.hpp"
#include "sicl/postproc.hpp"
#include "support/oracles.hpp"

using namespace sicl;

namespace {

ScoredVStructure sv(int c, int a, int b, double s) { return {make_vstructure(c, a, b), s}; }

bool directed_acyclic(const Pdag& p) {
    const int d = p.size();
    std::vector<std::uint8_t> m(static_cast<std::size_t>(d) * d, 0);
    for (const Edge& e : p.directed_edges()) m[static_cast<std::size_t>(e.from) * d + e.to] = 1;
    return is_acyclic(d, m);
}

StructurePrediction noisy_prediction(int d, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    StructurePrediction p;
    p.d = d;
    p.S.resize(static_cast<std::size_t>(d) * d);
    p.U.resize(static_cast<std::size_t>(d) * d * d);
    for (auto& x : p.S) x = unit(rng) * unit(rng);
    for (auto& x : p.U) x = unit(rng);
    return p;
}

}  // namespace

TEST_CASE("threshold_skeleton") {
    CHECK(threshold_skeleton(std::vector<double>(9, 0.0), 3).num_edges() == 0);
    std::vector<double> s(4, 0.0);
    s[1] = 0.9;
    s[2] = 0.1;
    CHECK(threshold_skeleton(s, 2, 0.5).adjacent(0, 1));
    CHECK(threshold_skeleton(std::vector<double>(9, 1.0), 3, 1.0).num_edges() == 0);
    CHECK_THROWS_AS(threshold_skeleton(s, 3), Error);
}

TEST_CASE("extract_candidates") {
    StructurePrediction p;
    p.d = 3;
    p.S.assign(9, 0.0);
    p.U.assign(27, 0.0);
    CHECK(extract_candidates(p, Skeleton(3, std::vector<Pair>{{0, 1}}), 0.5).empty());

    p.U[(2 * 3 + 0) * 3 + 1] = 0.8;
    p.U[(2 * 3 + 1) * 3 + 0] = 0.6;
    const auto c = extract_candidates(p, Skeleton(3, std::vector<Pair>{{0, 2}, {1, 2}}), 0.5);
    REQUIRE(c.size() == 1);
    CHECK(c[0].score == 0.8);
    CHECK(c[0].vs == make_vstructure(2, 0, 1));

    p.U.assign(27, 0.99);
    CHECK(extract_candidates(p, Skeleton(3, std::vector<Pair>{{0, 1}, {0, 2}, {1, 2}}), 0.5).empty());
}

TEST_CASE("resolve_conflicts examples") {
    // a,b,c,d = 0,1,2,3
    const auto kept = resolve_conflicts({sv(1, 0, 2, 0.9), sv(2, 1, 3, 0.6)});
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9);
    CHECK(resolve_conflicts({sv(1, 0, 2, 0.9), sv(4, 3, 5, 0.6)}).size() == 2);
    CHECK(resolve_conflicts({sv(1, 0, 2, 0.3)}).size() == 1);

    const auto low = resolve_conflicts({sv(1, 0, 2, 0.9), sv(2, 1, 3, 0.6)}, ConflictPriority::Lower);
    REQUIRE(low.size() == 1);
    CHECK(low[0].score == 0.6);

    // exact tie: the smaller triple survives
    const auto tie = resolve_conflicts({sv(2, 1, 3, 0.7), sv(1, 0, 2, 0.7)});
    REQUIRE(tie.size() == 1);
    CHECK(tie[0].vs.center == 1);
}

TEST_CASE("resolve_conflicts output is conflict free") {
    Rng rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<ScoredVStructure> cands;
        for (int k = 0; k < 8; ++k) {
            const auto perm = sicl::testing::random_permutation(5, rng);
            cands.push_back(sv(perm[0], perm[1], perm[2], std::uniform_int_distribution<int>(1, 9)(rng) / 10.0));
        }
        for (auto pri : {ConflictPriority::Higher, ConflictPriority::Lower}) {
            const auto kept = resolve_conflicts(cands, pri);
            for (const auto& x : kept)
                for (const auto& y : kept) CHECK_FALSE(conflicting(x.vs, y.vs));
        }
    }
}

TEST_CASE("orient_and_break_cycles") {
    CHECK(orient_and_break_cycles({}).edges.empty());
    const auto acyclic = orient_and_break_cycles({sv(2, 0, 1, 0.8)});
    CHECK(acyclic.edges.size() == 2);
    CHECK(acyclic.cycles_broken == 0);

    // 0->1 (0.9), 1->2 (0.8), 2->0 (0.7)
    const auto o = orient_and_break_cycles({sv(1, 0, 3, 0.9), sv(2, 1, 4, 0.8), sv(0, 2, 5, 0.7)});
    CHECK(o.cycles_broken == 1);
    REQUIRE(o.removed.size() == 1);
    CHECK(o.removed[0].edge == Edge{2, 0});
    CHECK(o.removed[0].score == 0.7);
    CHECK(o.edges.size() == 5);
}

TEST_CASE("edge scores are the maximum over containing candidates") {
    const auto o = orient_and_break_cycles({sv(2, 0, 1, 0.6), sv(2, 0, 3, 0.9)});
    for (const auto& e : o.edges)
        if (e.edge == Edge{0, 2}) CHECK(e.score == 0.9);
}

TEST_CASE("perfect predictions reproduce the CPDAG") {
    const Dag coll(3, std::vector<Edge>{{0, 2}, {1, 2}});
    CHECK(to_cpdag(indicator_prediction(coll)) == cpdag_of(coll));
    const Dag chain(3, std::vector<Edge>{{0, 2}, {2, 1}});
    const Pdag c = to_cpdag(indicator_prediction(chain));
    CHECK(c.directed_edges().empty());
    CHECK(c.undirected_edges().size() == 2);

    Rng rng(2);
    for (int rep = 0; rep < 500; ++rep) {
        const Dag g = sicl::testing::random_dag(2 + rep % 7, 0.4, rng);
        REQUIRE(to_cpdag(indicator_prediction(g)) == cpdag_of(g));
    }
}

TEST_CASE("perfect predictions, exhaustive up to 5 vertices") {
    for (int d = 1; d <= 5; ++d)
        for (const Dag& g : sicl::testing::all_dags(d)) REQUIRE(to_cpdag(indicator_prediction(g)) == cpdag_of(g));
}

TEST_CASE("to_cpdag invariants on arbitrary scores") {
    Rng rng(3);
    for (int rep = 0; rep < 300; ++rep) {
        const StructurePrediction p = noisy_prediction(4 + rep % 5, rng);
        for (auto pri : {ConflictPriority::Higher, ConflictPriority::Lower}) {
            const auto r = to_cpdag_full(p, 0.3, 0.5, pri);
            CHECK(directed_acyclic(r.cpdag));
            CHECK(r.cpdag.skeleton() == threshold_skeleton(p.S, p.d, 0.3));
        }
    }
}

TEST_CASE("prediction validation") {
    StructurePrediction p = indicator_prediction(Dag(3));
    p.S[1] = 1.5;
    CHECK_THROWS_AS(to_cpdag(p), Error);
    p.S.resize(4);
    CHECK_THROWS_AS(to_cpdag(p), Error);
}
