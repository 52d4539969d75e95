#include <doctest.h>

#include <set>

#include "sicl/constraint.hpp"
#include "sicl/error.hpp"
#include "sicl/metrics.hpp"
#include "support/oracles.hpp"

using namespace sicl;
using namespace sicl::scm;

namespace {

Dag random_er(Rng& rng, int d) {
    const double degree = std::uniform_real_distribution<double>(1.0, std::min(3.0, d - 1.0))(rng);
    return sample_graph(ErdosRenyi{ErdosRenyi::Param::ExpectedDegree, degree}, d, rng);
}

}  // namespace

TEST_CASE("for_each_subset enumerates combinations") {
    std::vector<std::vector<int>> seen;
    for_each_subset({3, 5, 7, 9}, 2, [&](const std::vector<int>& z) {
        seen.push_back(z);
        return false;
    });
    CHECK(seen == std::vector<std::vector<int>>{{3, 5}, {3, 7}, {3, 9}, {5, 7}, {5, 9}, {7, 9}});
    int count = 0;
    for_each_subset({1, 2}, 0, [&](const std::vector<int>& z) {
        CHECK(z.empty());
        ++count;
        return false;
    });
    CHECK(count == 1);
    CHECK_FALSE(for_each_subset({1}, 2, [](const std::vector<int>&) { return true; }));
}

TEST_CASE("oracle PC recovers skeleton, v-structures and CPDAG") {
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 3 + rep % 6;
        const Dag g = random_er(rng, d);
        const DsepOracle oracle(g);
        const auto search = pc_skeleton(oracle);
        REQUIRE(search.skeleton == skeleton_of(g));
        REQUIRE(search.failures.empty());
        auto vs = vstructs_from_sepsets(search.skeleton, search.sepsets);
        REQUIRE(vs == vstructures_of(g));
        REQUIRE(pc(oracle) == cpdag_of(g));
        const auto maj = vstructs_majority(oracle, search.skeleton);
        REQUIRE(maj.vstructures == vstructures_of(g));
    }
}

TEST_CASE("oracle PC on the empty graph") {
    const DsepOracle oracle{Dag(5)};
    const auto search = pc_skeleton(oracle);
    CHECK(search.skeleton.num_edges() == 0);
    CHECK(search.sepsets.size() == 10);
    for (const auto& [pair, z] : search.sepsets.entries()) CHECK(z.empty());
    CHECK(pc(oracle) == Pdag(5));
}

TEST_CASE("sepset rule on collider and chain") {
    const Skeleton s(3, std::vector<Pair>{{0, 2}, {1, 2}});
    SepsetMap coll;
    coll.set(0, 1, {});
    CHECK(vstructs_from_sepsets(s, coll) == std::vector<VStructure>{{2, 0, 1}});
    SepsetMap chain;
    chain.set(0, 1, {2});
    CHECK(vstructs_from_sepsets(s, chain).empty());
    try {
        vstructs_from_sepsets(s, SepsetMap{});
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Contract);
    }
}

TEST_CASE("majority rule fractions") {
    const Dag coll(3, std::vector<Edge>{{0, 2}, {1, 2}});
    const auto mc = vstructs_majority(DsepOracle(coll), skeleton_of(coll));
    REQUIRE(mc.votes.size() == 1);
    CHECK(mc.votes[0].fraction() == 0.0);
    CHECK(mc.vstructures.size() == 1);

    const Dag chain(3, std::vector<Edge>{{0, 2}, {2, 1}});
    const auto mh = vstructs_majority(DsepOracle(chain), skeleton_of(chain));
    REQUIRE(mh.votes.size() == 1);
    CHECK(mh.votes[0].fraction() == 1.0);
    CHECK(mh.vstructures.empty());

    // a UT whose leaves are never separated stays unclassified
    const Dag tri(3, std::vector<Edge>{{0, 2}, {1, 2}, {0, 1}});
    const auto mt = vstructs_majority(DsepOracle(tri), skeleton_of(chain));
    CHECK(mt.unclassified == 1);
    CHECK(mt.vstructures.empty());
}

TEST_CASE("PC-stable skeleton is order independent") {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const Dag g = random_er(rng, 7);
        const DataSample data = sample_data(sample_scm(g, LinearGaussian{}, rng), 300, rng);
        const auto perm = sicl::testing::random_permutation(7, rng);
        const auto a = pc_skeleton(FisherZTest(data), 0.05, 3);
        const auto b = pc_skeleton(FisherZTest(data.permute_columns(perm)), 0.05, 3);
        CHECK(b.skeleton == a.skeleton.relabel(perm));

        const auto oa = pc_skeleton(DsepOracle(g));
        const auto ob = pc_skeleton(DsepOracle(g.relabel(perm)));
        CHECK(ob.skeleton == oa.skeleton.relabel(perm));
    }
}

TEST_CASE("v-structures are unshielded triples of the skeleton") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const Dag g = random_er(rng, 8);
        const DataSample data = sample_data(sample_scm(g, LinearGaussian{}, rng), 500, rng);
        const FisherZTest test(data);
        const auto search = pc_skeleton(test, 0.05, 3);
        const auto uts = unshielded_triples(search.skeleton);
        const std::set<VStructure> ut_set(uts.begin(), uts.end());
        for (const auto& v : vstructs_from_sepsets(search.skeleton, search.sepsets)) CHECK(ut_set.count(v));
        for (const auto& v : vstructs_majority(test, search.skeleton, 0.05, 3).vstructures) CHECK(ut_set.count(v));
        const auto res = pc_full(test, {0.05, 3, VRule::Sepset});
        CHECK(is_acyclic(8, [&] {
            std::vector<std::uint8_t> m(64, 0);
            for (const Edge& e : res.cpdag.directed_edges()) m[e.from * 8 + e.to] = 1;
            return m;
        }()));
        CHECK(res.cpdag.skeleton() == search.skeleton);
    }
}

TEST_CASE("finite-sample skeleton quality") {
    Rng rng(4);
    double total = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const Dag g = sample_graph(ErdosRenyi{ErdosRenyi::Param::ExpectedDegree, 2.0}, 10, rng);
        const DataSample data = sample_data(sample_scm(g, LinearGaussian{}, rng), 10000, rng);
        const auto search = pc_skeleton(FisherZTest(data), 0.05, 3);
        total += skeleton_metrics(search.skeleton, skeleton_of(g)).f1.f1;
    }
    CHECK(total / seeds >= 85.0);
}

TEST_CASE("majority rule versus sepset rule at finite samples") {
    Rng rng(5);
    int at_least = 0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        const Dag g = sample_graph(ErdosRenyi{ErdosRenyi::Param::ExpectedDegree, 2.0}, 8, rng);
        const DataSample data = sample_data(sample_scm(g, LinearGaussian{}, rng), 5000, rng);
        const FisherZTest test(data);
        const Pdag truth = cpdag_of(g);
        const double plain = vstructure_f1(pc_full(test, {0.05, 3, VRule::Sepset}).cpdag, truth).f1;
        const double major = vstructure_f1(pc_full(test, {0.05, 3, VRule::Majority}).cpdag, truth).f1;
        if (major >= plain) ++at_least;
    }
    CHECK(at_least >= 30);
}

TEST_CASE("PC on collider and empty-graph data") {
    Rng rng(6);
    const Dag coll(3, std::vector<Edge>{{0, 2}, {1, 2}});
    int exact = 0;
    for (int s = 0; s < 20; ++s) {
        const DataSample data = sample_data(sample_scm(coll, LinearGaussian{}, rng), 10000, rng);
        if (shd_cpdag(pc(FisherZTest(data)), cpdag_of(coll)) == 0) ++exact;
    }
    CHECK(exact >= 18);

    int empty_out = 0;
    for (int s = 0; s < 50; ++s) {
        const DataSample empty = sample_data(sample_scm(Dag(3), LinearGaussian{}, rng), 1000, rng);
        if (pc(FisherZTest(empty)) == Pdag(3)) ++empty_out;
    }
    // three level-0 tests at alpha = 0.05: about 86% expected
    CHECK(empty_out >= 38);
}

TEST_CASE("failed tests count as dependent") {
    Rng rng(7);
    // n = 5 leaves room only for |Z| <= 1
    const DataSample data = sample_data(sample_scm(Dag(4), LinearGaussian{}, rng), 5, rng);
    const auto search = pc_skeleton(FisherZTest(data), 0.05, 3);
    CHECK(search.tests > 0);
    CHECK(search.failures.size() + search.sepsets.size() >= 1);
}
