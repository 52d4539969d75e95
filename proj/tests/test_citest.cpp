#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "sicl/citest.hpp"
#include "sicl/error.hpp"
#include "support/oracles.hpp"

using namespace sicl;
using namespace sicl::scm;

namespace {

constexpr int X = 0, Y = 1, T = 2;

DataSample discrete(int n, int d, std::vector<double> v, int arity = 2) {
    return DataSample(n, d, std::move(v), std::vector<int>(d, arity));
}

}  // namespace

TEST_CASE("fisher_z on chain data") {
    Rng rng(1);
    const FisherZTest test(sample_data(chain_model_1(), 10000, rng));
    const std::vector<int> t{T};
    CHECK(test.test(X, Y, t).independent);
    const CiResult dep = test.test(X, T, {});
    CHECK_FALSE(dep.independent);
    CHECK(std::abs(test.correlation()[X * 3 + T] - 1.0 / std::sqrt(2.0)) < 0.02);
}

TEST_CASE("fisher_z with exactly orthogonal columns") {
    // centred, mutually orthogonal columns
    const std::vector<double> v{1, 1, 1, -1, -1, 1, -1, -1, 1, 1, 1, -1, -1, 1, -1, -1};
    const FisherZTest test(DataSample(8, 2, v));
    const CiResult r = test.test(0, 1, {});
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.independent);
}

TEST_CASE("fisher_z is symmetric") {
    Rng rng(2);
    const Dag g = sicl::testing::random_dag(5, 0.5, rng);
    const FisherZTest test(sample_data(sample_scm(g, LinearGaussian{}, rng), 500, rng));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;
            for (const auto& z : sicl::testing::subsets_excluding(5, i, j)) {
                const auto a = test.test(i, j, z), b = test.test(j, i, z);
                CHECK(a.statistic == b.statistic);
                CHECK(a.p_value == b.p_value);
            }
        }
}

TEST_CASE("partial correlation routes agree") {
    Rng rng(3);
    std::normal_distribution<double> gauss;
    for (int rep = 0; rep < 100; ++rep) {
        const int d = 6;
        Eigen::MatrixXd a(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) a(r, c) = gauss(rng);
        const Eigen::MatrixXd cov = a * a.transpose() + Eigen::MatrixXd::Identity(d, d);
        std::vector<double> flat(cov.data(), cov.data() + d * d);
        for (const auto& z : sicl::testing::subsets_excluding(d, 1, 4)) {
            const double p = partial_correlation(flat, d, 1, 4, z);
            const double q = partial_correlation_recursive(flat, d, 1, 4, z);
            CHECK(std::abs(p - q) < 1e-10);
        }
    }
}

TEST_CASE("fisher_z errors") {
    Rng rng(4);
    const FisherZTest small(sample_data(chain_model_1(), 4, rng));
    const std::vector<int> t{T};
    CHECK_THROWS_AS(small.test(X, Y, t), Error);
    try {
        small.test(X, Y, t);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SampleSize);
    }

    // column 2 duplicates column 1: conditioning on both is singular
    std::vector<double> v;
    std::normal_distribution<double> gauss;
    for (int r = 0; r < 100; ++r) {
        const double a = gauss(rng), b = gauss(rng);
        v.insert(v.end(), {a, b, b, gauss(rng)});
    }
    const FisherZTest dup(DataSample(100, 4, v));
    const std::vector<int> both{1, 2};
    try {
        dup.test(0, 3, both);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateInput);
    }

    std::vector<double> c(40);
    for (int r = 0; r < 20; ++r) {
        c[r * 2] = gauss(rng);
        c[r * 2 + 1] = 3.0;
    }
    CHECK_THROWS_AS(FisherZTest(DataSample(20, 2, c)).test(0, 1, {}), Error);
    CHECK_THROWS_AS(small.test(0, 0, {}), Error);
}

TEST_CASE("fisher_z level calibration under the null") {
    Rng rng(5);
    int rejections = 0;
    const int seeds = 2000;
    const std::vector<int> t{T};
    for (int s = 0; s < seeds; ++s) {
        const FisherZTest test(sample_data(chain_model_1(), 200, rng));
        if (!test.test(X, Y, t, 0.05).independent) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / seeds;
    CHECK(rate > 0.03);
    CHECK(rate < 0.07);
}

TEST_CASE("g_square independent coins") {
    int accepted = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        std::bernoulli_distribution coin(0.5);
        std::vector<double> v;
        for (int r = 0; r < 10000; ++r) v.insert(v.end(), {double(coin(rng)), double(coin(rng))});
        if (GSquareTest(discrete(10000, 2, v)).test(0, 1, {}).independent) ++accepted;
    }
    CHECK(accepted >= 93);
}

TEST_CASE("g_square copy is dependent") {
    Rng rng(6);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> v;
    for (int r = 0; r < 1000; ++r) {
        const double a = coin(rng);
        v.insert(v.end(), {a, a});
    }
    const CiResult res = GSquareTest(discrete(1000, 2, v)).test(0, 1, {});
    CHECK_FALSE(res.independent);
    CHECK_FALSE(res.low_power);
}

TEST_CASE("g_square conditioning on a common cause") {
    Rng rng(7);
    const Dag fork(3, std::vector<Edge>{{0, 1}, {0, 2}});
    const Scm scm = sample_scm(fork, Categorical{}, rng);
    const GSquareTest test(sample_data(scm, 20000, rng));
    const std::vector<int> z{0};
    CHECK(test.test(1, 2, z).independent);
}

TEST_CASE("g_square skips empty strata and flags low power") {
    // z takes only value 0 although its arity is 3
    std::vector<double> v;
    for (int r = 0; r < 4; ++r) v.insert(v.end(), {double(r % 2), double((r / 2) % 2), 0.0});
    const DataSample data(4, 3, v, {2, 2, 3});
    const std::vector<int> z{2};
    const CiResult res = GSquareTest(data).test(0, 1, z);
    CHECK(res.statistic == doctest::Approx(0.0));
    CHECK(res.low_power);  // df = 1, n = 4 < 5
}

TEST_CASE("dsep oracle") {
    const DsepOracle coll(Dag(3, std::vector<Edge>{{X, T}, {Y, T}}));
    CHECK(coll.test(X, Y, {}).independent);
    const std::vector<int> t{T};
    const CiResult r = coll.test(X, Y, t);
    CHECK_FALSE(r.independent);
    CHECK(r.p_value == 0.0);
}

TEST_CASE("dsep oracle is relabeling invariant") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Dag g = sicl::testing::random_dag(6, 0.4, rng);
        const auto perm = sicl::testing::random_permutation(6, rng);
        const DsepOracle a(g), b(g.relabel(perm));
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                for (const auto& z : sicl::testing::subsets_excluding(6, i, j)) {
                    std::vector<int> pz;
                    for (int v : z) pz.push_back(perm[v]);
                    REQUIRE(a.test(i, j, z).independent == b.test(perm[i], perm[j], pz).independent);
                }
    }
}

TEST_CASE("dsep oracle matches fisher_z at large n") {
    Rng rng(9);
    const Dag g = sample_graph(ErdosRenyi{ErdosRenyi::Param::ExpectedDegree, 2.0}, 6, rng);
    const Scm scm = sample_scm(g, LinearGaussian{}, rng);
    const FisherZTest fz(sample_data(scm, 100000, rng));
    const DsepOracle oracle(g);
    int mismatches = 0, total = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            for (int k = -1; k < 6; ++k) {
                if (k == i || k == j) continue;
                std::vector<int> z;
                if (k >= 0) z.push_back(k);
                ++total;
                if (fz.test(i, j, z, 0.01).independent != oracle.test(i, j, z, 0.01).independent) ++mismatches;
            }
    CHECK(total == 75);
    CHECK(mismatches == 0);
}
