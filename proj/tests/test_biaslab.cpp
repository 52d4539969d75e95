#include <doctest.h>

#include <cmath>

#include "sicl/biaslab.hpp"
#include "sicl/error.hpp"

using namespace sicl;
using namespace sicl::bias;

TEST_CASE("marginal_error_exact examples") {
    CHECK(marginal_error_exact({{0.5, 0.5}}) == 0.25);
    CHECK(std::abs(marginal_error_exact({{2.0 / 3.0, 2.0 / 3.0}}) - 1.0 / 9.0) < 1e-15);
    CHECK(marginal_error_exact({{1.0, 1.0, 1.0}}) == 0.0);
    CHECK(marginal_error_exact({{0.0, 0.0, 1.0}}) == 1.0);
    CHECK(marginal_error_exact({{0.0, 1.0, 1.0}}) == 0.0);
    CHECK_THROWS_AS(marginal_error_exact({{1.2}}), Error);
}

TEST_CASE("closed form agrees with enumeration on random q") {
    Rng rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int n = 1; n <= 12; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            StarDistribution sd{std::vector<double>(n)};
            for (auto& q : sd.q) q = rep % 4 == 0 ? std::round(unit(rng)) : unit(rng);
            CHECK(std::abs(marginal_error_exact(sd) - marginal_error_enumerated(sd)) < 1e-12);
        }
    }
}

TEST_CASE("worst_case_error") {
    CHECK(worst_case_error(2).error == 0.25);
    CHECK(worst_case_error(2).q == 0.5);
    CHECK(std::abs(worst_case_error(3).error - (1.0 - 20.0 / 27.0)) < 1e-15);
    CHECK(std::abs(worst_case_error(1000000).error - (1.0 - 2.0 / std::exp(1.0))) < 1e-5);
    CHECK_THROWS_AS(worst_case_error(1), Error);
    double prev = 0.0;
    for (std::int64_t n = 2; n < 5000; n = n * 3 / 2 + 1) {
        const double e = worst_case_error(n).error;
        CHECK(e > prev);
        CHECK(e < 1.0 - 2.0 / std::exp(1.0));
        prev = e;
    }
    for (int n = 2; n <= 12; ++n) {
        const auto w = worst_case_error(n);
        const double enumerated = marginal_error_enumerated({std::vector<double>(n, w.q)});
        CHECK(std::abs(w.error - enumerated) < 1e-12);
    }
}

TEST_CASE("worst_case_search matches the closed form") {
    for (int n = 2; n <= 5; ++n) {
        const auto s = worst_case_search(n);
        CHECK(std::abs(s.error - worst_case_error(n).error) < 1e-3);
        for (double q : s.q) CHECK(std::abs(q - worst_case_error(n).q) < 1e-3);
        CHECK(s.unconstrained_error == 1.0);
    }
    const auto two = worst_case_search(2);
    CHECK(std::abs(two.error - 0.25) < 1e-3);
    CHECK(std::abs(two.q[0] - 0.5) < 1e-3);
    CHECK(std::abs(two.q[1] - 0.5) < 1e-3);
    const auto eight = worst_case_search(8);
    CHECK(std::abs(eight.error - worst_case_error(8).error) < 1e-3);
}

TEST_CASE("feasible-set maximum is interior to the boundary q = 1") {
    for (int n = 2; n <= 6; ++n) {
        CHECK(marginal_error_exact({std::vector<double>(n, 1.0)}) == 0.0);
        CHECK(marginal_error_exact({std::vector<double>(n, 1.0 - 1e-6)}) < 1e-10);
    }
}

TEST_CASE("monte carlo error") {
    Rng rng(2);
    CHECK(std::abs(monte_carlo_error({{0.5, 0.5}}, 1000000, rng) - 0.25) < 0.002);
    CHECK(monte_carlo_error({{1.0, 1.0, 1.0}}, 10000, rng) == 0.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + rep % 7;
        StarDistribution sd{std::vector<double>(n)};
        for (auto& q : sd.q) q = unit(rng);
        const double exact = marginal_error_exact(sd);
        const std::int64_t samples = 200000;
        const double sigma = std::sqrt(exact * (1 - exact) / samples);
        CHECK(std::abs(monte_carlo_error(sd, samples, rng) - exact) <= 3 * sigma + 1e-12);
    }
    Rng a(3), b(3);
    CHECK(monte_carlo_error({{0.3, 0.6, 0.9}}, 300000, a) == monte_carlo_error({{0.3, 0.6, 0.9}}, 300000, b));
}

TEST_CASE("chain demo") {
    Rng rng(4);
    const auto r = chain_demo(200000, rng);
    CHECK(r.analytic_equal);
    CHECK(r.analytic_matches_target);
    CHECK(r.analytic_1 == std::vector<double>{1, 1, 1, 1, 3, 2, 1, 2, 2});
    CHECK(r.max_empirical_deviation < 0.05);
    CHECK(r.node_edge_error == 0.25);
    CHECK(r.identifiable_target_error == 0.0);
}
