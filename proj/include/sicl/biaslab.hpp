#pragma once

// Error of independent-edge (Node-Edge) sampling on star skeletons, and the
// two-parameterization chain demonstration.

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "sicl/rng.hpp"

namespace sicl::bias {

// q[i] = probability that the edge between the center y and leaf x_i points
// outward (y -> x_i). A sample is an error when two or more edges point in.
struct StarDistribution {
    std::vector<double> q;
    void validate() const;
};

// 1 - P(at most one inward edge), in closed form.
double marginal_error_exact(const StarDistribution& sd);

// Same quantity by summing over all 2^n orientation vectors (n <= 24).
double marginal_error_enumerated(const StarDistribution& sd);

struct WorstCase {
    double error = 0.0;
    double q = 0.0;  // maximizing q_i, identical for every leaf
};

// 1 - (2n-1)/(n-1) (1 - 1/n)^n, attained at q_i = (n-1)/n.
WorstCase worst_case_error(std::int64_t n);

struct SearchResult {
    std::vector<double> q;
    double error = 0.0;
    std::int64_t evaluations = 0;
    double unconstrained_error = 0.0;  // best over the whole cube, coarse grid
};

// Grid search over the feasible set {q in [0,1]^n : sum q >= n - 1} with
// `grid` steps per unit of inward mass, followed by pattern-search refinement.
SearchResult worst_case_search(int n, int grid = 0);

double monte_carlo_error(const StarDistribution& sd, std::int64_t samples, Rng& rng);

struct ChainDemoReport {
    std::vector<double> analytic_1, analytic_2;   // 3x3, order [X, Y, T]
    bool analytic_equal = false;                  // exact rational comparison
    bool analytic_matches_target = false;
    std::vector<double> empirical_1, empirical_2;
    double max_empirical_deviation = 0.0;         // vs. target, both models
    double max_empirical_gap = 0.0;               // between the models
    double node_edge_error = 0.0;                 // collider rate from marginals (1/2, 1/2)
    double identifiable_target_error = 0.0;       // CPDAG targets differ between models
    int n = 0;
};

ChainDemoReport chain_demo(int n, Rng& rng);

nlohmann::json to_json(const ChainDemoReport& r);

}  // namespace sicl::bias
