#pragma once

// Synthetic structural causal models: random graph distributions, structural
// equations, forward sampling, and the small constructed diagnostic models.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sicl/graph.hpp"
#include "sicl/rng.hpp"

namespace sicl::scm {

// --- graph distributions ---------------------------------------------------

struct ErdosRenyi {
    enum class Param { EdgeProb, ExpectedDegree };
    Param param = Param::ExpectedDegree;
    double value = 2.0;
};

// Preferential attachment: each new vertex links to `attachments` earlier ones.
struct ScaleFree {
    int attachments = 1;
};

// Periodic lattice (dimension drawn from {2,3} per sample) with edge rewiring.
struct WattsStrogatz {
    double rewire_prob = 0.3;
};

struct StochasticBlock {
    int blocks = 2;
    double mean_degree = 2.0;
    double between_ratio = 0.1;  // p_between / p_within
};

struct Star {
    int leaves = 2;
};

struct Custom {
    Dag dag;
};

using GraphModel = std::variant<ErdosRenyi, ScaleFree, WattsStrogatz, StochasticBlock, Star, Custom>;

struct GraphSample {
    Dag dag;
    int lattice_dim = 0;  // Watts-Strogatz only
};

GraphSample sample_graph_info(const GraphModel& model, int d, Rng& rng);
Dag sample_graph(const GraphModel& model, int d, Rng& rng);

std::string model_name(const GraphModel& model);

// --- mechanisms --------------------------------------------------------------

// All noise specs are variances.
struct LinearGaussian {
    double weight_low = 0.5;
    double weight_high = 2.0;
    double noise_var_low = 0.5;
    double noise_var_high = 1.0;
};

// f(pa) = sum_k a_k cos(w_k . pa + b_k),  w_k ~ N(0, I / l^2),
// b_k ~ U[0, 2pi),  a_k ~ N(0, s^2 / K).
struct RandomFourier {
    int features = 100;
    double length_scale = 1.0;
    double output_scale = 2.0;
    double noise_var_low = 0.5;
    double noise_var_high = 1.0;
};

// Conditional probability tables with rows ~ Dirichlet(concentration * 1).
struct Categorical {
    int arity = 2;
    double concentration = 1.0;
    std::vector<int> arities;  // optional per-node override
};

using Mechanism = std::variant<LinearGaussian, RandomFourier, Categorical>;

enum class MechanismKind { Linear, Rff, Cpt };

struct NodeEquation {
    std::vector<int> parents;
    double noise_var = 0.0;
    std::vector<double> weights;    // Linear: one per parent
    std::vector<double> frequency;  // Rff: features x parents, row-major
    std::vector<double> phase;      // Rff
    std::vector<double> amplitude;  // Rff
    int arity = 0;                  // Cpt
    std::vector<double> cpt;        // Cpt: prod(parent arities) rows x arity, first parent slowest
};

struct Scm {
    Dag graph;
    MechanismKind kind = MechanismKind::Linear;
    std::vector<NodeEquation> nodes;
};

Scm sample_scm(const Dag& g, const Mechanism& mech, Rng& rng);

// --- data --------------------------------------------------------------------

enum class DataType { Continuous, Discrete };

class DataSample {
   public:
    DataSample() = default;
    DataSample(int n, int d, std::vector<double> values);                        // continuous
    DataSample(int n, int d, std::vector<double> values, std::vector<int> arity);  // discrete

    int n() const { return n_; }
    int d() const { return d_; }
    DataType dtype() const { return dtype_; }
    bool is_discrete() const { return dtype_ == DataType::Discrete; }
    const std::vector<int>& arity() const { return arity_; }
    double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * d_ + col]; }
    std::span<const double> values() const { return values_; }
    std::vector<double> column(int col) const;

    DataSample permute_columns(std::span<const int> perm) const;  // column v moves to perm[v]
    DataSample permute_rows(std::span<const int> perm) const;      // row r moves to perm[r]
    DataSample head(int rows) const;

    bool operator==(const DataSample&) const = default;

   private:
    int n_ = 0;
    int d_ = 0;
    DataType dtype_ = DataType::Continuous;
    std::vector<int> arity_;
    std::vector<double> values_;
};

DataSample sample_data(const Scm& scm, int n, Rng& rng);

// Linear-Gaussian only: Sigma = A D A^T with A = (I - B)^{-1}; d*d row-major.
std::vector<double> analytic_covariance(const Scm& scm);
std::vector<double> empirical_covariance(const DataSample& data);

// --- constructed models -------------------------------------------------------

// Variable order [X, Y, T] = [0, 1, 2].
// Model 1: X ~ N(0,1), T = X + N(0,1), Y = T + N(0,1).
Scm chain_model_1();
// Model 2: Y ~ N(0,3), T = (2/3) Y + N(0,2/3), X = 0.5 T + N(0,0.5).
Scm chain_model_2();

// Vertices A..F = 0..5: collider A -> B <- C and chain D -> E -> F.
struct FigCtoInstance {
    Scm scm;
    DataSample data;
    Dag truth;
};
Dag fig_cto_graph();
FigCtoInstance make_fig_cto_dataset(int n, Rng& rng);

// --- serialization -------------------------------------------------------------

nlohmann::json scm_to_json(const Scm& scm);
Scm scm_from_json(const nlohmann::json& j);

nlohmann::json graph_model_to_json(const GraphModel& m);
GraphModel graph_model_from_json(const nlohmann::json& j);
nlohmann::json mechanism_to_json(const Mechanism& m);
Mechanism mechanism_from_json(const nlohmann::json& j);

}  // namespace sicl::scm
