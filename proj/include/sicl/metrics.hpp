#pragma once

// Structure-recovery metrics on a 0-100 scale: skeleton F1/accuracy/AUC/AUPRC,
// v-structure F1, orientation F1, and CPDAG structural Hamming distance.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sicl/graph.hpp"

namespace sicl {

struct F1Score {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    bool degenerate = false;  // truth has no positives
};

// F1 from counts; with no true positives available, 100 if nothing was
// predicted and 0 otherwise.
F1Score f1_from_counts(std::size_t true_pos, std::size_t predicted, std::size_t actual);

struct SkeletonScores {
    F1Score f1;
    double accuracy = 0.0;
    std::optional<double> auc;
    std::optional<double> auprc;
};

SkeletonScores skeleton_metrics(const Skeleton& pred, const Skeleton& truth);
// Scores are symmetrized by max over (i,j),(j,i); F1 and accuracy use
// score > threshold.
SkeletonScores skeleton_metrics(std::span<const double> scores, const Skeleton& truth, double threshold = 0.5);

// Ties share rank (AUC) or form one threshold step (AUPRC). Empty when one
// class is absent.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Two directed arms into a shared center with non-adjacent leaves.
std::vector<VStructure> pdag_vstructures(const Pdag& p);

F1Score vstructure_f1(const Pdag& pred, const Pdag& truth);
F1Score orientation_f1(const Pdag& pred, const Pdag& truth);
F1Score orientation_f1(std::span<const Edge> pred_directed, const Pdag& truth);

// Per unordered pair: 1 if adjacency differs or the edge marks differ.
int shd_cpdag(const Pdag& pred, const Pdag& truth);

struct GraphMetrics {
    double s_f1 = 0.0, s_acc = 0.0, o_f1 = 0.0, v_f1 = 0.0;
    int shd = 0;
    std::optional<double> s_auc, s_auprc;
};
GraphMetrics evaluate(const Pdag& pred, const Pdag& truth, std::span<const double> skeleton_scores = {});
nlohmann::json to_json(const GraphMetrics& m);

struct NamedMetrics {
    std::string id;
    GraphMetrics metrics;
};
// {"graphs": [{"id": .., <metrics>}, ...], "mean": {<metric>: mean}}. AUC and
// AUPRC means cover only the graphs that have them.
nlohmann::json batch_report(const std::vector<NamedMetrics>& rows);

// Expected orientation F1 of a predictor that samples every ordered pair
// (i, j) independently with probability probs[i*d+j]. An acyclic sample is
// scored through its CPDAG; a cyclic sample by its raw directed edges.
struct ExpectedF1 {
    double value = 0.0;
    int enumerated_pairs = 0;
    double neglected_mass = 0.0;  // union bound on probability of rounded pairs deviating
};
ExpectedF1 expected_orientation_f1(std::span<const double> probs, int d, const Pdag& truth, double round_eps = 1e-6,
                                   int max_enumerated = 22);

}  // namespace sicl
