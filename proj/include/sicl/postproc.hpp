#pragma once

// From skeleton scores S and v-structure scores U to a CPDAG: thresholding,
// conflict resolution between v-structures, score-based cycle breaking and
// Meek closure.

#include <span>
#include <vector>

#include "json.hpp"
#include "sicl/graph.hpp"

namespace sicl {

// S is d*d row-major; U is d*d*d with U[(k*d + i)*d + j] the score of
// i -> k <- j (center first).
struct StructurePrediction {
    int d = 0;
    std::vector<double> S;
    std::vector<double> U;

    double s(int i, int j) const { return S[static_cast<std::size_t>(i) * d + j]; }
    double u(int k, int i, int j) const { return U[(static_cast<std::size_t>(k) * d + i) * d + j]; }
    void validate() const;
};

// Perfect-information prediction: S = skeleton indicators, U = v-structure labels.
StructurePrediction indicator_prediction(const Dag& g);

inline constexpr double kDefaultTau = 0.5;

Skeleton threshold_skeleton(std::span<const double> S, int d, double tau_s = kDefaultTau);

struct ScoredVStructure {
    VStructure vs;
    double score = 0.0;
};

std::vector<ScoredVStructure> extract_candidates(const StructurePrediction& pred, const Skeleton& s,
                                                 double tau_v = kDefaultTau);

// Two candidates conflict when each one's center is a leaf of the other.
bool conflicting(const VStructure& x, const VStructure& y);

// Higher: a candidate is dropped when a conflicting one scores higher (ties
// favour the lexicographically smaller triple). Lower reverses the order.
enum class ConflictPriority { Higher, Lower };

std::vector<ScoredVStructure> resolve_conflicts(const std::vector<ScoredVStructure>& cands,
                                                ConflictPriority priority = ConflictPriority::Higher);

struct ScoredEdge {
    Edge edge;
    double score = 0.0;
};

struct Orientation {
    std::vector<ScoredEdge> edges;  // acyclic; sorted by decreasing score
    std::vector<ScoredEdge> removed;
    int cycles_broken = 0;
};

Orientation orient_and_break_cycles(const std::vector<ScoredVStructure>& kept);

struct PostprocDiagnostics {
    int candidates = 0;
    int conflicts_discarded = 0;
    int cycles_broken = 0;
    int meek_dropped = 0;
    bool unchecked = false;
};

struct CpdagResult {
    Pdag cpdag;
    Skeleton skeleton;
    PostprocDiagnostics diagnostics;
};

CpdagResult to_cpdag_full(const StructurePrediction& pred, double tau_s = kDefaultTau, double tau_v = kDefaultTau,
                          ConflictPriority priority = ConflictPriority::Higher);
Pdag to_cpdag(const StructurePrediction& pred, double tau_s = kDefaultTau, double tau_v = kDefaultTau);

nlohmann::json to_json(const PostprocDiagnostics& d);

}  // namespace sicl
