#pragma once

// Graph types over dense vertex indices 0..d-1 and the exact Markov-equivalence
// algorithms built on them (skeletons, v-structures, d-separation, CPDAGs,
// Meek closure, brute-force MEC enumeration).

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sicl {

struct Edge {
    int from = 0;
    int to = 0;
    auto operator<=>(const Edge&) const = default;
};

// Unordered pair stored with first < second.
struct Pair {
    int first = 0;
    int second = 0;
    auto operator<=>(const Pair&) const = default;
};

Pair make_pair_sorted(int i, int j);

class Dag {
   public:
    Dag() = default;
    explicit Dag(int d);
    Dag(int d, std::span<const Edge> edges);

    // Row-major d*d adjacency; throws on cycles, self-loops or bad sizes.
    static Dag from_matrix(int d, std::vector<std::uint8_t> adj);

    int size() const { return d_; }
    bool has_edge(int i, int j) const { return adj_[idx(i, j)] != 0; }
    bool adjacent(int i, int j) const { return has_edge(i, j) || has_edge(j, i); }
    const std::vector<std::uint8_t>& matrix() const { return adj_; }

    std::vector<Edge> edges() const;
    std::size_t num_edges() const;
    std::vector<int> parents(int v) const;
    std::vector<int> children(int v) const;
    std::vector<int> topological_order() const;

    // Vertex v of this graph becomes perm[v] in the result.
    Dag relabel(std::span<const int> perm) const;

    bool operator==(const Dag&) const = default;

   private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * d_ + j; }

    int d_ = 0;
    std::vector<std::uint8_t> adj_;
};

class Skeleton {
   public:
    Skeleton() = default;
    explicit Skeleton(int d);
    Skeleton(int d, std::span<const Pair> edges);
    static Skeleton from_matrix(int d, std::vector<std::uint8_t> und);

    int size() const { return d_; }
    bool adjacent(int i, int j) const { return und_[static_cast<std::size_t>(i) * d_ + j] != 0; }
    const std::vector<std::uint8_t>& matrix() const { return und_; }

    std::vector<Pair> edges() const;
    std::size_t num_edges() const;
    std::vector<int> neighbors(int v) const;
    Skeleton relabel(std::span<const int> perm) const;

    bool operator==(const Skeleton&) const = default;

   private:
    int d_ = 0;
    std::vector<std::uint8_t> und_;
};

// Partially directed graph. Directed and undirected edges never share a pair.
class Pdag {
   public:
    Pdag() = default;
    explicit Pdag(int d);
    Pdag(int d, std::span<const Edge> directed, std::span<const Pair> undirected);

    // Row-major d*d matrices; `und` must be symmetric. Validates all invariants.
    static Pdag from_matrices(int d, std::vector<std::uint8_t> dir, std::vector<std::uint8_t> und);

    int size() const { return d_; }
    bool is_directed(int i, int j) const { return dir_[idx(i, j)] != 0; }
    bool is_undirected(int i, int j) const { return und_[idx(i, j)] != 0; }
    bool adjacent(int i, int j) const {
        return is_directed(i, j) || is_directed(j, i) || is_undirected(i, j);
    }

    std::vector<Edge> directed_edges() const;
    std::vector<Pair> undirected_edges() const;
    Skeleton skeleton() const;
    Pdag relabel(std::span<const int> perm) const;

    bool operator==(const Pdag&) const = default;

   private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * d_ + j; }

    int d_ = 0;
    std::vector<std::uint8_t> dir_;
    std::vector<std::uint8_t> und_;
};

// Center-first triple; leaves are kept sorted (a < b).
struct VStructure {
    int center = 0;
    int a = 0;
    int b = 0;
    auto operator<=>(const VStructure&) const = default;
};
using UnshieldedTriple = VStructure;

VStructure make_vstructure(int center, int leaf1, int leaf2);

class SepsetMap {
   public:
    void set(int i, int j, std::vector<int> z);
    const std::vector<int>* find(int i, int j) const;
    bool contains(int i, int j) const { return find(i, j) != nullptr; }
    std::size_t size() const { return map_.size(); }
    const std::map<Pair, std::vector<int>>& entries() const { return map_; }

   private:
    std::map<Pair, std::vector<int>> map_;
};

bool is_acyclic(int d, std::span<const std::uint8_t> adj);

Skeleton skeleton_of(const Dag& g);
std::vector<VStructure> vstructures_of(const Dag& g);
std::vector<UnshieldedTriple> unshielded_triples(const Skeleton& s);

// Bayes-ball reachability; linear in the number of edges.
bool d_separated(const Dag& g, int i, int j, std::span<const int> z);

Pdag cpdag_of(const Dag& g);

// Skeleton with the given v-structures oriented (both arms into the center).
Pdag orient_vstructures(const Skeleton& s, std::span<const VStructure> vs);

// R1-R4 to a fixpoint; an orientation that would close a directed cycle is
// skipped. No extension check.
Pdag apply_meek_rules(const Pdag& p);

// apply_meek_rules after checking that the input has a consistent DAG
// extension; throws ErrorKind::ConstraintViolation otherwise.
Pdag meek_closure(const Pdag& p);

// Dor-Tarsi extension: a DAG with the same skeleton and v-structures that
// keeps every directed edge of p, if one exists.
std::optional<Dag> consistent_extension(const Pdag& p);

struct RelaxedClosure {
    Pdag pdag;
    std::vector<Edge> dropped;  // directed edges demoted to undirected
    bool unchecked = false;     // no consistent extension even with zero directed edges
};

// Closure over `skeleton` with `directed` oriented. While no consistent
// extension exists, the last edge of `directed` is demoted to undirected, so
// callers order edges by decreasing priority.
RelaxedClosure meek_closure_relaxed(const Skeleton& skeleton, std::vector<Edge> directed);

// Exhaustive orientation enumeration; d <= 7.
std::vector<Dag> enumerate_mec(const Dag& g);

inline constexpr int kMaxMecEnumerationSize = 7;

}  // namespace sicl
