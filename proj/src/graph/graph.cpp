#include "sicl/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>
#include <string>

#include "sicl/error.hpp"

namespace sicl {

namespace {

using Matrix = std::vector<std::uint8_t>;

std::size_t at(int d, int i, int j) { return static_cast<std::size_t>(i) * d + j; }

void check_vertex(int d, int v, const char* what) {
    if (v < 0 || v >= d) {
        std::ostringstream os;
        os << what << ": vertex " << v << " out of range [0," << d << ")";
        fail(ErrorKind::InvalidInput, os.str());
    }
}

void check_square(int d, std::size_t size, const char* what) {
    if (d < 0 || size != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
        fail(ErrorKind::InvalidInput, std::string(what) + ": matrix is not d x d");
    }
}

// True if `to` is reachable from `from` along directed edges of `dir`.
bool has_directed_path(int d, const Matrix& dir, int from, int to) {
    if (from == to) return true;
    std::vector<char> seen(d, 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < d; ++w) {
            if (!dir[at(d, v, w)] || seen[w]) continue;
            if (w == to) return true;
            seen[w] = 1;
            stack.push_back(w);
        }
    }
    return false;
}

bool kahn_acyclic(int d, const Matrix& adj) {
    std::vector<int> indeg(d, 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) indeg[j] += adj[at(d, i, j)] ? 1 : 0;
    std::vector<int> queue;
    for (int v = 0; v < d; ++v)
        if (indeg[v] == 0) queue.push_back(v);
    int seen = 0;
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        ++seen;
        for (int w = 0; w < d; ++w) {
            if (adj[at(d, v, w)] && --indeg[w] == 0) queue.push_back(w);
        }
    }
    return seen == d;
}

}  // namespace

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid-input";
        case ErrorKind::ConstraintViolation: return "constraint-violation";
        case ErrorKind::Capacity: return "capacity";
        case ErrorKind::DegenerateInput: return "degenerate-input";
        case ErrorKind::SampleSize: return "sample-size";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

Pair make_pair_sorted(int i, int j) { return i < j ? Pair{i, j} : Pair{j, i}; }

VStructure make_vstructure(int center, int leaf1, int leaf2) {
    return leaf1 < leaf2 ? VStructure{center, leaf1, leaf2} : VStructure{center, leaf2, leaf1};
}

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(int d) : d_(d), adj_(static_cast<std::size_t>(d) * d, 0) {
    if (d < 0) fail(ErrorKind::InvalidInput, "Dag: negative vertex count");
}

Dag::Dag(int d, std::span<const Edge> edges) : Dag(d) {
    for (const Edge& e : edges) {
        check_vertex(d, e.from, "Dag");
        check_vertex(d, e.to, "Dag");
        if (e.from == e.to) fail(ErrorKind::InvalidInput, "Dag: self-loop");
        if (adj_[idx(e.to, e.from)]) fail(ErrorKind::InvalidInput, "Dag: edge present in both directions");
        adj_[idx(e.from, e.to)] = 1;
    }
    if (!kahn_acyclic(d_, adj_)) fail(ErrorKind::InvalidInput, "Dag: graph has a directed cycle");
}

Dag Dag::from_matrix(int d, std::vector<std::uint8_t> adj) {
    check_square(d, adj.size(), "Dag::from_matrix");
    for (auto& v : adj) v = v ? 1 : 0;
    if (!is_acyclic(d, adj)) fail(ErrorKind::InvalidInput, "Dag::from_matrix: graph has a directed cycle");
    Dag g;
    g.d_ = d;
    g.adj_ = std::move(adj);
    return g;
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (has_edge(i, j)) out.push_back({i, j});
    return out;
}

std::size_t Dag::num_edges() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

std::vector<int> Dag::parents(int v) const {
    std::vector<int> out;
    for (int i = 0; i < d_; ++i)
        if (has_edge(i, v)) out.push_back(i);
    return out;
}

std::vector<int> Dag::children(int v) const {
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
        if (has_edge(v, j)) out.push_back(j);
    return out;
}

std::vector<int> Dag::topological_order() const {
    // Smallest-index-first Kahn order, so the result is canonical.
    std::vector<int> indeg(d_, 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) indeg[j] += has_edge(i, j) ? 1 : 0;
    std::vector<int> order;
    order.reserve(d_);
    std::vector<char> done(d_, 0);
    for (int step = 0; step < d_; ++step) {
        int pick = -1;
        for (int v = 0; v < d_; ++v) {
            if (!done[v] && indeg[v] == 0) {
                pick = v;
                break;
            }
        }
        done[pick] = 1;
        order.push_back(pick);
        for (int w = 0; w < d_; ++w)
            if (has_edge(pick, w)) --indeg[w];
    }
    return order;
}

Dag Dag::relabel(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != d_) fail(ErrorKind::InvalidInput, "Dag::relabel: bad permutation size");
    Matrix m(adj_.size(), 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (has_edge(i, j)) m[at(d_, perm[i], perm[j])] = 1;
    return from_matrix(d_, std::move(m));
}

// ---------------------------------------------------------------------------
// Skeleton

Skeleton::Skeleton(int d) : d_(d), und_(static_cast<std::size_t>(d) * d, 0) {
    if (d < 0) fail(ErrorKind::InvalidInput, "Skeleton: negative vertex count");
}

Skeleton::Skeleton(int d, std::span<const Pair> edges) : Skeleton(d) {
    for (const Pair& p : edges) {
        check_vertex(d, p.first, "Skeleton");
        check_vertex(d, p.second, "Skeleton");
        if (p.first == p.second) fail(ErrorKind::InvalidInput, "Skeleton: self-loop");
        und_[at(d, p.first, p.second)] = 1;
        und_[at(d, p.second, p.first)] = 1;
    }
}

Skeleton Skeleton::from_matrix(int d, std::vector<std::uint8_t> und) {
    check_square(d, und.size(), "Skeleton::from_matrix");
    for (int i = 0; i < d; ++i) {
        if (und[at(d, i, i)]) fail(ErrorKind::InvalidInput, "Skeleton::from_matrix: nonzero diagonal");
        for (int j = 0; j < d; ++j) {
            if ((und[at(d, i, j)] != 0) != (und[at(d, j, i)] != 0))
                fail(ErrorKind::InvalidInput, "Skeleton::from_matrix: matrix not symmetric");
        }
    }
    for (auto& v : und) v = v ? 1 : 0;
    Skeleton s;
    s.d_ = d;
    s.und_ = std::move(und);
    return s;
}

std::vector<Pair> Skeleton::edges() const {
    std::vector<Pair> out;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            if (adjacent(i, j)) out.push_back({i, j});
    return out;
}

std::size_t Skeleton::num_edges() const {
    return static_cast<std::size_t>(std::count(und_.begin(), und_.end(), std::uint8_t{1})) / 2;
}

std::vector<int> Skeleton::neighbors(int v) const {
    std::vector<int> out;
    for (int j = 0; j < d_; ++j)
        if (adjacent(v, j)) out.push_back(j);
    return out;
}

Skeleton Skeleton::relabel(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != d_) fail(ErrorKind::InvalidInput, "Skeleton::relabel: bad permutation size");
    Matrix m(und_.size(), 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (adjacent(i, j)) m[at(d_, perm[i], perm[j])] = 1;
    return from_matrix(d_, std::move(m));
}

// ---------------------------------------------------------------------------
// Pdag

Pdag::Pdag(int d) : d_(d), dir_(static_cast<std::size_t>(d) * d, 0), und_(static_cast<std::size_t>(d) * d, 0) {
    if (d < 0) fail(ErrorKind::InvalidInput, "Pdag: negative vertex count");
}

Pdag::Pdag(int d, std::span<const Edge> directed, std::span<const Pair> undirected) : Pdag(d) {
    Matrix dir(dir_.size(), 0), und(und_.size(), 0);
    for (const Edge& e : directed) {
        check_vertex(d, e.from, "Pdag");
        check_vertex(d, e.to, "Pdag");
        dir[at(d, e.from, e.to)] = 1;
    }
    for (const Pair& p : undirected) {
        check_vertex(d, p.first, "Pdag");
        check_vertex(d, p.second, "Pdag");
        und[at(d, p.first, p.second)] = 1;
        und[at(d, p.second, p.first)] = 1;
    }
    *this = from_matrices(d, std::move(dir), std::move(und));
}

Pdag Pdag::from_matrices(int d, std::vector<std::uint8_t> dir, std::vector<std::uint8_t> und) {
    check_square(d, dir.size(), "Pdag::from_matrices");
    check_square(d, und.size(), "Pdag::from_matrices");
    for (int i = 0; i < d; ++i) {
        if (dir[at(d, i, i)] || und[at(d, i, i)]) fail(ErrorKind::InvalidInput, "Pdag: self-loop");
        for (int j = 0; j < d; ++j) {
            const bool u = und[at(d, i, j)] != 0;
            if (u != (und[at(d, j, i)] != 0)) fail(ErrorKind::InvalidInput, "Pdag: undirected matrix not symmetric");
            if (dir[at(d, i, j)] && dir[at(d, j, i)])
                fail(ErrorKind::InvalidInput, "Pdag: pair directed in both orientations");
            if (u && (dir[at(d, i, j)] || dir[at(d, j, i)]))
                fail(ErrorKind::InvalidInput, "Pdag: pair both directed and undirected");
        }
    }
    for (auto& v : dir) v = v ? 1 : 0;
    for (auto& v : und) v = v ? 1 : 0;
    if (!kahn_acyclic(d, dir)) fail(ErrorKind::InvalidInput, "Pdag: directed part has a cycle");
    Pdag p;
    p.d_ = d;
    p.dir_ = std::move(dir);
    p.und_ = std::move(und);
    return p;
}

std::vector<Edge> Pdag::directed_edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (is_directed(i, j)) out.push_back({i, j});
    return out;
}

std::vector<Pair> Pdag::undirected_edges() const {
    std::vector<Pair> out;
    for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j)
            if (is_undirected(i, j)) out.push_back({i, j});
    return out;
}

Skeleton Pdag::skeleton() const {
    Matrix m(und_.size(), 0);
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j)
            if (adjacent(i, j)) m[at(d_, i, j)] = 1;
    return Skeleton::from_matrix(d_, std::move(m));
}

Pdag Pdag::relabel(std::span<const int> perm) const {
    if (static_cast<int>(perm.size()) != d_) fail(ErrorKind::InvalidInput, "Pdag::relabel: bad permutation size");
    Matrix dir(dir_.size(), 0), und(und_.size(), 0);
    for (int i = 0; i < d_; ++i) {
        for (int j = 0; j < d_; ++j) {
            if (is_directed(i, j)) dir[at(d_, perm[i], perm[j])] = 1;
            if (is_undirected(i, j)) und[at(d_, perm[i], perm[j])] = 1;
        }
    }
    return from_matrices(d_, std::move(dir), std::move(und));
}

// ---------------------------------------------------------------------------
// SepsetMap

void SepsetMap::set(int i, int j, std::vector<int> z) {
    if (i == j) fail(ErrorKind::InvalidInput, "SepsetMap: pair must have distinct vertices");
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end()), z.end());
    if (std::binary_search(z.begin(), z.end(), i) || std::binary_search(z.begin(), z.end(), j))
        fail(ErrorKind::InvalidInput, "SepsetMap: separating set contains an endpoint");
    map_[make_pair_sorted(i, j)] = std::move(z);
}

const std::vector<int>* SepsetMap::find(int i, int j) const {
    auto it = map_.find(make_pair_sorted(i, j));
    return it == map_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Operations

bool is_acyclic(int d, std::span<const std::uint8_t> adj) {
    check_square(d, adj.size(), "is_acyclic");
    for (int i = 0; i < d; ++i)
        if (adj[at(d, i, i)]) fail(ErrorKind::InvalidInput, "is_acyclic: nonzero diagonal");
    return kahn_acyclic(d, Matrix(adj.begin(), adj.end()));
}

Skeleton skeleton_of(const Dag& g) {
    const int d = g.size();
    Matrix m(static_cast<std::size_t>(d) * d, 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (g.adjacent(i, j)) m[at(d, i, j)] = 1;
    return Skeleton::from_matrix(d, std::move(m));
}

std::vector<VStructure> vstructures_of(const Dag& g) {
    const int d = g.size();
    std::vector<VStructure> out;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < d; ++i) {
            if (!g.has_edge(i, k)) continue;
            for (int j = i + 1; j < d; ++j) {
                if (g.has_edge(j, k) && !g.adjacent(i, j)) out.push_back({k, i, j});
            }
        }
    }
    return out;
}

std::vector<UnshieldedTriple> unshielded_triples(const Skeleton& s) {
    const int d = s.size();
    std::vector<UnshieldedTriple> out;
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < d; ++i) {
            if (i == k || !s.adjacent(i, k)) continue;
            for (int j = i + 1; j < d; ++j) {
                if (j != k && s.adjacent(j, k) && !s.adjacent(i, j)) out.push_back({k, i, j});
            }
        }
    }
    return out;
}

bool d_separated(const Dag& g, int i, int j, std::span<const int> z) {
    const int d = g.size();
    check_vertex(d, i, "d_separated");
    check_vertex(d, j, "d_separated");
    if (i == j) fail(ErrorKind::InvalidInput, "d_separated: endpoints must differ");
    std::vector<char> in_z(d, 0);
    for (int v : z) {
        check_vertex(d, v, "d_separated");
        if (v == i || v == j) fail(ErrorKind::InvalidInput, "d_separated: conditioning set contains an endpoint");
        in_z[v] = 1;
    }

    // Z together with its ancestors: colliders in this set are open.
    std::vector<char> anc(d, 0);
    std::vector<int> stack;
    for (int v = 0; v < d; ++v) {
        if (in_z[v]) {
            anc[v] = 1;
            stack.push_back(v);
        }
    }
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int p = 0; p < d; ++p) {
            if (g.has_edge(p, v) && !anc[p]) {
                anc[p] = 1;
                stack.push_back(p);
            }
        }
    }

    // States: (vertex, arrived from a child = up) or (vertex, arrived from a parent = down).
    std::vector<char> visited_up(d, 0), visited_down(d, 0);
    std::deque<std::pair<int, bool>> queue;  // bool: true = up
    queue.emplace_back(i, true);
    while (!queue.empty()) {
        auto [v, up] = queue.front();
        queue.pop_front();
        auto& seen = up ? visited_up : visited_down;
        if (seen[v]) continue;
        seen[v] = 1;
        if (v == j && !in_z[v]) return false;
        if (up) {
            if (in_z[v]) continue;
            for (int w = 0; w < d; ++w) {
                if (g.has_edge(w, v)) queue.emplace_back(w, true);
                if (g.has_edge(v, w)) queue.emplace_back(w, false);
            }
        } else {
            if (!in_z[v]) {
                for (int w = 0; w < d; ++w)
                    if (g.has_edge(v, w)) queue.emplace_back(w, false);
            }
            if (anc[v]) {
                for (int w = 0; w < d; ++w)
                    if (g.has_edge(w, v)) queue.emplace_back(w, true);
            }
        }
    }
    return true;
}

Pdag orient_vstructures(const Skeleton& s, std::span<const VStructure> vs) {
    const int d = s.size();
    Matrix dir(static_cast<std::size_t>(d) * d, 0);
    Matrix und = s.matrix();
    auto orient = [&](int from, int to) {
        if (!s.adjacent(from, to)) fail(ErrorKind::InvalidInput, "orient_vstructures: arm not in skeleton");
        dir[at(d, from, to)] = 1;
        und[at(d, from, to)] = 0;
        und[at(d, to, from)] = 0;
    };
    for (const VStructure& v : vs) {
        orient(v.a, v.center);
        orient(v.b, v.center);
    }
    return Pdag::from_matrices(d, std::move(dir), std::move(und));
}

Pdag cpdag_of(const Dag& g) {
    const auto vs = vstructures_of(g);
    return apply_meek_rules(orient_vstructures(skeleton_of(g), vs));
}

Pdag apply_meek_rules(const Pdag& p) {
    const int d = p.size();
    Matrix dir(static_cast<std::size_t>(d) * d, 0), und(static_cast<std::size_t>(d) * d, 0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            dir[at(d, i, j)] = p.is_directed(i, j);
            und[at(d, i, j)] = p.is_undirected(i, j);
        }
    }
    auto directed = [&](int a, int b) { return dir[at(d, a, b)] != 0; };
    auto undirected = [&](int a, int b) { return und[at(d, a, b)] != 0; };
    auto adjacent = [&](int a, int b) { return directed(a, b) || directed(b, a) || undirected(a, b); };

    // Does some rule compel a -> b for the undirected edge a - b?
    auto compelled = [&](int a, int b) {
        for (int k = 0; k < d; ++k) {
            // R1: k -> a - b, k and b non-adjacent.
            if (directed(k, a) && !adjacent(k, b)) return true;
            // R2: a -> k -> b.
            if (directed(a, k) && directed(k, b)) return true;
        }
        // R3: a - k -> b, a - l -> b, k and l non-adjacent.
        for (int k = 0; k < d; ++k) {
            if (!(undirected(a, k) && directed(k, b))) continue;
            for (int l = k + 1; l < d; ++l) {
                if (undirected(a, l) && directed(l, b) && !adjacent(k, l)) return true;
            }
        }
        // R4: a - k -> l -> b, a adjacent to l, k and b non-adjacent.
        for (int k = 0; k < d; ++k) {
            if (!undirected(a, k) || adjacent(k, b)) continue;
            for (int l = 0; l < d; ++l) {
                if (directed(k, l) && directed(l, b) && adjacent(a, l)) return true;
            }
        }
        return false;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                if (!undirected(a, b) || !compelled(a, b)) continue;
                if (has_directed_path(d, dir, b, a)) continue;  // acyclicity guard
                und[at(d, a, b)] = 0;
                und[at(d, b, a)] = 0;
                dir[at(d, a, b)] = 1;
                changed = true;
            }
        }
    }
    return Pdag::from_matrices(d, std::move(dir), std::move(und));
}

std::optional<Dag> consistent_extension(const Pdag& p) {
    const int d = p.size();
    Matrix dir(static_cast<std::size_t>(d) * d, 0), und(static_cast<std::size_t>(d) * d, 0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            dir[at(d, i, j)] = p.is_directed(i, j);
            und[at(d, i, j)] = p.is_undirected(i, j);
        }
    }
    Matrix result = dir;
    std::vector<char> alive(d, 1);
    auto adjacent = [&](int a, int b) {
        return dir[at(d, a, b)] || dir[at(d, b, a)] || und[at(d, a, b)];
    };
    for (int round = 0; round < d; ++round) {
        int pick = -1;
        for (int x = 0; x < d && pick < 0; ++x) {
            if (!alive[x]) continue;
            bool sink = true;
            for (int y = 0; y < d && sink; ++y)
                if (alive[y] && dir[at(d, x, y)]) sink = false;
            if (!sink) continue;
            bool ok = true;
            for (int y = 0; y < d && ok; ++y) {
                if (!alive[y] || !und[at(d, x, y)]) continue;
                for (int z = 0; z < d && ok; ++z) {
                    if (z == y || z == x || !alive[z]) continue;
                    if (adjacent(x, z) && !adjacent(y, z)) ok = false;
                }
            }
            if (ok) pick = x;
        }
        if (pick < 0) return std::nullopt;
        for (int y = 0; y < d; ++y) {
            if (alive[y] && und[at(d, pick, y)]) result[at(d, y, pick)] = 1;
        }
        alive[pick] = 0;
        for (int y = 0; y < d; ++y) {
            dir[at(d, pick, y)] = dir[at(d, y, pick)] = 0;
            und[at(d, pick, y)] = und[at(d, y, pick)] = 0;
        }
    }
    return Dag::from_matrix(d, std::move(result));
}

Pdag meek_closure(const Pdag& p) {
    if (!consistent_extension(p)) {
        fail(ErrorKind::ConstraintViolation, "meek_closure: orientations admit no consistent DAG extension");
    }
    return apply_meek_rules(p);
}

RelaxedClosure meek_closure_relaxed(const Skeleton& skeleton, std::vector<Edge> directed) {
    const int d = skeleton.size();
    RelaxedClosure out;

    // Accept edges greedily in priority order; skip those off-skeleton,
    // opposing an accepted edge, or closing a cycle.
    Matrix dir(static_cast<std::size_t>(d) * d, 0);
    std::vector<Edge> accepted;
    for (const Edge& e : directed) {
        if (e.from < 0 || e.from >= d || e.to < 0 || e.to >= d || !skeleton.adjacent(e.from, e.to) ||
            dir[at(d, e.to, e.from)] || has_directed_path(d, dir, e.to, e.from)) {
            out.dropped.push_back(e);
            continue;
        }
        if (dir[at(d, e.from, e.to)]) continue;
        dir[at(d, e.from, e.to)] = 1;
        accepted.push_back(e);
    }

    while (true) {
        Matrix dm(static_cast<std::size_t>(d) * d, 0);
        Matrix um = skeleton.matrix();
        for (const Edge& e : accepted) {
            dm[at(d, e.from, e.to)] = 1;
            um[at(d, e.from, e.to)] = 0;
            um[at(d, e.to, e.from)] = 0;
        }
        const Pdag oriented = Pdag::from_matrices(d, std::move(dm), std::move(um));
        if (consistent_extension(oriented)) {
            out.pdag = apply_meek_rules(oriented);
            return out;
        }
        if (accepted.empty()) {
            out.pdag = apply_meek_rules(oriented);
            out.unchecked = true;
            return out;
        }
        out.dropped.push_back(accepted.back());
        accepted.pop_back();
    }
}

std::vector<Dag> enumerate_mec(const Dag& g) {
    const int d = g.size();
    if (d > kMaxMecEnumerationSize) {
        fail(ErrorKind::Capacity, "enumerate_mec: at most " + std::to_string(kMaxMecEnumerationSize) + " vertices");
    }
    const Skeleton s = skeleton_of(g);
    const std::vector<Pair> edges = s.edges();
    const std::vector<UnshieldedTriple> uts = unshielded_triples(s);
    const std::vector<VStructure> target = vstructures_of(g);

    auto edge_index = [&](int i, int j) {
        const Pair p = make_pair_sorted(i, j);
        return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), p) - edges.begin());
    };
    // For each edge, the UTs whose later-assigned arm is this edge.
    struct UtCheck {
        int center, a, b;
        bool is_v;
    };
    std::vector<std::vector<UtCheck>> checks(edges.size());
    for (const auto& ut : uts) {
        const int ea = edge_index(ut.a, ut.center);
        const int eb = edge_index(ut.b, ut.center);
        const bool is_v = std::binary_search(target.begin(), target.end(), ut);
        checks[std::max(ea, eb)].push_back({ut.center, ut.a, ut.b, is_v});
    }

    std::vector<Dag> members;
    Matrix dir(static_cast<std::size_t>(d) * d, 0);
    auto recurse = [&](auto&& self, std::size_t k) -> void {
        if (k == edges.size()) {
            members.push_back(Dag::from_matrix(d, dir));
            return;
        }
        for (int orientation = 0; orientation < 2; ++orientation) {
            const int from = orientation == 0 ? edges[k].first : edges[k].second;
            const int to = orientation == 0 ? edges[k].second : edges[k].first;
            if (has_directed_path(d, dir, to, from)) continue;
            dir[at(d, from, to)] = 1;
            bool ok = true;
            for (const UtCheck& c : checks[k]) {
                const bool collider = dir[at(d, c.a, c.center)] && dir[at(d, c.b, c.center)];
                if (collider != c.is_v) {
                    ok = false;
                    break;
                }
            }
            if (ok) self(self, k + 1);
            dir[at(d, from, to)] = 0;
        }
    };
    recurse(recurse, 0);
    return members;
}

}  // namespace sicl
