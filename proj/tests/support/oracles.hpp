#pragma once

// Brute-force reference implementations used only by tests.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <vector>

#include "sicl/graph.hpp"
#include "sicl/rng.hpp"

namespace sicl::testing {

// Every labelled DAG on d vertices (d <= 5 is practical).
inline std::vector<Dag> all_dags(int d) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    std::vector<Dag> out;
    std::size_t total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(d) * d);
    for (std::size_t code = 0; code < total; ++code) {
        std::fill(adj.begin(), adj.end(), 0);
        std::size_t c = code;
        for (auto [i, j] : pairs) {
            const int state = static_cast<int>(c % 3);
            c /= 3;
            if (state == 1) adj[static_cast<std::size_t>(i) * d + j] = 1;
            if (state == 2) adj[static_cast<std::size_t>(j) * d + i] = 1;
        }
        if (is_acyclic(d, adj)) out.push_back(Dag::from_matrix(d, adj));
    }
    return out;
}

inline Dag random_dag(int d, double p, Rng& rng) {
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution coin(p);
    std::vector<Edge> edges;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (coin(rng)) edges.push_back({order[a], order[b]});
    return Dag(d, edges);
}

inline bool is_descendant(const Dag& g, int from, int target) {
    std::vector<int> stack{from};
    std::vector<char> seen(g.size(), 0);
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == target) return true;
        if (seen[v]) continue;
        seen[v] = 1;
        for (int c : g.children(v)) stack.push_back(c);
    }
    return false;
}

// Enumerates every simple path in the skeleton and applies the blocking rule
// to each interior vertex.
inline bool dsep_by_paths(const Dag& g, int x, int y, const std::vector<int>& z) {
    const int d = g.size();
    std::vector<char> in_z(d, 0);
    for (int v : z) in_z[v] = 1;
    auto collider_open = [&](int v) {
        for (int w : z)
            if (is_descendant(g, v, w)) return true;
        return false;
    };
    std::vector<int> path{x};
    std::vector<char> on_path(d, 0);
    on_path[x] = 1;
    std::function<bool()> open_path_exists = [&]() -> bool {
        const int cur = path.back();
        if (cur == y) {
            for (std::size_t k = 1; k + 1 < path.size(); ++k) {
                const int a = path[k - 1], v = path[k], b = path[k + 1];
                const bool collider = g.has_edge(a, v) && g.has_edge(b, v);
                if (collider ? !collider_open(v) : in_z[v] != 0) return false;
            }
            return true;
        }
        for (int w = 0; w < d; ++w) {
            if (on_path[w] || !g.adjacent(cur, w)) continue;
            on_path[w] = 1;
            path.push_back(w);
            const bool found = open_path_exists();
            path.pop_back();
            on_path[w] = 0;
            if (found) return true;
        }
        return false;
    };
    return !open_path_exists();
}

// MEC members found by scanning every DAG on the same vertex count.
inline std::vector<Dag> mec_by_scan(const Dag& g, const std::vector<Dag>& universe) {
    const Skeleton s = skeleton_of(g);
    const auto v = vstructures_of(g);
    std::vector<Dag> out;
    for (const Dag& h : universe)
        if (skeleton_of(h) == s && vstructures_of(h) == v) out.push_back(h);
    return out;
}

// Directed edges shared by every member; other adjacencies undirected.
inline Pdag intersect_members(const std::vector<Dag>& members) {
    const int d = members.front().size();
    std::vector<Edge> dir;
    std::vector<Pair> und;
    for (const Pair& p : skeleton_of(members.front()).edges()) {
        bool fwd = true, back = true;
        for (const Dag& m : members) {
            fwd = fwd && m.has_edge(p.first, p.second);
            back = back && m.has_edge(p.second, p.first);
        }
        if (fwd)
            dir.push_back({p.first, p.second});
        else if (back)
            dir.push_back({p.second, p.first});
        else
            und.push_back(p);
    }
    return Pdag(d, dir, und);
}

inline std::vector<std::vector<int>> subsets_excluding(int d, int i, int j) {
    std::vector<int> rest;
    for (int v = 0; v < d; ++v)
        if (v != i && v != j) rest.push_back(v);
    std::vector<std::vector<int>> out;
    for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
        std::vector<int> z;
        for (std::size_t k = 0; k < rest.size(); ++k)
            if (mask & (1u << k)) z.push_back(rest[k]);
        out.push_back(z);
    }
    return out;
}

inline std::vector<int> random_permutation(int d, Rng& rng) {
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

}  // namespace sicl::testing
