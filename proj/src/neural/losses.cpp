#include "sicl/error.hpp"
#include "sicl/nn.hpp"

namespace sicl::nn {

std::vector<double> skeleton_labels(const Dag& g) {
    const int d = g.size();
    std::vector<double> y(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && g.adjacent(i, j)) y[static_cast<std::size_t>(i) * d + j] = 1.0;
    return y;
}

std::vector<double> vstruct_labels(const Dag& g) {
    const int d = g.size();
    std::vector<double> y(static_cast<std::size_t>(d) * d * d, 0.0);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && g.has_edge(i, k) && g.has_edge(j, k) && !g.adjacent(i, j))
                    y[(static_cast<std::size_t>(k) * d + i) * d + j] = 1.0;
    return y;
}

std::vector<double> ut_mask(const Skeleton& s) {
    const int d = s.size();
    std::vector<double> m(static_cast<std::size_t>(d) * d * d, 0.0);
    for (const UnshieldedTriple& t : unshielded_triples(s)) {
        m[(static_cast<std::size_t>(t.center) * d + t.a) * d + t.b] = 1.0;
        m[(static_cast<std::size_t>(t.center) * d + t.b) * d + t.a] = 1.0;
    }
    return m;
}

std::vector<double> off_diagonal_mask(int d) {
    std::vector<double> m(static_cast<std::size_t>(d) * d, 1.0);
    for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i) * d + i] = 0.0;
    return m;
}

namespace {

void check_square(const Tensor& t, int d, int rank, const char* what) {
    if (t->shape != Shape(rank, d)) fail(ErrorKind::InvalidInput, std::string(what) + ": shape does not match graph size");
}

MaskedLoss masked(const Tensor& t, const Dag& g, const Skeleton& ut_source, bool logits) {
    const int d = g.size();
    check_square(t, d, 3, "vstruct_loss");
    if (ut_source.size() != d) fail(ErrorKind::InvalidInput, "vstruct_loss: mask size does not match graph size");
    const auto y = vstruct_labels(g);
    const auto m = ut_mask(ut_source);
    MaskedLoss out;
    out.empty_mask = unshielded_triples(ut_source).empty();
    out.loss = logits ? bce_with_logits(t, y, m) : bce(t, y, m);
    return out;
}

}  // namespace

Tensor skeleton_loss(const Tensor& S, const Dag& g) {
    check_square(S, g.size(), 2, "skeleton_loss");
    return bce(S, skeleton_labels(g), off_diagonal_mask(g.size()));
}

Tensor skeleton_loss_logits(const Tensor& z, const Dag& g) {
    check_square(z, g.size(), 2, "skeleton_loss");
    return bce_with_logits(z, skeleton_labels(g), off_diagonal_mask(g.size()));
}

MaskedLoss vstruct_loss(const Tensor& U, const Dag& g, const Skeleton& ut_source) {
    return masked(U, g, ut_source, false);
}

MaskedLoss vstruct_loss_logits(const Tensor& z, const Dag& g, const Skeleton& ut_source) {
    return masked(z, g, ut_source, true);
}

Tensor node_edge_loss_logits(const Tensor& z, const Dag& g) {
    const int d = g.size();
    check_square(z, d, 2, "node_edge_loss");
    std::vector<double> y(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (g.has_edge(i, j)) y[static_cast<std::size_t>(i) * d + j] = 1.0;
    return bce_with_logits(z, y, off_diagonal_mask(d));
}

}  // namespace sicl::nn
