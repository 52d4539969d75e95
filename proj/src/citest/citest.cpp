#include "sicl/citest.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <string>

#include "sicl/error.hpp"

namespace sicl {

namespace {

void check_query(int d, int i, int j, std::span<const int> z) {
    if (i < 0 || i >= d || j < 0 || j >= d || i == j) fail(ErrorKind::InvalidInput, "ci test: bad variable pair");
    for (int v : z)
        if (v < 0 || v >= d || v == i || v == j) fail(ErrorKind::InvalidInput, "ci test: bad conditioning set");
}

constexpr double kSingularPivot = 1e-12;
constexpr double kRidgePivot = 1e-8;
constexpr double kRidge = 1e-10;

}  // namespace

double partial_correlation(std::span<const double> cov, int d, int i, int j, std::span<const int> z) {
    const int k = static_cast<int>(z.size()) + 2;
    std::vector<int> idx{i, j};
    idx.insert(idx.end(), z.begin(), z.end());
    Eigen::MatrixXd m(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) m(a, b) = cov[static_cast<std::size_t>(idx[a]) * d + idx[b]];

    if (!z.empty()) {
        const Eigen::MatrixXd czz = m.bottomRightCorner(k - 2, k - 2);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(czz, Eigen::EigenvaluesOnly).eigenvalues();
        const double ratio = ev.maxCoeff() > 0.0 ? ev.minCoeff() / ev.maxCoeff() : 0.0;
        if (ratio < kSingularPivot) fail(ErrorKind::DegenerateInput, "fisher_z: singular conditioning covariance");
        if (ratio < kRidgePivot) m.diagonal().array() += kRidge * m.diagonal().maxCoeff();
    }
    const Eigen::MatrixXd p = m.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const double denom = std::sqrt(p(0, 0) * p(1, 1));
    if (!(denom > 0.0) || !std::isfinite(denom)) fail(ErrorKind::DegenerateInput, "fisher_z: singular covariance");
    return std::clamp(-p(0, 1) / denom, -1.0, 1.0);
}

double partial_correlation_recursive(std::span<const double> cov, int d, int i, int j, std::span<const int> z) {
    if (z.empty()) {
        const double vi = cov[static_cast<std::size_t>(i) * d + i], vj = cov[static_cast<std::size_t>(j) * d + j];
        return cov[static_cast<std::size_t>(i) * d + j] / std::sqrt(vi * vj);
    }
    const int last = z.back();
    const auto rest = z.first(z.size() - 1);
    const double rij = partial_correlation_recursive(cov, d, i, j, rest);
    const double ril = partial_correlation_recursive(cov, d, i, last, rest);
    const double rjl = partial_correlation_recursive(cov, d, j, last, rest);
    return (rij - ril * rjl) / std::sqrt((1.0 - ril * ril) * (1.0 - rjl * rjl));
}

double fisher_z_statistic(double r, int n, int cond_size) {
    const double bound = 1.0 - 1e-15;
    r = std::clamp(r, -bound, bound);
    return std::sqrt(static_cast<double>(n - cond_size - 3)) * std::atanh(r);
}

FisherZTest::FisherZTest(const scm::DataSample& data) : n_(data.n()), d_(data.d()) {
    if (data.is_discrete()) fail(ErrorKind::InvalidInput, "fisher_z: continuous data required");
    std::vector<double> mean(d_, 0.0);
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < d_; ++c) mean[c] += data.at(r, c);
    for (auto& m : mean) m /= std::max(n_, 1);
    std::vector<double> cov(static_cast<std::size_t>(d_) * d_, 0.0);
    for (int r = 0; r < n_; ++r) {
        for (int a = 0; a < d_; ++a) {
            const double xa = data.at(r, a) - mean[a];
            for (int b = a; b < d_; ++b) cov[static_cast<std::size_t>(a) * d_ + b] += xa * (data.at(r, b) - mean[b]);
        }
    }
    constant_.assign(d_, 0);
    corr_.assign(cov.size(), 0.0);
    for (int a = 0; a < d_; ++a) {
        const double va = cov[static_cast<std::size_t>(a) * d_ + a];
        constant_[a] = !(va > 1e-300);
        for (int b = a; b < d_; ++b) {
            const double vb = cov[static_cast<std::size_t>(b) * d_ + b];
            const double c = a == b ? 1.0 : cov[static_cast<std::size_t>(a) * d_ + b] / std::sqrt(va * vb);
            corr_[static_cast<std::size_t>(a) * d_ + b] = corr_[static_cast<std::size_t>(b) * d_ + a] = c;
        }
    }
}

CiResult FisherZTest::test(int i, int j, std::span<const int> z, double alpha) const {
    check_query(d_, i, j, z);
    const int k = static_cast<int>(z.size());
    if (n_ <= k + 3) fail(ErrorKind::SampleSize, "fisher_z: need n > |Z| + 3");
    if (constant_[i] || constant_[j]) fail(ErrorKind::DegenerateInput, "fisher_z: constant column");
    for (int v : z)
        if (constant_[v]) fail(ErrorKind::DegenerateInput, "fisher_z: constant column in conditioning set");
    // Order-independent: the pair is always evaluated as (min, max).
    const double r = partial_correlation(corr_, d_, std::min(i, j), std::max(i, j), z);
    CiResult out;
    out.statistic = fisher_z_statistic(r, n_, k);
    out.p_value = std::clamp(std::erfc(std::abs(out.statistic) / std::sqrt(2.0)), 0.0, 1.0);
    out.independent = out.p_value > alpha;
    return out;
}

GSquareTest::GSquareTest(const scm::DataSample& data) : data_(data) {
    if (!data.is_discrete()) fail(ErrorKind::InvalidInput, "g_square: discrete data required");
}

CiResult GSquareTest::test(int i, int j, std::span<const int> z, double alpha) const {
    check_query(data_.d(), i, j, z);
    if (i > j) std::swap(i, j);
    const auto& arity = data_.arity();
    const int ri = arity[i], rj = arity[j];
    std::size_t strata = 1;
    for (int v : z) {
        strata *= static_cast<std::size_t>(arity[v]);
        if (strata > 50'000'000) fail(ErrorKind::Capacity, "g_square: too many conditioning strata");
    }
    const std::size_t cell = static_cast<std::size_t>(ri) * rj;
    std::vector<double> counts(strata * cell, 0.0);
    for (int r = 0; r < data_.n(); ++r) {
        std::size_t s = 0;
        for (int v : z) s = s * arity[v] + static_cast<std::size_t>(data_.at(r, v));
        counts[s * cell + static_cast<std::size_t>(data_.at(r, i)) * rj + static_cast<std::size_t>(data_.at(r, j))] += 1.0;
    }

    double g2 = 0.0;
    std::size_t nonempty = 0;
    std::vector<double> row(ri), col(rj);
    for (std::size_t s = 0; s < strata; ++s) {
        const double* c = counts.data() + s * cell;
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(col.begin(), col.end(), 0.0);
        double total = 0.0;
        for (int a = 0; a < ri; ++a)
            for (int b = 0; b < rj; ++b) {
                row[a] += c[a * rj + b];
                col[b] += c[a * rj + b];
                total += c[a * rj + b];
            }
        if (total == 0.0) continue;
        ++nonempty;
        for (int a = 0; a < ri; ++a)
            for (int b = 0; b < rj; ++b) {
                const double o = c[a * rj + b];
                if (o > 0.0) g2 += 2.0 * o * std::log(o * total / (row[a] * col[b]));
            }
    }
    const double df = static_cast<double>(ri - 1) * (rj - 1) * static_cast<double>(nonempty);
    CiResult out;
    out.statistic = std::max(g2, 0.0);
    if (df <= 0.0) {
        out.p_value = 1.0;
        out.low_power = true;
    } else {
        out.p_value = std::clamp(boost::math::gamma_q(df / 2.0, out.statistic / 2.0), 0.0, 1.0);
        out.low_power = data_.n() < 5.0 * df;
    }
    out.independent = out.p_value > alpha;
    return out;
}

CiResult DsepOracle::test(int i, int j, std::span<const int> z, double alpha) const {
    check_query(g_.size(), i, j, z);
    CiResult out;
    const bool sep = d_separated(g_, i, j, z);
    out.p_value = sep ? 1.0 : 0.0;
    out.statistic = sep ? 0.0 : 1.0;
    out.independent = out.p_value > alpha;
    return out;
}

}  // namespace sicl
