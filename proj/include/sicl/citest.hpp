#pragma once

// Conditional-independence tests behind one interface: Fisher-Z for
// continuous data, G-square for discrete data, and a d-separation oracle.

#include <span>
#include <vector>

#include "sicl/graph.hpp"
#include "sicl/scm.hpp"

namespace sicl {

inline constexpr double kDefaultAlpha = 0.05;

struct CiResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool independent = true;  // p_value > alpha
    bool low_power = false;   // G-square: n < 5 * df, or df == 0
};

class CiTester {
   public:
    virtual ~CiTester() = default;
    virtual int num_vars() const = 0;
    // Throws sicl::Error on degenerate input or too few samples.
    virtual CiResult test(int i, int j, std::span<const int> z, double alpha = kDefaultAlpha) const = 0;
};

class FisherZTest final : public CiTester {
   public:
    explicit FisherZTest(const scm::DataSample& data);

    int num_vars() const override { return d_; }
    CiResult test(int i, int j, std::span<const int> z, double alpha = kDefaultAlpha) const override;

    // Correlation matrix, d*d row-major.
    const std::vector<double>& correlation() const { return corr_; }

   private:
    int n_ = 0;
    int d_ = 0;
    std::vector<double> corr_;
    std::vector<char> constant_;
};

class GSquareTest final : public CiTester {
   public:
    explicit GSquareTest(const scm::DataSample& data);

    int num_vars() const override { return data_.d(); }
    CiResult test(int i, int j, std::span<const int> z, double alpha = kDefaultAlpha) const override;

   private:
    scm::DataSample data_;
};

// independent <=> d-separated; p-value is exactly 0 or 1.
class DsepOracle final : public CiTester {
   public:
    explicit DsepOracle(Dag g) : g_(std::move(g)) {}

    int num_vars() const override { return g_.size(); }
    CiResult test(int i, int j, std::span<const int> z, double alpha = kDefaultAlpha) const override;

   private:
    Dag g_;
};

// Partial correlation of (i, j) given z from a correlation or covariance
// matrix (d*d row-major), via the inverse of the {i, j} + z submatrix.
double partial_correlation(std::span<const double> cov, int d, int i, int j, std::span<const int> z);

// Same quantity by the first-order recursion on the last element of z.
double partial_correlation_recursive(std::span<const double> cov, int d, int i, int j, std::span<const int> z);

double fisher_z_statistic(double r, int n, int cond_size);

}  // namespace sicl
