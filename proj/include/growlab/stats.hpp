#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace growlab {

/// Sum of doubles held in 2^-40 fixed point, so the total does not depend on
/// the order or grouping of additions.
class FixedSum {
 public:
  void add(double x) { acc_ += static_cast<__int128>(std::llround(std::ldexp(x, 40))); }
  void merge(const FixedSum& o) { acc_ += o.acc_; }
  double value() const { return std::ldexp(static_cast<double>(acc_), -40); }

 private:
  __int128 acc_ = 0;
};

/// Running first and second moments with order-independent totals.
struct MomentSum {
  FixedSum sum;
  FixedSum sum_sq;
  void add(double x) {
    sum.add(x);
    sum_sq.add(x * x);
  }
  void merge(const MomentSum& o) {
    sum.merge(o.sum);
    sum_sq.merge(o.sum_sq);
  }
  double mean(std::uint64_t n) const { return sum.value() / static_cast<double>(n); }
  /// Standard error of the mean.
  double std_err(std::uint64_t n) const {
    const double m = mean(n);
    const double var = sum_sq.value() / static_cast<double>(n) - m * m;
    return std::sqrt(std::max(0.0, var) / static_cast<double>(n));
  }
};

struct LinearFit {
  double slope = NAN;
  double intercept = NAN;
  double r_squared = NAN;
};

/// Ordinary least squares of y on x; NaN fields when fewer than two points
/// or zero spread in x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace growlab
