#pragma once

#include <vector>

#include "aoi/dist.hpp"

namespace aoi {

// Formal power series in z truncated at a fixed order T; coefficient of z^n
// is coeffs()[n]. All binary operations require equal orders -- implicit
// resizing hides truncation mismatches and is rejected instead.
class TruncatedSeries {
 public:
  explicit TruncatedSeries(int order);

  static TruncatedSeries identity(int order);  // 1
  static TruncatedSeries monomial(int order, int degree, double coeff = 1.0);
  // sum_n (ratio z)^n, the expansion of 1 / (1 - ratio z).
  static TruncatedSeries geometric_ratio(int order, double ratio);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int n) const { return c_[n]; }
  double& at(int n) { return c_[n]; }
  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

TruncatedSeries add(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries sub(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries mul(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries scaled(const TruncatedSeries& a, double factor);

// Multiplicative inverse up to the truncation order, by forward substitution.
// Requires a nonzero constant term.
TruncatedSeries reciprocal(const TruncatedSeries& a);

// Coefficient of z^n (n >= 1) is scale^n * tail(d, n - shift); constant term
// is 0. shift=1 gives sum_n z^n P{X > n-1} = z (1 - X(z)) / (1 - z) at
// scale=1, shift=0 gives sum_{n>=1} z^n P{X > n} = (z - X(z)) / (1 - z).
// This is how removable (1 - z)-style denominators are evaluated without
// dividing by a series whose constant term vanishes.
TruncatedSeries tail_series(const DiscreteDist& d, int shift, double scale,
                            int order);

// Coefficient of z^n (n >= 1) is scale^n * pmf(d, n): the series of
// X(scale * z).
TruncatedSeries pmf_series(const DiscreteDist& d, double scale, int order);

struct MassMean {
  double mass;
  double mean;
};

// Captured probability mass and truncated first moment of a pmf-like series.
MassMean mean_and_mass(const TruncatedSeries& a);

}  // namespace aoi
