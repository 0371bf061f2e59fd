#include "aoi/series.hpp"

#include <cmath>
#include <stdexcept>

namespace aoi {

namespace {

void require_same_order(const TruncatedSeries& a, const TruncatedSeries& b) {
  if (a.order() != b.order()) {
    throw std::invalid_argument("series order mismatch");
  }
}

}  // namespace

TruncatedSeries::TruncatedSeries(int order) {
  if (order < 1) throw std::invalid_argument("series order must be >= 1");
  c_.assign(static_cast<std::size_t>(order) + 1, 0.0);
}

TruncatedSeries TruncatedSeries::identity(int order) {
  TruncatedSeries s(order);
  s.c_[0] = 1.0;
  return s;
}

TruncatedSeries TruncatedSeries::monomial(int order, int degree, double coeff) {
  TruncatedSeries s(order);
  if (degree < 0 || degree > order) {
    throw std::invalid_argument("monomial degree outside truncation order");
  }
  s.c_[degree] = coeff;
  return s;
}

TruncatedSeries TruncatedSeries::geometric_ratio(int order, double ratio) {
  TruncatedSeries s(order);
  double r = 1.0;
  for (int n = 0; n <= order; ++n) {
    s.c_[n] = r;
    r *= ratio;
  }
  return s;
}

TruncatedSeries add(const TruncatedSeries& a, const TruncatedSeries& b) {
  require_same_order(a, b);
  TruncatedSeries out(a.order());
  for (int n = 0; n <= a.order(); ++n) out.at(n) = a[n] + b[n];
  return out;
}

TruncatedSeries sub(const TruncatedSeries& a, const TruncatedSeries& b) {
  require_same_order(a, b);
  TruncatedSeries out(a.order());
  for (int n = 0; n <= a.order(); ++n) out.at(n) = a[n] - b[n];
  return out;
}

TruncatedSeries mul(const TruncatedSeries& a, const TruncatedSeries& b) {
  require_same_order(a, b);
  const int T = a.order();
  TruncatedSeries out(T);
  for (int i = 0; i <= T; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (int j = 0; j + i <= T; ++j) {
      out.at(i + j) += ai * b[j];
    }
  }
  return out;
}

TruncatedSeries scaled(const TruncatedSeries& a, double factor) {
  TruncatedSeries out(a.order());
  for (int n = 0; n <= a.order(); ++n) out.at(n) = a[n] * factor;
  return out;
}

TruncatedSeries reciprocal(const TruncatedSeries& a) {
  const double a0 = a[0];
  if (std::abs(a0) <= 1e-12) {
    throw std::domain_error(
        "series reciprocal requires a nonzero constant term");
  }
  const int T = a.order();
  TruncatedSeries b(T);
  b.at(0) = 1.0 / a0;
  for (int n = 1; n <= T; ++n) {
    double acc = 0.0;
    for (int k = 1; k <= n; ++k) acc += a[k] * b[n - k];
    b.at(n) = -acc / a0;
  }
  return b;
}

TruncatedSeries tail_series(const DiscreteDist& d, int shift, double scale,
                            int order) {
  if (shift != 0 && shift != 1) {
    throw std::invalid_argument("tail_series shift must be 0 or 1");
  }
  if (!(scale > 0.0) || scale > 1.0) {
    throw std::invalid_argument("tail_series scale must be in (0, 1]");
  }
  TruncatedSeries s(order);
  double sc = 1.0;
  for (int n = 1; n <= order; ++n) {
    sc *= scale;
    s.at(n) = sc * d.tail(n - shift);
  }
  return s;
}

TruncatedSeries pmf_series(const DiscreteDist& d, double scale, int order) {
  if (!(scale >= 0.0) || scale > 1.0) {
    throw std::invalid_argument("pmf_series scale must be in [0, 1]");
  }
  TruncatedSeries s(order);
  double sc = 1.0;
  const std::int64_t last =
      std::min<std::int64_t>(order, d.support_max());
  for (std::int64_t n = 1; n <= last; ++n) {
    sc *= scale;
    s.at(static_cast<int>(n)) = sc * d.pmf(n);
  }
  return s;
}

MassMean mean_and_mass(const TruncatedSeries& a) {
  MassMean mm{0.0, 0.0};
  for (int n = 0; n <= a.order(); ++n) {
    mm.mass += a[n];
    mm.mean += static_cast<double>(n) * a[n];
  }
  return mm;
}

}  // namespace aoi
