#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace aoi {

enum class DistKind { Geometric, Deterministic, Explicit };

struct Moments {
  double mean = 0.0;
  double second_moment = 0.0;
};

// Probability distribution on the positive integers {1, 2, ...}.
//
// Geometric distributions keep their closed forms and may be queried at any
// index; everything else is finite-support with probabilities normalized at
// construction, so tail(n) is exactly 0 beyond the support.
class DiscreteDist {
 public:
  static constexpr std::int64_t kUnboundedSupport =
      std::numeric_limits<std::int64_t>::max();

  DiscreteDist() = default;  // point mass at 1

  double pmf(std::int64_t j) const;
  double tail(std::int64_t n) const;  // P{X > n}; tail(0) == 1
  double cdf(std::int64_t n) const { return 1.0 - tail(n); }
  double hazard(std::int64_t n) const;  // P{X = n | X > n-1}
  double pgf(double z) const;           // sum_j z^j pmf(j), z in [0,1]
  double pgf_derivative(double z) const;
  Moments moments() const;

  DistKind kind() const { return kind_; }
  bool is_geometric() const { return kind_ == DistKind::Geometric; }
  double rate() const;  // geometric kind only

  // Largest value carrying positive mass; kUnboundedSupport for geometric
  // with rate < 1.
  std::int64_t support_max() const { return support_max_; }

  std::string to_string() const;  // inverse of parse_dist

  friend DiscreteDist make_geometric(double rate);
  friend DiscreteDist make_deterministic(std::int64_t period);
  friend DiscreteDist make_explicit(const std::vector<double>& weights);

 private:
  DistKind kind_ = DistKind::Deterministic;
  double rate_ = 1.0;            // geometric
  std::int64_t period_ = 1;      // deterministic
  std::vector<double> probs_;    // explicit; probs_[j-1] = P{X = j}
  std::vector<double> tails_;    // explicit; tails_[n] = P{X > n}
  std::int64_t support_max_ = 1;
};

DiscreteDist make_geometric(double rate);
DiscreteDist make_deterministic(std::int64_t period);
DiscreteDist make_explicit(const std::vector<double>& weights);

// Spec grammar: geometric:<rate> | deterministic:<k> | explicit:<w1,w2,...>
// Locale-independent, '.' decimal separator.
DiscreteDist parse_dist(const std::string& spec);

}  // namespace aoi
