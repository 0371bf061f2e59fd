#include "aoi/dist.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace aoi {

DiscreteDist make_geometric(double rate) {
  if (!(rate > 0.0) || rate > 1.0) {
    throw std::invalid_argument("geometric rate must be in (0, 1]");
  }
  DiscreteDist d;
  d.kind_ = DistKind::Geometric;
  d.rate_ = rate;
  d.support_max_ =
      rate < 1.0 ? DiscreteDist::kUnboundedSupport : std::int64_t{1};
  return d;
}

DiscreteDist make_deterministic(std::int64_t period) {
  if (period < 1) {
    throw std::invalid_argument("deterministic period must be >= 1");
  }
  DiscreteDist d;
  d.kind_ = DistKind::Deterministic;
  d.period_ = period;
  d.support_max_ = period;
  return d;
}

DiscreteDist make_explicit(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw std::invalid_argument("explicit weights must be nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("explicit weights must have positive mass");
  }
  DiscreteDist d;
  d.kind_ = DistKind::Explicit;
  d.probs_.reserve(weights.size());
  for (double w : weights) d.probs_.push_back(w / total);
  while (!d.probs_.empty() && d.probs_.back() == 0.0) d.probs_.pop_back();
  d.support_max_ = static_cast<std::int64_t>(d.probs_.size());
  // Backward suffix sums keep tail(n) = tail(n-1) - pmf(n) exact and
  // tail(support_max) exactly zero.
  d.tails_.assign(d.probs_.size() + 1, 0.0);
  for (std::int64_t n = d.support_max_ - 1; n >= 0; --n) {
    d.tails_[n] = d.tails_[n + 1] + d.probs_[n];
  }
  d.tails_[0] = 1.0;
  return d;
}

double DiscreteDist::pmf(std::int64_t j) const {
  if (j < 1) throw std::invalid_argument("pmf index must be >= 1");
  switch (kind_) {
    case DistKind::Geometric:
      return std::pow(1.0 - rate_, static_cast<double>(j - 1)) * rate_;
    case DistKind::Deterministic:
      return j == period_ ? 1.0 : 0.0;
    case DistKind::Explicit:
      return j <= support_max_ ? probs_[j - 1] : 0.0;
  }
  return 0.0;
}

double DiscreteDist::tail(std::int64_t n) const {
  if (n < 0) throw std::invalid_argument("tail index must be >= 0");
  switch (kind_) {
    case DistKind::Geometric:
      return std::pow(1.0 - rate_, static_cast<double>(n));
    case DistKind::Deterministic:
      return n < period_ ? 1.0 : 0.0;
    case DistKind::Explicit:
      return n < support_max_ ? tails_[n] : 0.0;
  }
  return 0.0;
}

double DiscreteDist::hazard(std::int64_t n) const {
  if (n < 1) throw std::invalid_argument("hazard index must be >= 1");
  const double surv = tail(n - 1);
  if (!(surv > 0.0)) {
    throw std::domain_error("hazard queried beyond distribution support");
  }
  if (kind_ == DistKind::Geometric) return rate_;
  const double h = pmf(n) / surv;
  return h > 1.0 ? 1.0 : h;
}

double DiscreteDist::pgf(double z) const {
  if (z < 0.0 || z > 1.0) {
    throw std::invalid_argument("pgf argument must be in [0, 1]");
  }
  switch (kind_) {
    case DistKind::Geometric:
      return rate_ * z / (1.0 - (1.0 - rate_) * z);
    case DistKind::Deterministic:
      return std::pow(z, static_cast<double>(period_));
    case DistKind::Explicit: {
      double acc = 0.0;
      for (std::int64_t j = support_max_; j >= 1; --j) {
        acc = acc * z + probs_[j - 1];
      }
      return acc * z;
    }
  }
  return 0.0;
}

double DiscreteDist::pgf_derivative(double z) const {
  if (z < 0.0 || z > 1.0) {
    throw std::invalid_argument("pgf argument must be in [0, 1]");
  }
  switch (kind_) {
    case DistKind::Geometric: {
      const double denom = 1.0 - (1.0 - rate_) * z;
      return rate_ / (denom * denom);
    }
    case DistKind::Deterministic:
      return static_cast<double>(period_) *
             std::pow(z, static_cast<double>(period_ - 1));
    case DistKind::Explicit: {
      double acc = 0.0;
      for (std::int64_t j = support_max_; j >= 1; --j) {
        acc = acc * z + static_cast<double>(j) * probs_[j - 1];
      }
      return acc;
    }
  }
  return 0.0;
}

Moments DiscreteDist::moments() const {
  switch (kind_) {
    case DistKind::Geometric:
      return {1.0 / rate_, (2.0 - rate_) / (rate_ * rate_)};
    case DistKind::Deterministic: {
      const double k = static_cast<double>(period_);
      return {k, k * k};
    }
    case DistKind::Explicit: {
      Moments m;
      for (std::int64_t j = 1; j <= support_max_; ++j) {
        const double jd = static_cast<double>(j);
        m.mean += jd * probs_[j - 1];
        m.second_moment += jd * jd * probs_[j - 1];
      }
      return m;
    }
  }
  return {};
}

double DiscreteDist::rate() const {
  if (kind_ != DistKind::Geometric) {
    throw std::domain_error("rate() requires a geometric distribution");
  }
  return rate_;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("malformed number in distribution spec: " +
                                std::string(text));
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("malformed integer in distribution spec: " +
                                std::string(text));
  }
  return value;
}

}  // namespace

std::string DiscreteDist::to_string() const {
  switch (kind_) {
    case DistKind::Geometric:
      return "geometric:" + format_double(rate_);
    case DistKind::Deterministic:
      return "deterministic:" + std::to_string(period_);
    case DistKind::Explicit: {
      std::string out = "explicit:";
      for (std::size_t i = 0; i < probs_.size(); ++i) {
        if (i) out += ',';
        out += format_double(probs_[i]);
      }
      return out;
    }
  }
  return {};
}

DiscreteDist parse_dist(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("distribution spec needs '<kind>:<params>': " +
                                spec);
  }
  const std::string_view kind(spec.data(), colon);
  const std::string_view args(spec.data() + colon + 1, spec.size() - colon - 1);
  if (kind == "geometric") return make_geometric(parse_double(args));
  if (kind == "deterministic") return make_deterministic(parse_int(args));
  if (kind == "explicit") {
    std::vector<double> weights;
    std::size_t start = 0;
    while (start <= args.size()) {
      const auto comma = args.find(',', start);
      const auto end = comma == std::string_view::npos ? args.size() : comma;
      weights.push_back(parse_double(args.substr(start, end - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return make_explicit(weights);
  }
  throw std::invalid_argument("unknown distribution kind: " +
                              std::string(kind));
}

}  // namespace aoi
