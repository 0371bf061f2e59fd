#include "aoi/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aoi {

double AoIDistribution::prob(std::int64_t n) const {
  if (n < 0 || n >= static_cast<std::int64_t>(pmf.size())) return 0.0;
  return std::max(0.0, pmf[n]);
}

namespace detail {

TailEnvelope tail_envelope(const std::vector<double>& pmf, double decay_floor) {
  TailEnvelope env;
  const int T = static_cast<int>(pmf.size()) - 1;
  if (T < 12) return env;
  double ratio = decay_floor;
  constexpr double kTiny = 1e-300;
  for (int n = T - 9; n <= T; ++n) {
    const double prev = std::max(pmf[n - 1], 0.0);
    const double cur = std::max(pmf[n], 0.0);
    if (prev <= kTiny) {
      if (cur > kTiny) return env;  // mass reappearing: no valid envelope
      continue;
    }
    ratio = std::max(ratio, cur / prev);
  }
  if (!(ratio >= 0.0) || ratio >= 1.0 - 1e-9) return env;
  const double last = std::max(pmf[T], 0.0);
  const double g = ratio / (1.0 - ratio);
  env.ok = true;
  env.decay = ratio;
  env.mass_beyond = last * g;
  // sum_{k>=1} (T+k) ratio^k = T g + ratio/(1-ratio)^2
  env.mean_beyond = last * (static_cast<double>(T) * g + g / (1.0 - ratio));
  return env;
}

AoIDistribution finalize_aoi(const TruncatedSeries& series, double decay_floor) {
  AoIDistribution a;
  a.pmf = series.coeffs();
  a.pmf[0] = 0.0;
  double mass = 0.0;
  double mean = 0.0;
  for (std::size_t n = 1; n < a.pmf.size(); ++n) {
    mass += a.pmf[n];
    mean += static_cast<double>(n) * a.pmf[n];
  }
  a.captured_mass = mass;
  a.mean_lower = mean;
  const TailEnvelope env = tail_envelope(a.pmf, decay_floor);
  if (env.ok && std::abs(mass + env.mass_beyond - 1.0) <= 1e-6) {
    a.mean_certified = true;
    a.tail_bound = env.mass_beyond;
    a.mean_upper = mean + env.mean_beyond;
    a.mean = 0.5 * (a.mean_lower + a.mean_upper);
  } else {
    a.mean_certified = false;
    a.tail_bound = std::max(0.0, 1.0 - mass);
    a.mean_upper = std::numeric_limits<double>::infinity();
    a.mean = mean;
  }
  return a;
}

}  // namespace detail

MeanBracket certified_mean(const AoIDistribution& a, double decay) {
  if (!(decay > 0.0) || decay >= 1.0) {
    throw std::invalid_argument("decay must be in (0, 1)");
  }
  MeanBracket br;
  br.lower = a.mean_lower;
  const int T = a.max_age();
  constexpr double kTiny = 1e-300;
  bool ok = T >= 1;
  for (int n = std::max(1, T - 9); n <= T && ok; ++n) {
    const double prev = a.prob(n - 1);
    const double cur = a.prob(n);
    if (prev <= kTiny) {
      if (cur > kTiny) ok = false;
      continue;
    }
    if (cur / prev > decay + 1e-6) ok = false;
  }
  if (!ok) {
    br.upper = std::numeric_limits<double>::infinity();
    br.certified = false;
    return br;
  }
  const double last = a.prob(T);
  const double g = decay / (1.0 - decay);
  br.upper = br.lower + last * (static_cast<double>(T) * g + g / (1.0 - decay));
  br.certified = true;
  return br;
}

namespace {

// The four building-block series of the general/general pmf: coefficients
// pair an interarrival tail or mass at n with a service tail or cdf at n.
struct GGSums {
  TruncatedSeries tailY_cdfS;   // z^n : P{Y > n-1} P{S <= n}
  TruncatedSeries tailY_tailS;  // z^n : P{Y > n-1} P{S > n}
  TruncatedSeries pmfY_cdfS;    // z^n : P{Y = n} P{S <= n}
  TruncatedSeries pmfY_tailS;   // z^n : P{Y = n} P{S > n}
};

GGSums gg_sums(const DiscreteDist& Y, const DiscreteDist& S, int order) {
  GGSums g{TruncatedSeries(order), TruncatedSeries(order),
           TruncatedSeries(order), TruncatedSeries(order)};
  for (int n = 1; n <= order; ++n) {
    const double ty = Y.tail(n - 1);
    const double py = Y.pmf(n);
    const double ts = S.tail(n);
    const double cs = 1.0 - ts;
    g.tailY_cdfS.at(n) = ty * cs;
    g.tailY_tailS.at(n) = ty * ts;
    g.pmfY_cdfS.at(n) = py * cs;
    g.pmfY_tailS.at(n) = py * ts;
  }
  return g;
}

double service_decay_floor(const DiscreteDist& S) {
  return S.is_geometric() ? 1.0 - S.rate() : 0.0;
}

}  // namespace

std::pair<TruncatedSeries, TruncatedSeries> components_preemptive(
    const DiscreteDist& Y, const DiscreteDist& S, int order) {
  const GGSums g = gg_sums(Y, S, order);
  const double inv_mean = 1.0 / Y.moments().mean;
  TruncatedSeries h1 = scaled(g.tailY_cdfS, inv_mean);
  TruncatedSeries denom = sub(TruncatedSeries::identity(order), g.pmfY_tailS);
  TruncatedSeries h2 = scaled(
      mul(mul(g.tailY_tailS, g.pmfY_cdfS), reciprocal(denom)), inv_mean);
  return {std::move(h1), std::move(h2)};
}

AoIDistribution pgf_preemptive_gg(const DiscreteDist& Y, const DiscreteDist& S,
                                  int order) {
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  auto [h1, h2] = components_preemptive(Y, S, order);
  return detail::finalize_aoi(add(h1, h2), service_decay_floor(S));
}

AoIDistribution pgf_preemptive_berg(double p, const DiscreteDist& S,
                                    int order) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("arrival rate must be in (0, 1]");
  }
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  if (p == 1.0) {
    // Denominator constant term vanishes; the general form covers it.
    return pgf_preemptive_gg(make_geometric(1.0), S, order);
  }
  const double q = 1.0 - p;
  const TruncatedSeries s_scaled = pmf_series(S, q, order);  // S[(1-p) z]
  TruncatedSeries denom = scaled(s_scaled, p);               // p S[(1-p) z]
  denom.at(0) += q;                                          // + (1-p)(1-z)
  denom.at(1) -= q;
  const TruncatedSeries h = mul(scaled(s_scaled, p), reciprocal(denom));
  return detail::finalize_aoi(h, service_decay_floor(S));
}

double mean_preemptive_berg(double p, const DiscreteDist& S) {
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("arrival rate must be in (0, 1]");
  }
  if (p == 1.0) {
    throw std::domain_error(
        "mean_preemptive_berg is undefined at p = 1; use pgf_preemptive_gg");
  }
  return (1.0 - p) / (p * S.pgf(1.0 - p));
}

AoIDistribution pgf_preemptive_ggeo(const DiscreteDist& Y, double gamma,
                                    int order) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("service rate must be in (0, 1]");
  }
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  // gamma z (1 - Y(z)) / (E[Y] (1-z) (1 - (1-gamma) z)); the z (1-Y)/(1-z)
  // factor is the shift-1 tail series.
  const TruncatedSeries za = tail_series(Y, 1, 1.0, order);
  const TruncatedSeries geo = TruncatedSeries::geometric_ratio(order, 1.0 - gamma);
  const TruncatedSeries h = scaled(mul(za, geo), gamma / Y.moments().mean);
  return detail::finalize_aoi(h, 1.0 - gamma);
}

double mean_preemptive_ggeo(const DiscreteDist& Y, double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("service rate must be in (0, 1]");
  }
  const Moments m = Y.moments();
  return (1.0 - gamma) / gamma + (m.mean + m.second_moment) / (2.0 * m.mean);
}

NonPreemptiveComponents components_nonpreemptive(const DiscreteDist& Y,
                                                 double gamma, int order) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("service rate must be in (0, 1]");
  }
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  const double q = 1.0 - gamma;
  const double y_at_q = Y.pgf(q);
  if (!(1.0 - y_at_q > 0.0)) {
    throw std::domain_error("interarrival pgf must stay below 1 inside (0,1)");
  }
  const double mean_y = Y.moments().mean;

  const TruncatedSeries y_scaled = pmf_series(Y, q, order);  // Y[(1-g) z]
  const TruncatedSeries y_plain = pmf_series(Y, 1.0, order);  // Y(z)
  const TruncatedSeries inv_busy =
      reciprocal(sub(TruncatedSeries::identity(order), y_scaled));
  const TruncatedSeries z1 = TruncatedSeries::monomial(order, 1);

  // Fresh-generation groups share the factor z / (1 - Y[(1-g) z]).
  const TruncatedSeries core = mul(z1, inv_busy);
  const double pref = (1.0 - y_at_q) / mean_y;
  TruncatedSeries h1 = scaled(core, pref * gamma);
  TruncatedSeries h2m = scaled(core, pref * q);

  // Busy, fresh generation: solve from
  //   (1 - Y[(1-g) z]) h2 = (1-g) Y(z) h1 + ((1-g) Y(z) - Y[(1-g) z]) h2m.
  const TruncatedSeries rhs =
      add(mul(scaled(y_plain, q), h1),
          mul(sub(scaled(y_plain, q), y_scaled), h2m));
  TruncatedSeries h2 = mul(rhs, inv_busy);

  // Idle, stale generation: both difference quotients are tail series.
  const TruncatedSeries ts1 = tail_series(Y, 0, 1.0, order);
  const TruncatedSeries tsq = tail_series(Y, 0, q, order);
  TruncatedSeries h3 = add(mul(ts1, h1), mul(sub(ts1, tsq), h2m));

  // Busy, stale generation.
  TruncatedSeries h4 = mul(tsq, h2);

  return {std::move(h1), std::move(h2), std::move(h3), std::move(h4),
          std::move(h2m)};
}

AoIDistribution pgf_nonpreemptive_ggeo(const DiscreteDist& Y, double gamma,
                                       int order) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("service rate must be in (0, 1]");
  }
  if (order < 2) throw std::invalid_argument("order must be >= 2");
  const double q = 1.0 - gamma;
  const double y_at_q = Y.pgf(q);
  if (!(1.0 - y_at_q > 0.0)) {
    throw std::domain_error("interarrival pgf must stay below 1 inside (0,1)");
  }
  const TruncatedSeries za = tail_series(Y, 1, 1.0, order);
  const TruncatedSeries inv_busy = reciprocal(
      sub(TruncatedSeries::identity(order), pmf_series(Y, q, order)));
  const TruncatedSeries geo = TruncatedSeries::geometric_ratio(order, q);
  const double pref = gamma * (1.0 - y_at_q) / Y.moments().mean;
  const TruncatedSeries h = scaled(mul(mul(za, inv_busy), geo), pref);
  return detail::finalize_aoi(h, q);
}

double mean_nonpreemptive_ggeo(const DiscreteDist& Y, double gamma) {
  if (!(gamma > 0.0) || gamma >= 1.0) {
    throw std::domain_error(
        "non-preemptive closed-form mean requires gamma in (0, 1); "
        "use the chain oracle at gamma = 1");
  }
  const double q = 1.0 - gamma;
  const double y_at_q = Y.pgf(q);
  if (!(1.0 - y_at_q > 0.0)) {
    throw std::domain_error("interarrival pgf must stay below 1 inside (0,1)");
  }
  const Moments m = Y.moments();
  const double factorial_term = (m.second_moment - m.mean) / (2.0 * m.mean);
  return q * Y.pgf_derivative(q) / (1.0 - y_at_q) + 1.0 / gamma +
         factorial_term;
}

}  // namespace aoi
