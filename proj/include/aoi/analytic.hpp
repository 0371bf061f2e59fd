#pragma once

#include <utility>
#include <vector>

#include "aoi/dist.hpp"
#include "aoi/series.hpp"

namespace aoi {

enum class Discipline { Preemptive, NonPreemptive };

// Bufferless status-updating system: interarrival law Y, service law S, and
// whether a fresh packet displaces the one in service.
struct SystemSpec {
  Discipline discipline = Discipline::Preemptive;
  DiscreteDist interarrival;
  DiscreteDist service;
};

// Truncated stationary AoI pmf plus what could be certified about the part
// beyond the truncation.
struct AoIDistribution {
  std::vector<double> pmf;  // pmf[n] = Pr{age = n}; pmf[0] is always 0
  double captured_mass = 0.0;
  double mean = 0.0;        // certified midpoint when possible, else the
                            // truncated mean (a lower bound)
  double tail_bound = 0.0;  // bound on mass beyond truncation (certified only
                            // when mean_certified)
  bool mean_certified = false;
  double mean_lower = 0.0;
  double mean_upper = 0.0;

  // Output-clamped probability (tiny negative coefficients read as 0).
  double prob(std::int64_t n) const;
  int max_age() const { return static_cast<int>(pmf.size()) - 1; }
};

struct MeanBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool certified = false;
};

// ---- preemptive discipline ----

// Stationary AoI pmf for general interarrival and general service, evaluated
// coefficient-by-coefficient to the given order.
AoIDistribution pgf_preemptive_gg(const DiscreteDist& Y, const DiscreteDist& S,
                                  int order);

// The idle-age and busy-age component series whose sum is the full pmf
// series of pgf_preemptive_gg.
std::pair<TruncatedSeries, TruncatedSeries> components_preemptive(
    const DiscreteDist& Y, const DiscreteDist& S, int order);

// Bernoulli arrivals (rate p), general service.
AoIDistribution pgf_preemptive_berg(double p, const DiscreteDist& S,
                                    int order);
double mean_preemptive_berg(double p, const DiscreteDist& S);

// General arrivals, geometric service (rate gamma).
AoIDistribution pgf_preemptive_ggeo(const DiscreteDist& Y, double gamma,
                                    int order);
double mean_preemptive_ggeo(const DiscreteDist& Y, double gamma);

// ---- non-preemptive discipline (geometric service only) ----

AoIDistribution pgf_nonpreemptive_ggeo(const DiscreteDist& Y, double gamma,
                                       int order);
double mean_nonpreemptive_ggeo(const DiscreteDist& Y, double gamma);

// Component series of the non-preemptive pmf, split by whether the server is
// busy and whether a generation happened in the current slot's past:
//   h1: idle, last generation this boundary (m = 0, y = 0)
//   h2: busy, last generation this boundary (m >= 1, y = 0)
//   h3: idle, older last generation        (m = 0, y >= 1)
//   h4: busy, older last generation        (m >= 1, y >= 1)
// h2m generates the h2 group in the in-service age instead of the AoI.
struct NonPreemptiveComponents {
  TruncatedSeries h1, h2, h3, h4, h2m;
};

NonPreemptiveComponents components_nonpreemptive(const DiscreteDist& Y,
                                                 double gamma, int order);

// ---- certification ----

// Bracket the true mean of a pmf whose tail is eventually dominated by a
// geometric envelope with the given decay ratio. The ratio claim is checked
// against the last ten coefficients; on failure the truncated mean is
// reported uncertified.
MeanBracket certified_mean(const AoIDistribution& a, double decay);

namespace detail {

// Shared tail-envelope estimator: decay floor is max'ed with the empirical
// last-coefficient ratios before bounding the residual mass and mean.
struct TailEnvelope {
  bool ok = false;
  double decay = 1.0;
  double mass_beyond = 0.0;
  double mean_beyond = 0.0;
};

TailEnvelope tail_envelope(const std::vector<double>& pmf, double decay_floor);

AoIDistribution finalize_aoi(const TruncatedSeries& series, double decay_floor);

}  // namespace detail

}  // namespace aoi
