#include "aoi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aoi {

namespace {

// Inverse-transform sampler; the explicit-cdf table is built once per run.
class Sampler {
 public:
  explicit Sampler(const DiscreteDist& d) : kind_(d.kind()) {
    switch (kind_) {
      case DistKind::Geometric:
        rate_ = d.rate();
        log_q_ = rate_ < 1.0 ? std::log1p(-rate_) : 0.0;
        break;
      case DistKind::Deterministic:
        period_ = d.support_max();
        break;
      case DistKind::Explicit: {
        cdf_.reserve(d.support_max());
        double acc = 0.0;
        for (std::int64_t j = 1; j <= d.support_max(); ++j) {
          acc += d.pmf(j);
          cdf_.push_back(acc);
        }
        cdf_.back() = 1.0;
        break;
      }
    }
  }

  std::int64_t operator()(SplitMix64& rng) const {
    switch (kind_) {
      case DistKind::Geometric: {
        if (rate_ >= 1.0) return 1;
        const double u = rng.next_unit();
        return 1 + static_cast<std::int64_t>(std::log1p(-u) / log_q_);
      }
      case DistKind::Deterministic:
        return period_;
      case DistKind::Explicit: {
        const double u = rng.next_unit();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return 1 + (it - cdf_.begin());
      }
    }
    return 1;
  }

 private:
  DistKind kind_;
  double rate_ = 1.0;
  double log_q_ = 0.0;
  std::int64_t period_ = 1;
  std::vector<double> cdf_;
};

struct SlotEvents {
  bool arrived = false;
  bool delivered = false;
};

// One replication's walker. The boundary state after each slot maps onto the
// chain's state vector: n = age, m = elapsed service (0 when idle), y = slots
// since the last generation.
class SlotWalker {
 public:
  SlotWalker(const SystemSpec& spec, SplitMix64 rng)
      : rng_(rng),
        sample_y_(spec.interarrival),
        sample_s_(spec.service),
        preemptive_(spec.discipline == Discipline::Preemptive) {
    until_arrival_ = sample_y_(rng_);
  }

  SlotEvents step() {
    SlotEvents ev;
    if (--until_arrival_ == 0) {
      ev.arrived = true;
      until_arrival_ = sample_y_(rng_);
      if (preemptive_ || !busy_) {
        busy_ = true;
        elapsed_ = 0;
        need_ = sample_s_(rng_);
      }
    }
    clock_ = ev.arrived ? 0 : clock_ + 1;
    if (busy_) {
      ++elapsed_;
      if (elapsed_ == need_) {
        ev.delivered = true;
        age_ = elapsed_;
        busy_ = false;
        elapsed_ = 0;
      } else {
        ++age_;
      }
    } else {
      ++age_;
    }
    return ev;
  }

  std::int64_t age() const { return age_; }
  std::int64_t service_age() const { return elapsed_; }
  std::int64_t clock() const { return clock_; }

 private:
  SplitMix64 rng_;
  Sampler sample_y_;
  Sampler sample_s_;
  bool preemptive_;
  std::int64_t until_arrival_ = 1;
  std::int64_t age_ = 1;
  std::int64_t clock_ = 0;
  bool busy_ = false;
  std::int64_t elapsed_ = 0;
  std::int64_t need_ = 0;
};

struct ReplicationStats {
  std::vector<std::uint64_t> counts;
  std::uint64_t age_sum = 0;
  std::int64_t recorded = 0;
};

ReplicationStats run_replication(const SimConfig& config, std::uint64_t rep) {
  SlotWalker walker(config.spec,
                    SplitMix64::for_replication(config.seed, rep));
  ReplicationStats st;
  st.counts.resize(64, 0);
  for (std::int64_t slot = 0; slot < config.slots; ++slot) {
    walker.step();
    if (slot < config.warmup) continue;
    const std::int64_t a = walker.age();
    if (a >= static_cast<std::int64_t>(st.counts.size())) {
      st.counts.resize(
          std::max<std::size_t>(st.counts.size() * 2, a + 1), 0);
    }
    ++st.counts[a];
    st.age_sum += static_cast<std::uint64_t>(a);
    ++st.recorded;
  }
  return st;
}

void validate(const SimConfig& config) {
  if (config.slots < 1) throw std::invalid_argument("slots must be >= 1");
  if (config.warmup < 0 || config.warmup >= config.slots) {
    throw std::invalid_argument("warmup must be in [0, slots)");
  }
  if (config.replications < 1) {
    throw std::invalid_argument("replications must be >= 1");
  }
}

}  // namespace

SimResult simulate(const SimConfig& config, int threads) {
  validate(config);
  const int reps = config.replications;
  std::vector<ReplicationStats> per_rep(reps);

#ifdef _OPENMP
  if (threads != 1) {
    const int nt = threads == 0 ? omp_get_max_threads() : threads;
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (int r = 0; r < reps; ++r) {
      per_rep[r] = run_replication(config, static_cast<std::uint64_t>(r));
    }
  } else
#else
  (void)threads;
#endif
  {
    for (int r = 0; r < reps; ++r) {
      per_rep[r] = run_replication(config, static_cast<std::uint64_t>(r));
    }
  }

  SimResult out;
  out.rng_description =
      "splitmix64; stream(seed,rep) = mix(seed ^ mix(0x9E3779B97F4A7C15 * "
      "(rep+1)))";
  std::size_t max_age = 0;
  std::uint64_t total = 0;
  for (const ReplicationStats& st : per_rep) {
    max_age = std::max(max_age, st.counts.size());
    total += static_cast<std::uint64_t>(st.recorded);
  }
  std::vector<std::uint64_t> pooled(max_age, 0);
  for (const ReplicationStats& st : per_rep) {
    for (std::size_t a = 0; a < st.counts.size(); ++a) {
      pooled[a] += st.counts[a];
    }
  }
  while (pooled.size() > 1 && pooled.back() == 0) pooled.pop_back();
  out.pmf.resize(pooled.size(), 0.0);
  for (std::size_t a = 0; a < pooled.size(); ++a) {
    out.pmf[a] = static_cast<double>(pooled[a]) / static_cast<double>(total);
  }
  out.replication_means.reserve(reps);
  double mean_acc = 0.0;
  for (const ReplicationStats& st : per_rep) {
    const double m = static_cast<double>(st.age_sum) /
                     static_cast<double>(st.recorded);
    out.replication_means.push_back(m);
    mean_acc += m;
  }
  out.pooled_mean = mean_acc / static_cast<double>(reps);
  if (reps >= 2) {
    double ss = 0.0;
    for (double m : out.replication_means) {
      const double d = m - out.pooled_mean;
      ss += d * d;
    }
    out.std_error = std::sqrt(ss / static_cast<double>(reps - 1)) /
                    std::sqrt(static_cast<double>(reps));
  }
  return out;
}

TraceStats state_trace(const SimConfig& config, std::int64_t horizon) {
  validate(config);
  if (horizon < 1 || horizon > 100000) {
    throw std::invalid_argument("trace horizon must be in [1, 1e5]");
  }
  const bool preemptive = config.spec.discipline == Discipline::Preemptive;
  SlotWalker walker(config.spec, SplitMix64::for_replication(config.seed, 0));
  TraceStats stats;
  std::int64_t n = walker.age();
  std::int64_t m = walker.service_age();
  std::int64_t y = walker.clock();
  for (std::int64_t slot = 0; slot < horizon; ++slot) {
    const SlotEvents ev = walker.step();
    std::int64_t en = 0, em = 0, ey = 0;
    bool possible = true;
    if (preemptive) {
      if (m == 0 && !ev.arrived) {
        possible = !ev.delivered;  // nothing in service to deliver
        en = n + 1;
        em = 0;
      } else if (!ev.arrived) {
        en = ev.delivered ? m + 1 : n + 1;
        em = ev.delivered ? 0 : m + 1;
      } else {
        en = ev.delivered ? 1 : n + 1;
        em = ev.delivered ? 0 : 1;
      }
    } else {
      ey = ev.arrived ? 0 : y + 1;
      if (m == 0 && !ev.arrived) {
        possible = !ev.delivered;
        en = n + 1;
        em = 0;
      } else if (m == 0) {  // arrival to an idle server
        en = ev.delivered ? 1 : n + 1;
        em = ev.delivered ? 0 : 1;
      } else {  // busy: an arrival is discarded, service continues
        en = ev.delivered ? m + 1 : n + 1;
        em = ev.delivered ? 0 : m + 1;
      }
    }
    const std::int64_t an = walker.age();
    const std::int64_t am = walker.service_age();
    const std::int64_t ay = walker.clock();
    if (!possible || an != en || am != em || (!preemptive && ay != ey)) {
      ++stats.violations;
    }
    stats.max_service_age = std::max(stats.max_service_age, am);
    stats.max_clock = std::max(stats.max_clock, ay);
    n = an;
    m = am;
    y = ay;
  }
  return stats;
}

std::int64_t state_trace_check(const SimConfig& config, std::int64_t horizon) {
  return state_trace(config, horizon).violations;
}

}  // namespace aoi
