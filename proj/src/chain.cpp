#include "aoi/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aoi {

namespace {

// Small uniform damping keeps the iteration convergent on periodic chains
// (deterministic arrivals with unit service produce two-cycles) without
// moving the fixed point.
constexpr double kDamping = 0.1;

std::int64_t clamped_support(const DiscreteDist& d, std::int64_t cap) {
  return std::min(d.support_max(), cap);
}

std::vector<double> hazard_table(const DiscreteDist& d, std::int64_t upto) {
  std::vector<double> h(static_cast<std::size_t>(upto) + 1, 0.0);
  for (std::int64_t k = 1; k <= upto; ++k) {
    const double t = d.tail(k - 1);
    if (t > 0.0) h[k] = std::min(1.0, d.pmf(k) / t);
  }
  return h;
}

}  // namespace

ChainModel build_preemptive(const DiscreteDist& Y, const DiscreteDist& S,
                            std::int64_t n_max) {
  if (n_max < 3) throw std::invalid_argument("n_max must be >= 3");
  ChainModel m;
  m.layout_ = ChainModel::Layout::Pre2D;
  m.discipline_ = Discipline::Preemptive;
  m.n_max_ = n_max;
  m.Y_ = Y;
  m.S_ = S;
  m.gamma_ = S.is_geometric() ? S.rate() : 1.0;

  m.idle_cap_ = clamped_support(Y, n_max);
  const std::int64_t srv_cap =
      S.support_max() == DiscreteDist::kUnboundedSupport ? n_max
                                                         : S.support_max() - 1;
  m.busy_cap_ = std::min(clamped_support(Y, n_max), srv_cap);

  m.arr_hazard_ = hazard_table(Y, n_max + 1);
  m.srv_hazard_ = hazard_table(S, n_max + 1);

  m.base_.assign(static_cast<std::size_t>(n_max) + 2, 0);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const std::int64_t idle = n <= m.idle_cap_ ? 1 : 0;
    const std::int64_t busy = std::max<std::int64_t>(
        0, std::min(n - 1, m.busy_cap_));
    m.base_[n + 1] = m.base_[n] + idle + busy;
  }
  m.num_states_ = m.base_[n_max + 1];
  m.build_incoming();
  return m;
}

ChainModel build_nonpreemptive(const DiscreteDist& Y, double gamma,
                               std::int64_t n_max) {
  if (n_max < 3) throw std::invalid_argument("n_max must be >= 3");
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("service rate must be in (0, 1]");
  }
  ChainModel m;
  m.layout_ = ChainModel::Layout::Non3D;
  m.discipline_ = Discipline::NonPreemptive;
  m.n_max_ = n_max;
  m.Y_ = Y;
  m.S_ = make_geometric(gamma);
  m.gamma_ = gamma;

  m.clock_cap_ = clamped_support(Y, n_max);
  m.arr_hazard_ = hazard_table(Y, n_max + 1);

  m.busy_prefix_.assign(static_cast<std::size_t>(n_max) + 1, 0);
  for (std::int64_t k = 1; k <= n_max; ++k) {
    m.busy_prefix_[k] = m.busy_prefix_[k - 1] + std::min(k, m.clock_cap_);
  }
  m.base_.assign(static_cast<std::size_t>(n_max) + 2, 0);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const std::int64_t idle = std::min(n, m.clock_cap_);
    m.base_[n + 1] = m.base_[n] + idle + m.busy_prefix_[n - 1];
  }
  m.num_states_ = m.base_[n_max + 1];
  m.build_incoming();
  return m;
}

ChainModel make_custom_chain(std::int64_t n_states,
                             std::vector<Transition> edges) {
  if (n_states < 1) throw std::invalid_argument("chain needs states");
  for (const Transition& t : edges) {
    if (t.src < 0 || t.src >= n_states || t.dst < 0 || t.dst >= n_states ||
        !(t.prob >= 0.0) || t.prob > 1.0) {
      throw std::invalid_argument("bad transition");
    }
  }
  ChainModel m;
  m.layout_ = ChainModel::Layout::Custom;
  m.n_max_ = n_states;
  m.num_states_ = n_states;
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Transition& a, const Transition& b) {
                     return a.src < b.src;
                   });
  m.out_edges_ = std::move(edges);
  m.out_offsets_.assign(static_cast<std::size_t>(n_states) + 1, 0);
  for (const Transition& t : m.out_edges_) m.out_offsets_[t.src + 1]++;
  for (std::int64_t s = 0; s < n_states; ++s) {
    m.out_offsets_[s + 1] += m.out_offsets_[s];
  }
  m.build_incoming();
  return m;
}

std::int64_t ChainModel::index_of(std::int64_t n, std::int64_t m,
                                  std::int64_t y) const {
  if (n < 1 || n > n_max_) return -1;
  switch (layout_) {
    case Layout::Custom:
      return (m == 0 && y == 0) ? n - 1 : -1;
    case Layout::Pre2D: {
      if (y != 0) return -1;
      if (m == 0) return n <= idle_cap_ ? base_[n] : -1;
      if (m < 1 || m > std::min(n - 1, busy_cap_)) return -1;
      return base_[n] + (n <= idle_cap_ ? 1 : 0) + (m - 1);
    }
    case Layout::Non3D: {
      const std::int64_t ci = std::min(n, clock_cap_);
      if (m == 0) {
        return (y >= 0 && y < ci) ? base_[n] + y : -1;
      }
      if (m < 1 || m >= n) return -1;
      if (y < 0 || y >= std::min(m, clock_cap_)) return -1;
      return base_[n] + ci + busy_prefix_[m - 1] + y;
    }
  }
  return -1;
}

ChainState ChainModel::state_at(std::int64_t idx) const {
  if (idx < 0 || idx >= num_states_) {
    throw std::out_of_range("state index out of range");
  }
  if (layout_ == Layout::Custom) return {idx + 1, 0, 0};
  const auto begin = base_.begin() + 1;
  const auto end = base_.begin() + n_max_ + 2;
  const auto it = std::upper_bound(begin, end, idx);
  const std::int64_t n = (it - base_.begin()) - 1;
  std::int64_t off = idx - base_[n];
  if (layout_ == Layout::Pre2D) {
    if (n <= idle_cap_) {
      if (off == 0) return {n, 0, 0};
      --off;
    }
    return {n, off + 1, 0};
  }
  const std::int64_t ci = std::min(n, clock_cap_);
  if (off < ci) return {n, 0, off};
  off -= ci;
  const auto mb = busy_prefix_.begin() + 1;
  const auto me = busy_prefix_.begin() + n;  // columns m = 1 .. n-1
  const auto mit = std::upper_bound(mb, me, off);
  const std::int64_t m = (mit - busy_prefix_.begin());
  return {n, m, off - busy_prefix_[m - 1]};
}

std::pair<std::int64_t, std::int64_t> ChainModel::age_block(
    std::int64_t n) const {
  if (n < 1 || n > n_max_) return {0, 0};
  if (layout_ == Layout::Custom) return {n - 1, n};
  return {base_[n], base_[n + 1]};
}

int ChainModel::table_moves(std::int64_t n, std::int64_t m, std::int64_t y,
                            Edge out[4]) const {
  int cnt = 0;
  const auto push = [&](std::int64_t tn, std::int64_t tm, std::int64_t ty,
                        double p) {
    if (!(p > 0.0)) return;
    const std::int64_t t = tn > n_max_ ? kLeak : index_of(tn, tm, ty);
    out[cnt++] = {t, p};
  };
  if (layout_ == Layout::Pre2D) {
    const double srv1 = srv_hazard_[1];  // P{S = 1}
    if (m == 0) {
      const double hy = arr_hazard_[n];
      push(n + 1, 0, 0, 1.0 - hy);
      push(n + 1, 1, 0, hy * (1.0 - srv1));
      push(1, 0, 0, hy * srv1);
    } else {
      const double hy = arr_hazard_[m];
      const double hs = srv_hazard_[m + 1];
      push(n + 1, m + 1, 0, (1.0 - hy) * (1.0 - hs));
      push(m + 1, 0, 0, (1.0 - hy) * hs);
      push(n + 1, 1, 0, hy * (1.0 - srv1));
      push(1, 0, 0, hy * srv1);
    }
    return cnt;
  }
  // Non3D: service is memoryless with rate gamma; the renewal clock resets
  // on every generation whether or not the packet is accepted.
  const double hy = arr_hazard_[y + 1];
  if (m == 0) {
    push(n + 1, 0, y + 1, 1.0 - hy);
    push(n + 1, 1, 0, hy * (1.0 - gamma_));
    push(1, 0, 0, hy * gamma_);
  } else {
    push(n + 1, m + 1, y + 1, (1.0 - hy) * (1.0 - gamma_));
    push(m + 1, 0, y + 1, (1.0 - hy) * gamma_);
    push(n + 1, m + 1, 0, hy * (1.0 - gamma_));
    push(m + 1, 0, 0, hy * gamma_);
  }
  return cnt;
}

int ChainModel::transitions_from(std::int64_t s, Edge out[4]) const {
  if (layout_ == Layout::Custom) {
    int cnt = 0;
    for (std::int64_t e = out_offsets_[s]; e < out_offsets_[s + 1]; ++e) {
      out[cnt++] = {out_edges_[e].dst, out_edges_[e].prob};
    }
    return cnt;
  }
  const ChainState st = state_at(s);
  return table_moves(st.n, st.m, st.y, out);
}

void ChainModel::build_incoming() {
  if (num_states_ >= std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("state space too large");
  }
  std::vector<std::int32_t> indeg(num_states_, 0);
  Edge buf[4];
  std::int64_t n_edges = 0;
  const auto visit = [&](auto&& f) {
    if (layout_ == Layout::Custom) {
      for (std::int64_t s = 0; s < num_states_; ++s) {
        const int c = transitions_from(s, buf);
        for (int i = 0; i < c; ++i) f(s, buf[i]);
      }
      return;
    }
    for (std::int64_t s = 0; s < num_states_; ++s) {
      const ChainState st = state_at(s);
      const int c = table_moves(st.n, st.m, st.y, buf);
      for (int i = 0; i < c; ++i) f(s, buf[i]);
    }
  };
  visit([&](std::int64_t, const Edge& e) {
    if (e.dst != kLeak) {
      ++indeg[e.dst];
      ++n_edges;
    }
  });
  in_offsets_.assign(static_cast<std::size_t>(num_states_) + 1, 0);
  for (std::int64_t t = 0; t < num_states_; ++t) {
    in_offsets_[t + 1] = in_offsets_[t] + indeg[t];
  }
  in_src_.assign(n_edges, 0);
  in_prob_.assign(n_edges, 0.0);
  std::vector<std::int64_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
  visit([&](std::int64_t s, const Edge& e) {
    if (e.dst == kLeak) return;
    const std::int64_t at = cursor[e.dst]++;
    in_src_[at] = static_cast<std::int32_t>(s);
    in_prob_[at] = e.prob;
  });
}

namespace {

void sweep_incoming(const ChainModel& model, const double* src, double* dst,
                    int threads) {
  const std::int64_t n = model.num_states();
  const std::int64_t* off = model.in_offsets().data();
  const std::int32_t* is = model.in_src().data();
  const double* ip = model.in_prob().data();
#ifdef _OPENMP
  if (threads != 1) {
    const int nt = threads == 0 ? omp_get_max_threads() : threads;
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::int64_t e = off[t]; e < off[t + 1]; ++e) {
        acc += src[is[e]] * ip[e];
      }
      dst[t] = acc;
    }
    return;
  }
#else
  (void)threads;
#endif
  for (std::int64_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::int64_t e = off[t]; e < off[t + 1]; ++e) {
      acc += src[is[e]] * ip[e];
    }
    dst[t] = acc;
  }
}

}  // namespace

StationaryVector stationary(const ChainModel& model, double tol,
                            std::int64_t max_iters, int threads) {
  const std::int64_t n = model.num_states();
  if (n == 0) throw std::invalid_argument("empty chain");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  StationaryVector out;
  out.probs.assign(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  bool converged = false;
  std::int64_t it = 0;
  while (it < max_iters) {
    ++it;
    sweep_incoming(model, out.probs.data(), next.data(), threads);
    double kept = 0.0;
    for (std::int64_t t = 0; t < n; ++t) kept += next[t];
    if (!(kept > 0.0)) {
      throw ConvergenceError("all probability mass leaked", out);
    }
    const double scale = (1.0 - kDamping) / kept;
    double change = 0.0;
    for (std::int64_t t = 0; t < n; ++t) {
      const double nv = next[t] * scale + kDamping * out.probs[t];
      change += std::abs(nv - out.probs[t]);
      out.probs[t] = nv;
    }
    if (change < tol) {
      converged = true;
      break;
    }
  }
  out.iterations = it;
  sweep_incoming(model, out.probs.data(), next.data(), threads);
  double kept = 0.0;
  for (std::int64_t t = 0; t < n; ++t) kept += next[t];
  out.kept_flow = kept;
  double res = 0.0;
  if (kept > 0.0) {
    for (std::int64_t t = 0; t < n; ++t) {
      res += std::abs(next[t] / kept - out.probs[t]);
    }
  }
  out.residual = res;
  if (!converged) {
    throw ConvergenceError("stationary solve hit the iteration cap", out);
  }
  return out;
}

AoIDistribution aoi_marginal(const ChainModel& model,
                             const StationaryVector& pi) {
  const std::int64_t N = model.n_max();
  TruncatedSeries marg(static_cast<int>(N));
  for (std::int64_t n = 1; n <= N; ++n) {
    const auto [lo, hi] = model.age_block(n);
    double acc = 0.0;
    for (std::int64_t s = lo; s < hi; ++s) acc += pi.probs[s];
    marg.at(static_cast<int>(n)) = acc;
  }
  const double floor =
      model.service().is_geometric() ? 1.0 - model.service().rate() : 0.0;
  AoIDistribution a = detail::finalize_aoi(marg, floor);
  const double leak = std::max(0.0, 1.0 - pi.kept_flow);
  a.tail_bound += leak;
  if (leak > 1e-9) {
    a.mean_certified = false;
    a.mean_upper = std::numeric_limits<double>::infinity();
    a.mean = a.mean_lower;
  }
  return a;
}

namespace {

double residuals_preemptive(const ChainModel& model,
                            const StationaryVector& pi) {
  const std::int64_t N = model.n_max();
  const DiscreteDist& Y = model.interarrival();
  const DiscreteDist& S = model.service();
  const auto p = [&](std::int64_t n, std::int64_t m) {
    const std::int64_t i = model.index_of(n, m);
    return i < 0 ? 0.0 : pi.probs[i];
  };
  const auto hazY = [&](std::int64_t k) { return Y.hazard(k); };

  // Column sums over the in-service age.
  std::vector<double> col(static_cast<std::size_t>(N) + 1, 0.0);
  for (std::int64_t s = 0; s < model.num_states(); ++s) {
    const ChainState st = model.state_at(s);
    if (st.m >= 1) col[st.m] += pi.probs[s];
  }

  double worst = 0.0;
  const auto note = [&](double r) { worst = std::max(worst, std::abs(r)); };
  const double srv1 = S.pmf(1);
  const double srv_tail1 = S.tail(1);

  for (std::int64_t s = 0; s < model.num_states(); ++s) {
    const ChainState st = model.state_at(s);
    const std::int64_t n = st.n;
    const std::int64_t m = st.m;
    if (m >= 2) {
      const double cy = Y.tail(m - 1) / Y.tail(m - 2);
      const double cs = S.tail(m) / S.tail(m - 1);
      note(pi.probs[s] - p(n - 1, m - 1) * cy * cs);
    } else if (m == 1 && n >= 3) {
      double gen = 0.0;
      if (model.index_of(n - 1, 0) >= 0) gen += p(n - 1, 0) * hazY(n - 1);
      for (std::int64_t j = 1; j <= n - 2; ++j) {
        if (model.index_of(n - 1, j) >= 0) gen += p(n - 1, j) * hazY(j);
      }
      note(pi.probs[s] - gen * srv_tail1);
    } else if (m == 1 && n == 2) {
      note(pi.probs[s] - p(1, 0) * Y.pmf(1) * srv_tail1);
    } else if (m == 0 && n >= 2) {
      const double cy = Y.tail(n - 1) / Y.tail(n - 2);
      double inflow = p(n - 1, 0) * cy;
      if (S.tail(n - 1) > 0.0 && col[n - 1] > 0.0) {
        inflow += col[n - 1] * cy * (S.pmf(n) / S.tail(n - 1));
      }
      note(pi.probs[s] - inflow);
    } else if (m == 0 && n == 1) {
      double gen = 0.0;
      for (std::int64_t k = 1; k <= std::min(Y.support_max(), N); ++k) {
        if (model.index_of(k, 0) >= 0) gen += p(k, 0) * hazY(k);
        if (k <= N - 1 && col[k] > 0.0) gen += col[k] * hazY(k);
      }
      note(pi.probs[s] - gen * srv1);
    }
  }
  return worst;
}

double residuals_nonpreemptive(const ChainModel& model,
                               const StationaryVector& pi) {
  const std::int64_t N = model.n_max();
  const DiscreteDist& Y = model.interarrival();
  const double g = model.gamma();
  const double q = 1.0 - g;
  const auto p = [&](std::int64_t n, std::int64_t m, std::int64_t y) {
    const std::int64_t i = model.index_of(n, m, y);
    return i < 0 ? 0.0 : pi.probs[i];
  };
  const auto hazY = [&](std::int64_t k) { return Y.hazard(k); };
  const auto survY = [&](std::int64_t y) {
    return Y.tail(y) / Y.tail(y - 1);  // P{Y > y | Y > y-1}
  };

  // col(m, j) = sum over ages of pi(., m, j); idle(j) = sum of pi(., 0, j).
  // Column offsets mirror the busy layout: column (m, j) with j < min(m, cc).
  const std::int64_t cc =
      std::min(Y.support_max(), N);  // admissible renewal-clock values
  std::vector<std::int64_t> coff(static_cast<std::size_t>(N) + 1, 0);
  for (std::int64_t m = 1; m <= N; ++m) {
    coff[m] = coff[m - 1] + std::min(m, cc);
  }
  std::vector<double> col(coff[N], 0.0);
  std::vector<double> idle(cc, 0.0);
  for (std::int64_t s = 0; s < model.num_states(); ++s) {
    const ChainState st = model.state_at(s);
    if (st.m >= 1) {
      col[coff[st.m - 1] + st.y] += pi.probs[s];
    } else {
      idle[st.y] += pi.probs[s];
    }
  }
  const auto colsum = [&](std::int64_t m, std::int64_t j) {
    if (m < 1 || m > N - 1 || j < 0 || j >= std::min(m, cc)) return 0.0;
    return col[coff[m - 1] + j];
  };

  double worst = 0.0;
  const auto note = [&](double r) { worst = std::max(worst, std::abs(r)); };
  const double py1 = Y.pmf(1);

  for (std::int64_t s = 0; s < model.num_states(); ++s) {
    const ChainState st = model.state_at(s);
    const std::int64_t n = st.n;
    const std::int64_t m = st.m;
    const std::int64_t y = st.y;
    if (m >= 1) {
      if (y >= 2) {
        note(pi.probs[s] - p(n - 1, m - 1, y - 1) * survY(y) * q);
      } else if (y == 1) {
        note(pi.probs[s] - p(n - 1, m - 1, 0) * Y.tail(1) * q);
      } else if (m >= 2) {
        double inflow = p(n - 1, m - 1, 0) * py1 * q;
        for (std::int64_t j = 1; j <= m - 2; ++j) {
          if (model.index_of(n - 1, m - 1, j) >= 0) {
            inflow += p(n - 1, m - 1, j) * hazY(j + 1) * q;
          }
        }
        note(pi.probs[s] - inflow);
      } else if (n >= 3) {  // (n, 1, 0)
        double inflow = p(n - 1, 0, 0) * py1 * q;
        for (std::int64_t j = 1; j <= n - 2; ++j) {
          if (model.index_of(n - 1, 0, j) >= 0) {
            inflow += p(n - 1, 0, j) * hazY(j + 1) * q;
          }
        }
        note(pi.probs[s] - inflow);
      } else {  // (2, 1, 0)
        note(pi.probs[s] - p(1, 0, 0) * py1 * q);
      }
    } else {
      if (y >= 2) {
        note(pi.probs[s] - (p(n - 1, 0, y - 1) * survY(y) +
                            colsum(n - 1, y - 1) * survY(y) * g));
      } else if (y == 1) {
        note(pi.probs[s] -
             (p(n - 1, 0, 0) * Y.tail(1) + colsum(n - 1, 0) * Y.tail(1) * g));
      } else if (n >= 3) {  // (n, 0, 0)
        double inflow = colsum(n - 1, 0) * py1 * g;
        for (std::int64_t j = 1; j <= n - 2; ++j) {
          if (j < cc && Y.tail(j) > 0.0) {
            inflow += colsum(n - 1, j) * hazY(j + 1) * g;
          }
        }
        note(pi.probs[s] - inflow);
      } else if (n == 2) {  // (2, 0, 0)
        note(pi.probs[s] - colsum(1, 0) * py1 * g);
      } else {  // (1, 0, 0)
        double gen = idle[0] * py1;
        for (std::int64_t j = 1; j < cc; ++j) {
          if (Y.tail(j) > 0.0) gen += idle[j] * hazY(j + 1);
        }
        note(pi.probs[s] - gen * g);
      }
    }
  }
  return worst;
}

}  // namespace

double balance_residuals(const ChainModel& model, const StationaryVector& pi) {
  if (static_cast<std::int64_t>(pi.probs.size()) != model.num_states()) {
    throw std::invalid_argument("stationary vector does not match model");
  }
  if (model.three_dimensional()) return residuals_nonpreemptive(model, pi);
  if (model.discipline() == Discipline::Preemptive &&
      model.num_states() > 0 && model.index_of(1, 0) == 0) {
    return residuals_preemptive(model, pi);
  }
  throw std::domain_error("balance equations defined for table-built chains");
}

void dump_edges(const ChainModel& model, std::ostream& os) {
  const bool threed = model.three_dimensional();
  ChainModel::Edge buf[4];
  char line[160];
  for (std::int64_t s = 0; s < model.num_states(); ++s) {
    const ChainState a = model.state_at(s);
    const int c = model.transitions_from(s, buf);
    for (int i = 0; i < c; ++i) {
      if (buf[i].dst == ChainModel::kLeak) continue;
      const ChainState b = model.state_at(buf[i].dst);
      if (threed) {
        std::snprintf(line, sizeof(line),
                      "%lld,%lld,%lld -> %lld,%lld,%lld : %.12g\n",
                      static_cast<long long>(a.n), static_cast<long long>(a.m),
                      static_cast<long long>(a.y), static_cast<long long>(b.n),
                      static_cast<long long>(b.m), static_cast<long long>(b.y),
                      buf[i].prob);
      } else {
        std::snprintf(line, sizeof(line), "%lld,%lld -> %lld,%lld : %.12g\n",
                      static_cast<long long>(a.n), static_cast<long long>(a.m),
                      static_cast<long long>(b.n), static_cast<long long>(b.m),
                      buf[i].prob);
      }
      os << line;
    }
  }
}

std::int64_t default_nmax(const DiscreteDist& Y, const DiscreteDist& S) {
  if (Y.is_geometric() && S.is_geometric()) return 400;
  const auto effective = [](const DiscreteDist& d) {
    return d.is_geometric() ? 1.0 / d.rate()
                            : static_cast<double>(d.support_max());
  };
  const double guess = 20.0 * (effective(Y) + effective(S));
  return std::max<std::int64_t>(
      50, std::min<std::int64_t>(100000, static_cast<std::int64_t>(guess) + 1));
}

}  // namespace aoi
