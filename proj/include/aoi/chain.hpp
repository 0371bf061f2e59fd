#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/dist.hpp"

namespace aoi {

struct ChainState {
  std::int64_t n = 0;  // age of information
  std::int64_t m = 0;  // elapsed service of the packet in the server (0 idle)
  std::int64_t y = 0;  // slots since the last generation (3-D chains only)
};

struct Transition {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  double prob = 0.0;
};

// Truncated state space of the slot-level age process with its one-step
// transition structure, stored as incoming adjacency so a stationary sweep
// is one deterministic pass per target state. Probability of moves past the
// age bound is accounted as leak rather than reflected.
class ChainModel {
 public:
  static constexpr std::int64_t kLeak = -1;

  ChainModel() = default;  // empty; populate through the builders

  struct Edge {
    std::int64_t dst = 0;  // kLeak when the move crosses the age bound
    double prob = 0.0;
  };

  Discipline discipline() const { return discipline_; }
  std::int64_t n_max() const { return n_max_; }
  std::int64_t num_states() const { return num_states_; }
  bool three_dimensional() const { return layout_ == Layout::Non3D; }

  // Dense index of a state, or -1 when outside the truncated/reachable set.
  std::int64_t index_of(std::int64_t n, std::int64_t m,
                        std::int64_t y = 0) const;
  ChainState state_at(std::int64_t idx) const;

  // Outgoing moves of one state (at most 4, zero-probability rows dropped).
  int transitions_from(std::int64_t s, Edge out[4]) const;

  // Half-open index range of the states sharing age n.
  std::pair<std::int64_t, std::int64_t> age_block(std::int64_t n) const;

  const DiscreteDist& interarrival() const { return Y_; }
  const DiscreteDist& service() const { return S_; }
  double gamma() const { return gamma_; }

  // Incoming adjacency (CSR by target, sources in enumeration order).
  const std::vector<std::int64_t>& in_offsets() const { return in_offsets_; }
  const std::vector<std::int32_t>& in_src() const { return in_src_; }
  const std::vector<double>& in_prob() const { return in_prob_; }

  friend ChainModel build_preemptive(const DiscreteDist& Y,
                                     const DiscreteDist& S,
                                     std::int64_t n_max);
  friend ChainModel build_nonpreemptive(const DiscreteDist& Y, double gamma,
                                        std::int64_t n_max);
  friend ChainModel make_custom_chain(std::int64_t n_states,
                                      std::vector<Transition> edges);

 private:
  enum class Layout { Pre2D, Non3D, Custom };

  void build_incoming();
  int table_moves(std::int64_t n, std::int64_t m, std::int64_t y,
                  Edge out[4]) const;

  Layout layout_ = Layout::Custom;
  Discipline discipline_ = Discipline::Preemptive;
  std::int64_t n_max_ = 0;
  std::int64_t num_states_ = 0;
  DiscreteDist Y_;
  DiscreteDist S_;
  double gamma_ = 1.0;

  // Layout tables. base_[n] is the first index of the age-n block.
  std::vector<std::int64_t> base_;
  std::int64_t idle_cap_ = 0;    // 2-D: largest n with an idle state
  std::int64_t busy_cap_ = 0;    // 2-D: largest admissible in-service age
  std::int64_t clock_cap_ = 0;   // 3-D: number of admissible y values
  std::vector<std::int64_t> busy_prefix_;  // 3-D: sum of y-counts over m

  // Hazards indexed by elapsed value, precomputed over the support.
  std::vector<double> arr_hazard_;  // P{Y = k+1 | Y > k}
  std::vector<double> srv_hazard_;  // P{S = k+1 | S > k}

  // Custom layout: edges grouped by source.
  std::vector<std::int64_t> out_offsets_;
  std::vector<Transition> out_edges_;

  std::vector<std::int64_t> in_offsets_;
  std::vector<std::int32_t> in_src_;
  std::vector<double> in_prob_;
};

ChainModel build_preemptive(const DiscreteDist& Y, const DiscreteDist& S,
                            std::int64_t n_max);
ChainModel build_nonpreemptive(const DiscreteDist& Y, double gamma,
                               std::int64_t n_max);
// Test hook: an arbitrary chain over states labelled (i+1, 0).
ChainModel make_custom_chain(std::int64_t n_states,
                             std::vector<Transition> edges);

struct StationaryVector {
  std::vector<double> probs;
  double residual = 0.0;       // L1 gap of the renormalized one-step map
  std::int64_t iterations = 0;
  double kept_flow = 1.0;      // stationary flow staying inside the bound
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, StationaryVector iterate)
      : std::runtime_error(what), last(std::move(iterate)) {}
  StationaryVector last;
};

// Damped power iteration with per-sweep renormalization of leaked mass.
// threads = 1 is the serial reference; any other value runs the OpenMP
// kernel (0 = library default). Results are bitwise identical across thread
// counts: every target state is reduced in a fixed order.
StationaryVector stationary(const ChainModel& model, double tol,
                            std::int64_t max_iters, int threads = 1);

AoIDistribution aoi_marginal(const ChainModel& model,
                             const StationaryVector& pi);

// Largest absolute violation of the stationary balance equations, evaluated
// directly from the hazard form (independently of the transition lists).
double balance_residuals(const ChainModel& model, const StationaryVector& pi);

// Text edge list: "src_n,src_m[,src_y] -> dst_n,dst_m[,dst_y] : prob".
void dump_edges(const ChainModel& model, std::ostream& os);

// Spec default: 400 when both laws are geometric, otherwise scaled to the
// supports involved.
std::int64_t default_nmax(const DiscreteDist& Y, const DiscreteDist& S);

}  // namespace aoi
