#pragma once

// Metropolis-Hastings and Lifted Metropolis-Hastings on the magnetization
// lattice, driven by the lumped random-walk proposal of the hypercube.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "zzcw/curie_weiss.hpp"
#include "zzcw/error.hpp"
#include "zzcw/rng.hpp"

namespace zzcw {

struct LatticeState {
  std::int64_t k = 0;  // number of +1 spins
  friend bool operator==(const LatticeState&, const LatticeState&) = default;
};

struct LiftedState {
  LatticeState state;
  int j = 1;  // replica direction, +1 forward / -1 backward
  friend bool operator==(const LiftedState&, const LiftedState&) = default;
};

struct ProposalProbs {
  double q_plus = 0.0;
  double q_minus = 0.0;
};

struct TransitionProbs {
  double p_plus = 0.0;
  double p_minus = 0.0;
  double hold = 1.0;
};

struct LiftedProbs {
  double advance = 0.0;
  double flip = 0.0;  // replica switch j -> -j in place
  double hold = 1.0;
};

inline void check_state(LatticeState s, const Model& model) {
  if (s.k < 0 || s.k > model.n()) throw std::out_of_range("lattice index outside [0, n]");
}

/// Lumped hypercube walk: q+- = 1/2 (1 -+ m), m = (2k - n)/n.
///
/// At k = 0 and k = n the outward mass is exactly zero.
inline ProposalProbs rw_proposal(LatticeState s, const Model& model) {
  check_state(s, model);
  const double n = static_cast<double>(model.n());
  return {static_cast<double>(model.n() - s.k) / n, static_cast<double>(s.k) / n};
}

inline TransitionProbs mh_probs(LatticeState s, const Model& model) {
  const ProposalProbs q = rw_proposal(s, model);
  const double beta = model.beta();
  const double up = q.q_plus * std::min(1.0, std::exp(beta * phi_increment_at(s.k, +1, model)));
  const double down = q.q_minus * std::min(1.0, std::exp(beta * phi_increment_at(s.k, -1, model)));
  return {up, down, std::max(0.0, 1.0 - up - down)};
}

/// Lifted transition from the MH pair: advance along j, switch at the positive part of p_{-j} - p_j.
inline LiftedProbs lifted_from(const TransitionProbs& p, int j) {
  const double along = j > 0 ? p.p_plus : p.p_minus;
  const double against = j > 0 ? p.p_minus : p.p_plus;
  const double flip = std::max(0.0, against - along);
  return {along, flip, std::max(0.0, 1.0 - along - flip)};
}

inline LiftedProbs lmh_probs(LiftedState s, const Model& model) {
  if (s.j != 1 && s.j != -1) throw std::invalid_argument("replica direction must be +1 or -1");
  return lifted_from(mh_probs(s.state, model), s.j);
}

/// Three-way split of one uniform in the fixed order (p+, p-, hold).
inline LatticeState mh_step(LatticeState s, const TransitionProbs& p, double u) {
  if (u < p.p_plus) return {s.k + 1};
  if (u < p.p_plus + p.p_minus) return {s.k - 1};
  return s;
}

inline LatticeState mh_step(LatticeState s, const Model& model, StreamRng& rng) {
  return mh_step(s, mh_probs(s, model), rng.uniform());
}

/// Order (advance, switch, hold).
inline LiftedState lmh_step(LiftedState s, const LiftedProbs& p, double u) {
  if (u < p.advance) return {{s.state.k + s.j}, s.j};
  if (u < p.advance + p.flip) return {s.state, -s.j};
  return s;
}

inline LiftedState lmh_step(LiftedState s, const Model& model, StreamRng& rng) {
  return lmh_step(s, lmh_probs(s, model), rng.uniform());
}

struct TaylorProbs {
  double p_plus = 0.0;
  double p_minus = 0.0;
};

/// k-th order Taylor approximation of exp used in the approximate transition probabilities.
inline double taylor_exp(double x, int order) {
  double term = 1.0, sum = 1.0;
  for (int i = 1; i <= order; ++i) {
    term *= x / i;
    sum += term;
  }
  return sum;
}

/// Approximate transition probabilities p^{n,k}_+-: the acceptance drops the
/// O(1/n) term and replaces the eta-dependent exponential by its order-k polynomial.
inline TaylorProbs taylor_probs(LatticeState s, const Model& model, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("taylor order must be in {0,1,2,3}");
  check_state(s, model);
  const double beta = model.beta();
  const double eta = model.eta(s.k);
  const double scaled = std::pow(static_cast<double>(model.n()), -model.gamma()) * eta;
  const double shift = model.h() + model.m0();
  auto branch = [&](int sign) {
    const double sd = static_cast<double>(sign);
    const double proposal = 0.5 * (1.0 - sd * (model.m0() + scaled));
    double factor;
    if (shift == 0.0) {
      factor = sd * eta >= 0.0 ? 1.0 : taylor_exp(sd * 2.0 * beta * scaled, order);
    } else if (sd * shift < 0.0) {
      factor = std::exp(sd * 2.0 * beta * shift) * taylor_exp(sd * 2.0 * beta * scaled, order);
    } else {
      factor = 1.0;
    }
    return proposal * factor;
  };
  return {branch(+1), branch(-1)};
}

enum class ChainKind { MH, LMH };

inline const char* to_string(ChainKind c) { return c == ChainKind::MH ? "mh" : "lmh"; }

/// Jump-rate exponent from the regime table: MH n^1 / n^(3/2), LMH n^(1/2) / n^(3/4).
inline double default_alpha(ChainKind kind, Regime regime) {
  if (kind == ChainKind::MH) return regime == Regime::Supercritical ? 1.0 : 1.5;
  return regime == Regime::Supercritical ? 0.5 : 0.75;
}

/// Precomputed per-k transition table for fast stepping.
class MhChain {
 public:
  explicit MhChain(const Model& model, LatticeState start) : state_(start) {
    check_state(start, model);
    table_.reserve(static_cast<std::size_t>(model.n() + 1));
    for (std::int64_t k = 0; k <= model.n(); ++k) table_.push_back(mh_probs({k}, model));
  }
  LatticeState state() const { return state_; }
  int direction() const { return 0; }
  void step(StreamRng& rng) {
    state_ = mh_step(state_, table_[static_cast<std::size_t>(state_.k)], rng.uniform());
  }

 private:
  std::vector<TransitionProbs> table_;
  LatticeState state_;
};

class LmhChain {
 public:
  explicit LmhChain(const Model& model, LiftedState start) : state_(start) {
    check_state(start.state, model);
    if (start.j != 1 && start.j != -1) throw std::invalid_argument("replica direction must be +1 or -1");
    forward_.reserve(static_cast<std::size_t>(model.n() + 1));
    backward_.reserve(static_cast<std::size_t>(model.n() + 1));
    for (std::int64_t k = 0; k <= model.n(); ++k) {
      const TransitionProbs p = mh_probs({k}, model);
      forward_.push_back(lifted_from(p, +1));
      backward_.push_back(lifted_from(p, -1));
    }
  }
  LatticeState state() const { return state_.state; }
  LiftedState lifted() const { return state_; }
  int direction() const { return state_.j; }
  void step(StreamRng& rng) {
    const auto& row = (state_.j > 0 ? forward_ : backward_)[static_cast<std::size_t>(state_.state.k)];
    state_ = lmh_step(state_, row, rng.uniform());
  }

 private:
  std::vector<LiftedProbs> forward_;
  std::vector<LiftedProbs> backward_;
  LiftedState state_;
};

/// Untabulated chains for runs shorter than the table build.
class DirectMhChain {
 public:
  DirectMhChain(const Model& model, LatticeState start) : model_(&model), state_(start) { check_state(start, model); }
  LatticeState state() const { return state_; }
  int direction() const { return 0; }
  void step(StreamRng& rng) { state_ = mh_step(state_, *model_, rng); }

 private:
  const Model* model_;
  LatticeState state_;
};

class DirectLmhChain {
 public:
  DirectLmhChain(const Model& model, LiftedState start) : model_(&model), state_(start) {
    check_state(start.state, model);
    if (start.j != 1 && start.j != -1) throw std::invalid_argument("replica direction must be +1 or -1");
  }
  LatticeState state() const { return state_.state; }
  int direction() const { return state_.j; }
  void step(StreamRng& rng) { state_ = lmh_step(state_, *model_, rng); }

 private:
  const Model* model_;
  LiftedState state_;
};

/// Start from the exact stationary law; pass a precomputed law to avoid rebuilding it per replica.
struct StationaryStart {
  std::shared_ptr<const MagnetizationLaw> law;
};
struct FixedStart {
  std::int64_t k = 0;
  int j = 1;
};
using ChainStart = std::variant<StationaryStart, FixedStart>;

struct TrajectoryRecord {
  double t = 0.0;
  double eta = 0.0;
  int j = 0;  // 0 for MH
};

struct TrajectoryOptions {
  /// Record every this many steps (deterministic embedding) or on a time grid
  /// of spacing stride / n^alpha (Poissonized embedding).
  std::uint64_t record_stride = 1;
  /// Jump at the events of a rate-n^alpha Poisson process instead of t = step / n^alpha.
  bool poissonized = false;
  /// Allow alpha different from the regime table.
  bool alpha_override = false;
  std::uint64_t max_steps = std::uint64_t{1} << 40;
};

struct Trajectory {
  ChainKind kind = ChainKind::MH;
  double alpha = 1.0;
  std::uint64_t steps = 0;
  std::vector<TrajectoryRecord> records;
};

/// Draws the starting lifted state; the lattice index from the exact law, j uniform.
inline LiftedState draw_start(const ChainStart& start, const Model& model, StreamRng& rng) {
  if (const auto* fixed = std::get_if<FixedStart>(&start)) return {{fixed->k}, fixed->j};
  const auto& st = std::get<StationaryStart>(start);
  const std::int64_t k = st.law ? sample_stationary(*st.law, rng) : sample_stationary(exact_stationary_law(model), rng);
  return {{k}, rng.sign()};
}

namespace detail {

template <class Chain>
void record_run(Chain& chain, const Model& model, double rate, double t_end, std::uint64_t steps,
                const TrajectoryOptions& opt, StreamRng& rng, Trajectory& out) {
  auto push = [&](double t) { out.records.push_back({t, model.eta(chain.state().k), chain.direction()}); };
  const std::uint64_t stride = std::max<std::uint64_t>(1, opt.record_stride);
  if (!opt.poissonized) {
    push(0.0);
    for (std::uint64_t s = 1; s <= steps; ++s) {
      chain.step(rng);
      if (s % stride == 0) push(static_cast<double>(s) / rate);
    }
    out.steps = steps;
    return;
  }
  // Poissonized: exponential holding times, states read off on a time grid.
  const double dt = static_cast<double>(stride) / rate;
  double next_jump = rng.exponential() / rate;
  std::uint64_t done = 0;
  for (std::uint64_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (t > t_end) break;
    while (next_jump <= t) {
      if (++done > opt.max_steps) throw BudgetExceeded("run_trajectory: step cap exceeded");
      chain.step(rng);
      next_jump += rng.exponential() / rate;
    }
    push(t);
  }
  out.steps = done;
}

}  // namespace detail

/// Runs ceil(t_end n^alpha) steps and records (t, eta, j) with t = step / n^alpha.
inline Trajectory run_trajectory(ChainKind kind, const Model& model, double alpha, double t_end,
                                 const ChainStart& start, StreamRng& rng, const TrajectoryOptions& opt = {}) {
  if (!std::isfinite(t_end) || t_end < 0.0) throw std::invalid_argument("t_end must be finite and >= 0");
  if (!std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite");
  if (!opt.alpha_override && alpha != default_alpha(kind, model.params.regime))
    throw std::invalid_argument("alpha does not match the regime table; set alpha_override");
  const double rate = std::pow(static_cast<double>(model.n()), alpha);
  const double wanted = std::ceil(t_end * rate);
  if (wanted > static_cast<double>(opt.max_steps)) throw BudgetExceeded("run_trajectory: step cap exceeded");
  const auto steps = static_cast<std::uint64_t>(wanted);

  Trajectory out;
  out.kind = kind;
  out.alpha = alpha;
  const LiftedState s0 = draw_start(start, model, rng);
  // a per-k table only pays off once the run is longer than the lattice
  const bool tabulate = static_cast<double>(steps) > 2.0 * static_cast<double>(model.n() + 1);
  if (kind == ChainKind::MH) {
    if (tabulate) {
      MhChain chain(model, s0.state);
      detail::record_run(chain, model, rate, t_end, steps, opt, rng, out);
    } else {
      DirectMhChain chain(model, s0.state);
      detail::record_run(chain, model, rate, t_end, steps, opt, rng, out);
    }
  } else if (tabulate) {
    LmhChain chain(model, s0);
    detail::record_run(chain, model, rate, t_end, steps, opt, rng, out);
  } else {
    DirectLmhChain chain(model, s0);
    detail::record_run(chain, model, rate, t_end, steps, opt, rng, out);
  }
  return out;
}

}  // namespace zzcw
