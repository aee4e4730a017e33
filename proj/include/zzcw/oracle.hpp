#pragma once

// Dense transition matrices for small n and exhaustive checks of the chain
// identities against them. Independent constructions live here too so the
// implementation in chains.hpp can be compared against a second derivation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "zzcw/chains.hpp"
#include "zzcw/curie_weiss.hpp"

namespace zzcw {

struct DenseChain {
  std::size_t size = 0;
  std::vector<double> matrix;      // row-major size x size
  std::vector<double> stationary;  // claimed invariant vector

  DenseChain() = default;
  explicit DenseChain(std::size_t s) : size(s), matrix(s * s, 0.0), stationary(s, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return matrix[i * size + j]; }
  double at(std::size_t i, std::size_t j) const { return matrix[i * size + j]; }
};

inline constexpr std::int64_t kOracleMaxN = 4096;

namespace detail {

inline void guard_oracle_size(const Model& model) {
  if (model.n() > kOracleMaxN) throw BudgetExceeded("dense oracle limited to n <= 4096");
}

}  // namespace detail

/// Tridiagonal MH matrix on k = 0..n, from mh_probs.
inline DenseChain build_mh_matrix(const Model& model) {
  detail::guard_oracle_size(model);
  const auto n = static_cast<std::size_t>(model.n());
  DenseChain c(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const TransitionProbs p = mh_probs({static_cast<std::int64_t>(k)}, model);
    if (k < n) c.at(k, k + 1) = p.p_plus;
    if (k > 0) c.at(k, k - 1) = p.p_minus;
    c.at(k, k) = p.hold;
  }
  c.stationary = exact_stationary_law(model).probabilities();
  return c;
}

/// Lifted matrix with the forward replica at indices 0..n and the backward one at n+1..2n+1.
inline DenseChain build_lmh_matrix(const Model& model) {
  detail::guard_oracle_size(model);
  const auto n = static_cast<std::size_t>(model.n());
  const std::size_t s = n + 1;
  DenseChain c(2 * s);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const LiftedProbs fw = lmh_probs({{kk}, +1}, model);
    const LiftedProbs bw = lmh_probs({{kk}, -1}, model);
    if (k < n) c.at(k, k + 1) = fw.advance;
    c.at(k, s + k) = fw.flip;
    c.at(k, k) = fw.hold;
    if (k > 0) c.at(s + k, s + k - 1) = bw.advance;
    c.at(s + k, k) = bw.flip;
    c.at(s + k, s + k) = bw.hold;
  }
  const auto pi = exact_stationary_law(model).probabilities();
  for (std::size_t k = 0; k < s; ++k) c.stationary[k] = c.stationary[s + k] = 0.5 * pi[k];
  return c;
}

/// MH from the generic rule Q(x,y) min(1, pi(y)Q(y,x) / (pi(x)Q(x,y))) using
/// the exact log weights, without going through the energy increment.
inline DenseChain generic_mh_matrix(const Model& model) {
  detail::guard_oracle_size(model);
  const MagnetizationLaw law = exact_stationary_law(model);
  const auto& lw = law.log_weights();
  const std::int64_t n = model.n();
  const double nd = static_cast<double>(n);
  DenseChain c(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0; k <= n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    double off = 0.0;
    if (k < n) {
      const double q = static_cast<double>(n - k) / nd;
      const double q_back = static_cast<double>(k + 1) / nd;
      const double ratio = std::exp(lw[i + 1] - lw[i] + std::log(q_back) - std::log(q));
      c.at(i, i + 1) = q * std::min(1.0, ratio);
      off += c.at(i, i + 1);
    }
    if (k > 0) {
      const double q = static_cast<double>(k) / nd;
      const double q_back = static_cast<double>(n - k + 1) / nd;
      const double ratio = std::exp(lw[i - 1] - lw[i] + std::log(q_back) - std::log(q));
      c.at(i, i - 1) = q * std::min(1.0, ratio);
      off += c.at(i, i - 1);
    }
    c.at(i, i) = 1.0 - off;
  }
  c.stationary = law.probabilities();
  return c;
}

/// Lift of a reversible P by ordering on the state index: T+ keeps the moves up,
/// T- the moves down, replica switches at the positive part of the imbalance.
inline DenseChain lift_by_ordering(const DenseChain& p) {
  const std::size_t s = p.size;
  DenseChain t(2 * s);
  for (std::size_t x = 0; x < s; ++x) {
    double plus_sum = 0.0, minus_sum = 0.0;
    for (std::size_t y = 0; y < s; ++y) {
      if (y == x) continue;
      if (y > x) {
        t.at(x, y) = p.at(x, y);
        plus_sum += p.at(x, y);
      } else {
        t.at(s + x, s + y) = p.at(x, y);
        minus_sum += p.at(x, y);
      }
    }
    const double to_minus = std::max(0.0, minus_sum - plus_sum);  // T+-(x)
    const double to_plus = std::max(0.0, plus_sum - minus_sum);   // T-+(x)
    t.at(x, s + x) = to_minus;
    t.at(s + x, x) = to_plus;
    t.at(x, x) = 1.0 - to_minus - plus_sum;
    t.at(s + x, s + x) = 1.0 - to_plus - minus_sum;
  }
  for (std::size_t x = 0; x < s; ++x) t.stationary[x] = t.stationary[s + x] = 0.5 * p.stationary[x];
  return t;
}

/// Law of the magnetization from the literal sum over {-1,1}^n with the
/// pairwise Hamiltonian, grouped by the number of +1 spins.
inline MagnetizationLaw spin_enumeration_law(std::int64_t n, double beta, double h) {
  if (n < 2 || n > 20) throw BudgetExceeded("spin enumeration limited to 2 <= n <= 20");
  const Model model(ModelParams::make(beta, h, n));
  const auto nn = static_cast<std::size_t>(n);
  std::vector<double> weight(nn + 1, 0.0);
  std::vector<int> x(nn);
  const std::uint64_t configs = std::uint64_t{1} << n;
  for (std::uint64_t bits = 0; bits < configs; ++bits) {
    int ups = 0;
    for (std::size_t i = 0; i < nn; ++i) {
      x[i] = ((bits >> i) & 1u) ? 1 : -1;
      ups += x[i] > 0;
    }
    double pair = 0.0, field = 0.0;
    for (std::size_t i = 0; i < nn; ++i) {
      field += x[i];
      for (std::size_t j = 0; j < nn; ++j) pair += x[i] * x[j];
    }
    const double hamiltonian = -pair / (2.0 * static_cast<double>(n)) - h * field;
    weight[static_cast<std::size_t>(ups)] += std::exp(-beta * hamiltonian);
  }
  std::vector<double> lw(nn + 1);
  for (std::size_t k = 0; k <= nn; ++k) lw[k] = std::log(weight[k]);
  return MagnetizationLaw(n, model.gamma(), model.m0(), std::move(lw));
}

// --- residuals ---------------------------------------------------------------

/// max |pi_i P_ij - pi_j P_ji| over all pairs.
inline double detailed_balance_residual(const DenseChain& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size; ++i)
    for (std::size_t j = i + 1; j < c.size; ++j)
      worst = std::max(worst, std::abs(c.stationary[i] * c.at(i, j) - c.stationary[j] * c.at(j, i)));
  return worst;
}

/// max over x != y of |pi(x) T+(x,y) - pi(y) T-(y,x)| for a lifted matrix with pi = 2 * marginal.
inline double skew_detailed_balance_residual(const DenseChain& t) {
  const std::size_t s = t.size / 2;
  double worst = 0.0;
  for (std::size_t x = 0; x < s; ++x)
    for (std::size_t y = 0; y < s; ++y) {
      if (x == y) continue;
      const double pix = 2.0 * t.stationary[x], piy = 2.0 * t.stationary[y];
      worst = std::max(worst, std::abs(pix * t.at(x, y) - piy * t.at(s + y, s + x)));
    }
  return worst;
}

/// max_i |(mu T)_i - mu_i|.
inline double invariance_residual(const DenseChain& c) {
  double worst = 0.0;
  for (std::size_t j = 0; j < c.size; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < c.size; ++i) v += c.stationary[i] * c.at(i, j);
    worst = std::max(worst, std::abs(v - c.stationary[j]));
  }
  return worst;
}

/// max_x |T+-(x) - T-+(x) - sum_{y != x} (T-(x,y) - T+(x,y))|.
inline double replica_switch_identity_residual(const DenseChain& t) {
  const std::size_t s = t.size / 2;
  double worst = 0.0;
  for (std::size_t x = 0; x < s; ++x) {
    double diff = 0.0;
    for (std::size_t y = 0; y < s; ++y)
      if (y != x) diff += t.at(s + x, s + y) - t.at(x, y);
    worst = std::max(worst, std::abs(t.at(x, s + x) - t.at(s + x, x) - diff));
  }
  return worst;
}

inline double row_sum_residual(const DenseChain& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.size; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c.size; ++j) s += c.at(i, j);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

inline double min_entry(const DenseChain& c) { return *std::min_element(c.matrix.begin(), c.matrix.end()); }

inline double max_abs_difference(const DenseChain& a, const DenseChain& b) {
  if (a.size != b.size) throw std::invalid_argument("matrix size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.matrix.size(); ++i) worst = std::max(worst, std::abs(a.matrix[i] - b.matrix[i]));
  return worst;
}

struct ReversibilityWitness {
  std::size_t x = 0, y = 0;
  double gap = 0.0;  // |mu_x T_xy - mu_y T_yx|
};

/// Pair with the largest probability-flux imbalance, if it exceeds the threshold.
inline std::optional<ReversibilityWitness> non_reversibility_witness(const DenseChain& c, double threshold = 1e-12) {
  ReversibilityWitness best;
  for (std::size_t i = 0; i < c.size; ++i)
    for (std::size_t j = i + 1; j < c.size; ++j) {
      const double g = std::abs(c.stationary[i] * c.at(i, j) - c.stationary[j] * c.at(j, i));
      if (g > best.gap) best = {i, j, g};
    }
  if (best.gap > threshold) return best;
  return std::nullopt;
}

/// True when the within-replica blocks T+ and T- differ somewhere off the diagonal.
inline bool replicas_differ(const DenseChain& t) {
  const std::size_t s = t.size / 2;
  for (std::size_t x = 0; x < s; ++x)
    for (std::size_t y = 0; y < s; ++y)
      if (x != y && t.at(x, y) != t.at(s + x, s + y)) return true;
  return false;
}

namespace detail {

inline std::vector<double> square(const std::vector<double>& m, std::size_t s) {
  std::vector<double> out(s * s, 0.0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t k = 0; k < s; ++k) {
      const double a = m[i * s + k];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < s; ++j) out[i * s + j] += a * m[k * s + j];
    }
  return out;
}

}  // namespace detail

/// Invariant vector by repeated squaring of the lazy matrix (I + T)/2, which has
/// the same invariant laws as T and no periodicity. Independent of c.stationary.
inline std::vector<double> power_iteration_stationary(const DenseChain& c, int max_squarings = 60, double tol = 1e-15) {
  const std::size_t s = c.size;
  std::vector<double> m(s * s);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) m[i * s + j] = 0.5 * c.at(i, j) + (i == j ? 0.5 : 0.0);
  for (int it = 0; it < max_squarings; ++it) {
    m = detail::square(m, s);
    // renormalize rows against round-off growth
    double spread = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < s; ++j) r += m[i * s + j];
      for (std::size_t j = 0; j < s; ++j) m[i * s + j] /= r;
    }
    for (std::size_t i = 1; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) spread = std::max(spread, std::abs(m[i * s + j] - m[j]));
    if (spread < tol) break;
  }
  std::vector<double> pi(s, 0.0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j) pi[j] += m[i * s + j] / static_cast<double>(s);
  return pi;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

inline constexpr std::uint64_t kMaxOracleSteps = 100'000'000;

/// ||delta_from P^t - pi||_TV for each t in the (sorted) grid, by iterated multiplication.
inline std::vector<double> tv_mixing_profile(const DenseChain& c, std::size_t from, std::vector<std::uint64_t> t_grid) {
  if (from >= c.size) throw std::out_of_range("start state outside the chain");
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw std::invalid_argument("t grid must be sorted");
  if (!t_grid.empty() && t_grid.back() * c.size > kMaxOracleSteps * 64)
    throw BudgetExceeded("tv_mixing_profile: step budget");
  std::vector<double> mu(c.size, 0.0), next(c.size);
  mu[from] = 1.0;
  std::vector<double> out;
  std::uint64_t t = 0;
  for (std::uint64_t target : t_grid) {
    for (; t < target; ++t) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < c.size; ++i) {
        if (mu[i] == 0.0) continue;
        for (std::size_t j = 0; j < c.size; ++j) next[j] += mu[i] * c.at(i, j);
      }
      mu.swap(next);
    }
    out.push_back(total_variation(mu, c.stationary));
  }
  return out;
}

/// First t with TV below the threshold, or nullopt within the step cap.
inline std::optional<std::uint64_t> mixing_steps(const DenseChain& c, std::size_t from, double threshold,
                                                 std::uint64_t max_steps = 1'000'000) {
  std::vector<double> mu(c.size, 0.0), next(c.size);
  mu[from] = 1.0;
  for (std::uint64_t t = 0; t <= max_steps; ++t) {
    if (total_variation(mu, c.stationary) < threshold) return t;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < c.size; ++i) {
      if (mu[i] == 0.0) continue;
      for (std::size_t j = 0; j < c.size; ++j) next[j] += mu[i] * c.at(i, j);
    }
    mu.swap(next);
  }
  return std::nullopt;
}

struct OracleReport {
  std::int64_t n = 0;
  double beta = 0.0, h = 0.0;
  double mh_row_sum = 0.0;
  double lmh_row_sum = 0.0;
  double min_entry = 0.0;
  double detailed_balance = 0.0;
  double skew_detailed_balance = 0.0;
  double lifted_invariance = 0.0;
  double replica_identity = 0.0;
  double generic_mh_mismatch = 0.0;      // implementation vs generic MH rule
  double ordering_lift_mismatch = 0.0;   // implementation vs lift by ordering
  bool replicas_differ = false;
  std::optional<ReversibilityWitness> witness;
  std::optional<double> spin_enumeration_mismatch;  // n <= 12
  std::optional<double> power_iteration_error;      // n <= 64

  /// Every residual below tol and, where T+ != T-, a non-reversibility witness.
  bool passed(double tol = 1e-13) const {
    bool ok = mh_row_sum < tol && lmh_row_sum < tol && min_entry >= 0.0 && detailed_balance < tol &&
              skew_detailed_balance < tol && lifted_invariance < tol && replica_identity < tol &&
              generic_mh_mismatch < tol && ordering_lift_mismatch < tol;
    if (replicas_differ && !witness) ok = false;
    if (spin_enumeration_mismatch && *spin_enumeration_mismatch > 1e-12) ok = false;
    if (power_iteration_error && *power_iteration_error > 1e-10) ok = false;
    return ok;
  }
};

inline OracleReport verify_oracle(const Model& model) {
  OracleReport r;
  r.n = model.n();
  r.beta = model.beta();
  r.h = model.h();
  const DenseChain p = build_mh_matrix(model);
  const DenseChain t = build_lmh_matrix(model);
  r.mh_row_sum = row_sum_residual(p);
  r.lmh_row_sum = row_sum_residual(t);
  r.min_entry = std::min(min_entry(p), min_entry(t));
  r.detailed_balance = detailed_balance_residual(p);
  r.skew_detailed_balance = skew_detailed_balance_residual(t);
  r.lifted_invariance = invariance_residual(t);
  r.replica_identity = replica_switch_identity_residual(t);
  r.generic_mh_mismatch = max_abs_difference(p, generic_mh_matrix(model));
  r.ordering_lift_mismatch = max_abs_difference(t, lift_by_ordering(p));
  r.replicas_differ = replicas_differ(t);
  r.witness = non_reversibility_witness(t);
  if (model.n() <= 12 && !model.params.gamma_overridden) {
    const auto enumerated = spin_enumeration_law(model.n(), model.beta(), model.h()).probabilities();
    double worst = 0.0;
    for (std::size_t k = 0; k < enumerated.size(); ++k) worst = std::max(worst, std::abs(enumerated[k] - p.stationary[k]));
    r.spin_enumeration_mismatch = worst;
  }
  if (model.n() <= 64) {
    const auto pi = power_iteration_stationary(t);
    double worst = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) worst = std::max(worst, std::abs(pi[i] - t.stationary[i]));
    r.power_iteration_error = worst;
  }
  return r;
}

}  // namespace zzcw
