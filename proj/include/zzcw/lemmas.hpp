#pragma once

// Exact suprema over the concentration window |eta| <= n^delta of the gap
// between rescaled one-step moments of MH / LMH and their limiting
// coefficients. No sampling: every number is a function of mh_probs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "zzcw/chains.hpp"
#include "zzcw/curie_weiss.hpp"

namespace zzcw {

/// Lattice indices with |eta_k| <= n^delta.
inline std::pair<std::int64_t, std::int64_t> window_indices(const Model& model, double delta) {
  const double n = static_cast<double>(model.n());
  const double bound = std::pow(n, delta);
  // eta_k = n^gamma ((2k - n)/n - m0) is increasing in k
  const double centre = 0.5 * n * (1.0 + model.m0());
  const double half = 0.5 * n * bound / model.eta_scale;
  auto lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(centre - half)) - 1);
  auto hi = std::min<std::int64_t>(model.n(), static_cast<std::int64_t>(std::ceil(centre + half)) + 1);
  while (lo <= hi && std::abs(model.eta(lo)) > bound) ++lo;
  while (hi >= lo && std::abs(model.eta(hi)) > bound) --hi;
  return {lo, hi};
}

/// sup over the window of f(k).
inline double window_sup(const Model& model, double delta, const std::function<double(std::int64_t)>& f) {
  const auto [lo, hi] = window_indices(model, delta);
  double worst = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) worst = std::max(worst, f(k));
  return worst;
}

/// n^r |p+- - p^{n,order}+-|, worst of both signs.
inline double taylor_gap_sup(const Model& model, double r, int order, double delta) {
  const double scale = std::pow(static_cast<double>(model.n()), r);
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    const TaylorProbs t = taylor_probs({k}, model, order);
    return scale * std::max(std::abs(p.p_plus - t.p_plus), std::abs(p.p_minus - t.p_minus));
  });
}

/// |n^{2(1-gamma)} E[(Y - eta)^2] - sigma^2|; the jump is 2 n^{gamma-1} so the rescaled moment is 4(p+ + p-).
inline double mh_second_moment_sup(const Model& model, double delta) {
  const double s2 = model.constants.sigma * model.constants.sigma;
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    return std::abs(4.0 * (p.p_plus + p.p_minus) - s2);
  });
}

/// n^{2(1-gamma)} E[|Y - eta|^p] = 2^p (p+ + p-) n^{(2-p)(1-gamma)}.
inline double mh_higher_moment_sup(const Model& model, double p_exp, double delta) {
  const double factor = std::pow(2.0, p_exp) * std::pow(static_cast<double>(model.n()), (2.0 - p_exp) * (1.0 - model.gamma()));
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    return factor * (p.p_plus + p.p_minus);
  });
}

/// |n E[Y - eta] + 2 l eta| with gamma = 1/2.
inline double mh_drift_linear_sup(const Model& model, double delta) {
  const double n = static_cast<double>(model.n());
  const double jump = 2.0 * std::pow(n, model.gamma() - 1.0);
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    return std::abs(n * jump * (p.p_plus - p.p_minus) + 2.0 * model.constants.l * model.eta(k));
  });
}

/// |n^{3/2} E[Y - eta] + (2/3) eta^3| with gamma = 1/4.
inline double mh_drift_cubic_sup(const Model& model, double delta) {
  const double n = static_cast<double>(model.n());
  const double rescale = std::pow(n, 1.5) * 2.0 * std::pow(n, model.gamma() - 1.0);
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    const double eta = model.eta(k);
    return std::abs(rescale * (p.p_plus - p.p_minus) + 2.0 / 3.0 * eta * eta * eta);
  });
}

/// |n^{1-gamma} E_{eta,j}[Y - eta] - a j| = |2 p_j - a|, worst over j.
inline double lmh_drift_sup(const Model& model, double delta) {
  const double a = model.constants.a;
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    return std::max(std::abs(2.0 * p.p_plus - a), std::abs(2.0 * p.p_minus - a));
  });
}

/// |n^{1-gamma} P(switch) - limit(eta, j)|, worst over j.
inline double lmh_switch_sup(const Model& model, double delta, const std::function<double(double, int)>& limit) {
  const double scale = std::pow(static_cast<double>(model.n()), 1.0 - model.gamma());
  return window_sup(model, delta, [&](std::int64_t k) {
    const TransitionProbs p = mh_probs({k}, model);
    const double eta = model.eta(k);
    double worst = 0.0;
    for (int j : {+1, -1}) {
      const double sw = lifted_from(p, j).flip;
      worst = std::max(worst, std::abs(scale * sw - limit(eta, j)));
    }
    return worst;
  });
}

inline double lmh_switch_linear_sup(const Model& model, double delta) {
  const double l = model.constants.l;
  return lmh_switch_sup(model, delta, [l](double eta, int j) { return std::max(0.0, j * l * eta); });
}

inline double lmh_switch_cubic_sup(const Model& model, double delta) {
  return lmh_switch_sup(model, delta, [](double eta, int j) { return std::max(0.0, j * eta * eta * eta / 3.0); });
}

struct LemmaRow {
  std::int64_t n = 0;
  double value = 0.0;
};

struct LemmaTable {
  std::string name;
  std::string regime;  // "supercritical" or "critical"
  double beta = 0.0, h = 0.0, delta = 0.0;
  double threshold = 0.0;  // required bound on the value at the largest n
  std::vector<LemmaRow> rows;

  bool monotone_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].value < rows[i - 1].value)) return false;
    return true;
  }
  bool final_below_threshold() const { return !rows.empty() && rows.back().value < threshold; }
  bool passed() const { return monotone_decreasing() && final_below_threshold(); }
};

struct LemmaSpec {
  std::string name;
  double beta, h, delta, threshold;
  std::function<double(const Model&, double)> sup;
};

inline LemmaTable lemma_table(const LemmaSpec& spec, const std::vector<std::int64_t>& ns) {
  LemmaTable t;
  t.name = spec.name;
  t.beta = spec.beta;
  t.h = spec.h;
  t.delta = spec.delta;
  t.threshold = spec.threshold;
  t.regime = to_string(classify_regime(spec.beta, spec.h));
  for (std::int64_t n : ns) {
    const Model model(ModelParams::make(spec.beta, spec.h, n));
    t.rows.push_back({n, spec.sup(model, spec.delta)});
  }
  return t;
}

/// The drift / second-moment / switching-rate checks, supercritical at beta = 1/2
/// with delta = 1/8 and threshold 0.05, critical at beta = 1 with delta = 1/32 and threshold 0.1.
inline std::vector<LemmaSpec> standard_lemma_specs(double beta_super = 0.5, double h_super = 0.0) {
  return {
      {"mh_second_moment", beta_super, h_super, 0.125, 0.05, mh_second_moment_sup},
      {"mh_drift_linear", beta_super, h_super, 0.125, 0.05, mh_drift_linear_sup},
      {"mh_drift_cubic", 1.0, 0.0, 1.0 / 32.0, 0.1, mh_drift_cubic_sup},
      {"lmh_drift_supercritical", beta_super, h_super, 0.125, 0.05, lmh_drift_sup},
      {"lmh_drift_critical", 1.0, 0.0, 1.0 / 32.0, 0.1, lmh_drift_sup},
      {"lmh_switch_linear", beta_super, h_super, 0.125, 0.05, lmh_switch_linear_sup},
      {"lmh_switch_cubic", 1.0, 0.0, 1.0 / 32.0, 0.1, lmh_switch_cubic_sup},
  };
}

/// Taylor-approximation gap with (r, order, delta) = (1/2, 1, 1/8); reported over its own n grid.
inline LemmaSpec taylor_lemma_spec(double beta = 0.5, double h = 0.0) {
  return {"taylor_gap_r1/2_k1", beta, h, 0.125, 1.0,
          [](const Model& m, double delta) { return taylor_gap_sup(m, 0.5, 1, delta); }};
}

}  // namespace zzcw
