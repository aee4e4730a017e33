#pragma once

// Analytic objects of the Curie-Weiss model on the scaled magnetization
// lattice: parameters, the fixed point m0, the energy Phi^n, the exact
// finite-n stationary law and the n -> infinity limiting laws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "zzcw/error.hpp"
#include "zzcw/rng.hpp"

namespace zzcw {

enum class Regime { Supercritical, Critical };

inline const char* to_string(Regime r) {
  return r == Regime::Supercritical ? "supercritical" : "critical";
}

/// Spatial scaling exponent attached to each regime.
inline double regime_gamma(Regime r) { return r == Regime::Supercritical ? 0.5 : 0.25; }

/// Classifies (beta, h); throws RegimeError outside beta < 1 or (beta, h) = (1, 0).
inline Regime classify_regime(double beta, double h) {
  if (!std::isfinite(beta) || !std::isfinite(h)) throw RegimeError("beta and h must be finite");
  if (beta < 0.0) throw RegimeError("beta must be >= 0");
  if (beta < 1.0) return Regime::Supercritical;
  if (beta == 1.0 && h == 0.0) return Regime::Critical;
  if (beta == 1.0) throw RegimeError("beta = 1 is supported only with h = 0");
  throw RegimeError("beta > 1 (subcritical regime) is not supported");
}

struct ModelParams {
  double beta = 0.0;
  double h = 0.0;
  std::int64_t n = 2;
  double gamma = 0.5;
  Regime regime = Regime::Supercritical;
  bool gamma_overridden = false;

  /// Parameters with gamma derived from the regime.
  static ModelParams make(double beta, double h, std::int64_t n) {
    const Regime r = classify_regime(beta, h);
    check_n(n);
    return ModelParams{beta, h, n, regime_gamma(r), r, false};
  }

  /// Exploration only: keeps the (beta, h) regime check but accepts any gamma in (0, 1).
  static ModelParams with_gamma_override(double beta, double h, std::int64_t n, double gamma) {
    const Regime r = classify_regime(beta, h);
    check_n(n);
    if (!(gamma > 0.0 && gamma < 1.0)) throw RegimeError("gamma must lie in (0, 1)");
    return ModelParams{beta, h, n, gamma, r, gamma != regime_gamma(r)};
  }

 private:
  static void check_n(std::int64_t n) {
    if (n < 2) throw RegimeError("n must be >= 2");
  }
};

/// Unique root of m = tanh(beta (m + h)) on (-1, 1).
///
/// Bisection on the monotone bracket followed by Newton polishing. Exactly 0
/// when beta = 0 or h = 0.
inline double solve_m0(double beta, double h) {
  classify_regime(beta, h);
  if (beta == 0.0 || h == 0.0) return 0.0;
  auto f = [&](double m) { return m - std::tanh(beta * (m + h)); };
  double lo = -1.0, hi = 1.0;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) lo = mid;
    else hi = mid;
  }
  double m = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double t = std::tanh(beta * (m + h));
    const double d = 1.0 - beta * (1.0 - t * t);
    const double next = m - (m - t) / d;
    if (!(next > -1.0 && next < 1.0)) break;
    m = next;
  }
  return m;
}

struct DerivedConstants {
  double m0 = 0.0;
  std::optional<double> v;  // limiting variance, supercritical only
  double sigma = 0.0;
  double l = 0.0;
  double a = 0.0;
};

inline DerivedConstants derive_constants(const ModelParams& p) {
  DerivedConstants c;
  c.m0 = solve_m0(p.beta, p.h);
  const double am = std::abs(c.m0);
  c.sigma = 2.0 * std::sqrt(1.0 - am);
  c.l = 1.0 / (1.0 + am) - p.beta * (1.0 - am);
  c.a = 1.0 - am;
  if (p.regime == Regime::Supercritical) {
    const double s = 1.0 - c.m0 * c.m0;
    c.v = s / (1.0 - p.beta * s);
  }
  return c;
}

/// Immutable bundle of parameters and derived constants, shared read-only.
struct Model {
  ModelParams params;
  DerivedConstants constants;
  double eta_scale = 1.0;  // n^gamma

  explicit Model(const ModelParams& p)
      : params(p), constants(derive_constants(p)), eta_scale(std::pow(static_cast<double>(p.n), p.gamma)) {}

  std::int64_t n() const { return params.n; }
  double beta() const { return params.beta; }
  double h() const { return params.h; }
  double gamma() const { return params.gamma; }
  double m0() const { return constants.m0; }

  /// Magnetization (2k - n)/n of the lattice point with k up-spins.
  double magnetization(std::int64_t k) const {
    return static_cast<double>(2 * k - params.n) / static_cast<double>(params.n);
  }
  double eta(std::int64_t k) const { return eta_scale * (magnetization(k) - constants.m0); }
  /// Lattice spacing 2 n^(gamma - 1).
  double spacing() const { return 2.0 * eta_scale / static_cast<double>(params.n); }
};

/// Phi^n(eta) = -1/2 n^(1-2 gamma) eta^2 - n^(1-gamma) (m0 + h) eta.
inline double phi(double eta, const Model& model) {
  const double n = static_cast<double>(model.n());
  const double g = model.gamma();
  return -0.5 * std::pow(n, 1.0 - 2.0 * g) * eta * eta - std::pow(n, 1.0 - g) * (model.m0() + model.h()) * eta;
}

/// Closed form of Phi^n(eta) - Phi^n(eta + direction * 2 n^(gamma-1)).
inline double phi_increment(double eta, int direction, const Model& model) {
  const double n = static_cast<double>(model.n());
  const double d = static_cast<double>(direction);
  return d * 2.0 * std::pow(n, -model.gamma()) * eta + d * 2.0 * (model.m0() + model.h()) + 2.0 / n;
}

/// Same increment at lattice point k, using m0 + n^-gamma eta = (2k - n)/n.
inline double phi_increment_at(std::int64_t k, int direction, const Model& model) {
  const double d = static_cast<double>(direction);
  return d * 2.0 * (model.magnetization(k) + model.h()) + 2.0 / static_cast<double>(model.n());
}

/// Exact stationary law of eta on the n+1 lattice points, indexed by k.
class MagnetizationLaw {
 public:
  MagnetizationLaw(std::int64_t n, double gamma, double m0, std::vector<double> log_weights)
      : n_(n), gamma_(gamma), m0_(m0), log_weights_(std::move(log_weights)) {
    const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
    probabilities_.resize(log_weights_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < log_weights_.size(); ++k) {
      probabilities_[k] = std::exp(log_weights_[k] - top);
      total += probabilities_[k];
    }
    log_normalizer_ = top + std::log(total);
    cumulative_.resize(probabilities_.size());
    double run = 0.0;
    for (std::size_t k = 0; k < probabilities_.size(); ++k) {
      probabilities_[k] /= total;
      run += probabilities_[k];
      cumulative_[k] = run;
    }
  }

  std::int64_t n() const { return n_; }
  std::size_t size() const { return probabilities_.size(); }
  double gamma() const { return gamma_; }
  double m0() const { return m0_; }
  double eta(std::int64_t k) const {
    const double n = static_cast<double>(n_);
    return std::pow(n, gamma_) * (static_cast<double>(2 * k - n_) / n - m0_);
  }
  std::vector<double> support() const {
    std::vector<double> s(size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = eta(static_cast<std::int64_t>(k));
    return s;
  }
  const std::vector<double>& log_weights() const { return log_weights_; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  const std::vector<double>& cumulative() const { return cumulative_; }
  double log_normalizer() const { return log_normalizer_; }

  /// Mass on lattice points with |eta| > bound.
  double mass_outside(double bound) const {
    double out = 0.0;
    for (std::size_t k = 0; k < size(); ++k)
      if (std::abs(eta(static_cast<std::int64_t>(k))) > bound) out += probabilities_[k];
    return out;
  }

 private:
  std::int64_t n_;
  double gamma_;
  double m0_;
  std::vector<double> log_weights_;
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  double log_normalizer_ = 0.0;
};

/// pi(k) proportional to C(n,k) exp(beta n (m^2/2 + h m)), m = (2k - n)/n.
inline MagnetizationLaw exact_stationary_law(const Model& model) {
  const std::int64_t n = model.n();
  if (n > 10'000'000) throw BudgetExceeded("exact_stationary_law: n above 1e7");
  const double nd = static_cast<double>(n);
  const double log_n_fact = std::lgamma(nd + 1.0);
  std::vector<double> lw(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    const double m = model.magnetization(k);
    lw[static_cast<std::size_t>(k)] = log_n_fact - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                                      model.beta() * nd * (0.5 * m * m + model.h() * m);
  }
  return MagnetizationLaw(n, model.gamma(), model.m0(), std::move(lw));
}

/// Inverse-CDF draw of a lattice index k from the law.
inline std::int64_t sample_stationary(const MagnetizationLaw& law, StreamRng& rng) {
  const auto& cdf = law.cumulative();
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::int64_t>(it - cdf.begin());
}

namespace detail {

/// P(Y <= y) for density proportional to exp(-c y^4).
inline double quartic_cdf(double y, double c) {
  if (y == 0.0) return 0.5;
  const double p = boost::math::gamma_p(0.25, c * y * y * y * y);
  return y > 0.0 ? 0.5 + 0.5 * p : 0.5 - 0.5 * p;
}

inline double quartic_quantile(double u, double c) {
  if (u == 0.5) return 0.0;
  const double q = boost::math::gamma_p_inv(0.25, std::abs(2.0 * u - 1.0));
  const double y = std::pow(q / c, 0.25);
  return u > 0.5 ? y : -y;
}

}  // namespace detail

/// Limiting law of the scaled magnetization: N(0, v) or density exp(-y^4/12)/Z.
class LimitingLaw {
 public:
  explicit LimitingLaw(const Model& model) : regime_(model.params.regime) {
    if (regime_ == Regime::Supercritical) {
      variance_ = *model.constants.v;
      normalization_ = std::sqrt(2.0 * std::numbers::pi * variance_);
      return;
    }
    using boost::math::quadrature::gauss_kronrod;
    const double numeric = gauss_kronrod<double, 61>::integrate(
        [](double y) { return std::exp(-y * y * y * y / 12.0); }, -20.0, 20.0, 15, 1e-15);
    const double closed = closed_form_quartic_normalization();
    if (std::abs(numeric - closed) > 1e-8)
      throw std::logic_error("quartic normalization: quadrature and closed form disagree");
    normalization_ = numeric;
    quadrature_normalization_ = numeric;
  }

  /// Gamma(1/4) (4/3)^(-1/4), the integral of exp(-y^4/12) over the line.
  static double closed_form_quartic_normalization() {
    return std::tgamma(0.25) * std::pow(4.0 / 3.0, -0.25);
  }

  Regime regime() const { return regime_; }
  double variance() const { return variance_; }
  double normalization() const { return normalization_; }
  double quadrature_normalization() const { return quadrature_normalization_; }

  double density(double y) const {
    if (regime_ == Regime::Supercritical) return std::exp(-0.5 * y * y / variance_) / normalization_;
    return std::exp(-y * y * y * y / 12.0) / normalization_;
  }

  double cdf(double y) const {
    if (regime_ == Regime::Supercritical) return 0.5 * std::erfc(-y / std::sqrt(2.0 * variance_));
    return detail::quartic_cdf(y, 1.0 / 12.0);
  }

 private:
  Regime regime_;
  double variance_ = 0.0;
  double normalization_ = 0.0;
  double quadrature_normalization_ = 0.0;
};

inline LimitingLaw limiting_law(const Model& model) { return LimitingLaw(model); }

}  // namespace zzcw
