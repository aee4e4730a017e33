#pragma once

// One-dimensional zig-zag process: constant speed a in direction j, with
// direction flips at rate lambda(y, j). Built-in Curie-Weiss limit rates are
// simulated by exact inversion of the integrated rate; general rates by
// thinning against a user-declared linear dominating bound.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "zzcw/curie_weiss.hpp"
#include "zzcw/error.hpp"
#include "zzcw/parallel.hpp"
#include "zzcw/rng.hpp"

namespace zzcw {

/// lambda(y, j) = max(0, j l y).
struct LinearRate {
  double l = 1.0;
};

/// lambda(y, j) = max(0, j c y^3).
struct CubicRate {
  double c = 1.0;
};

/// lambda(y + a j s, j) <= intercept + slope * s for all s >= 0.
struct LinearBound {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Arbitrary continuous rates lambda+(y) = lambda(y, +1), lambda-(y) = lambda(y, -1).
struct GeneralRate {
  std::function<double(double)> plus;
  std::function<double(double)> minus;
  /// Dominating bound along the ray from (y, j); used by thinning.
  std::function<LinearBound(double y, int j)> bound;
  /// Witnesses of lambda(y, j) >= lambda_min for j y >= y0.
  double y0 = 0.0;
  double lambda_min = 0.0;
  /// Test-only escape hatch that admits rates without the witnesses (e.g. lambda = 0).
  bool unchecked = false;
};

using SwitchingRate = std::variant<LinearRate, CubicRate, GeneralRate>;

struct ZigZagSpec {
  double a = 1.0;
  SwitchingRate rate;

  static ZigZagSpec linear(double l, double a = 1.0) { return checked({a, LinearRate{l}}); }
  static ZigZagSpec cubic(double c, double a = 1.0) { return checked({a, CubicRate{c}}); }
  static ZigZagSpec general(GeneralRate r, double a = 1.0) { return checked({a, std::move(r)}); }

  /// Switching rates obtained for LMH in the limit: (a(h,beta), l(h,beta)) or (1, 1/3).
  static ZigZagSpec from_model(const Model& model) {
    if (model.params.regime == Regime::Supercritical) return linear(model.constants.l, model.constants.a);
    return cubic(1.0 / 3.0, model.constants.a);
  }

  double rate_at(double y, int j) const {
    return std::visit(
        [&](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, LinearRate>) return std::max(0.0, j * r.l * y);
          else if constexpr (std::is_same_v<R, CubicRate>) return std::max(0.0, j * r.c * y * y * y);
          else return j > 0 ? r.plus(y) : r.minus(y);
        },
        rate);
  }

  bool is_general() const { return std::holds_alternative<GeneralRate>(rate); }

 private:
  static ZigZagSpec checked(ZigZagSpec s) {
    if (!(s.a > 0.0) || !std::isfinite(s.a)) throw std::invalid_argument("zig-zag speed a must be > 0");
    if (const auto* r = std::get_if<LinearRate>(&s.rate); r && !(r->l > 0.0))
      throw std::invalid_argument("linear rate requires l > 0");
    if (const auto* r = std::get_if<CubicRate>(&s.rate); r && !(r->c > 0.0))
      throw std::invalid_argument("cubic rate requires c > 0");
    if (const auto* r = std::get_if<GeneralRate>(&s.rate)) {
      if (!r->plus || !r->minus || !r->bound) throw std::invalid_argument("general rate needs plus, minus and bound");
      if (!r->unchecked && !(r->lambda_min > 0.0 && r->y0 >= 0.0))
        throw std::invalid_argument("general rate must declare y0 >= 0 and lambda_min > 0");
    }
    return s;
  }
};

namespace detail {

/// Smallest t >= 0 solving c t + b t^2 / 2 = e; cancellation-free form.
inline double invert_linear_hazard(double c, double b, double e) {
  if (b == 0.0) return c > 0.0 ? e / c : std::numeric_limits<double>::infinity();
  return 2.0 * e / (c + std::sqrt(c * c + 2.0 * b * e));
}

}  // namespace detail

/// Time t solving int_0^t lambda(y + a j s, j) ds = e, for the built-in rates.
///
/// With u = j y the rate along the ray is l max(0, u + a s) (linear) or
/// c max(0, u + a s)^3 (cubic). A negative u contributes a dead time -u/a.
inline double first_event_time(double y, int j, const ZigZagSpec& spec, double e) {
  if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("exponential draw must be > 0 and finite");
  const double a = spec.a;
  const double u = j * y;
  const double dead = u < 0.0 ? -u / a : 0.0;
  const double u0 = std::max(u, 0.0);
  if (const auto* r = std::get_if<LinearRate>(&spec.rate)) {
    // l (u0 s + a s^2 / 2) = e
    return dead + detail::invert_linear_hazard(r->l * u0, r->l * a, e);
  }
  if (const auto* r = std::get_if<CubicRate>(&spec.rate)) {
    // c ((u0 + a s)^4 - u0^4) / (4 a) = e, solved in w = (u0 + a s)^4
    const double x = 4.0 * a * e / r->c;
    const double w = std::pow(u0, 4) + x;
    const double root = std::pow(w, 0.25);
    // root - u0 = x / ((root + u0)(root^2 + u0^2))
    const double gain = x / ((root + u0) * (root * root + u0 * u0));
    return dead + gain / a;
  }
  throw std::invalid_argument("first_event_time: general rates need thinning, use sample_event_time");
}

/// Integrated rate Lambda(t) = int_0^t lambda(y + a j s, j) ds for the built-in rates.
inline double integrated_rate(double y, int j, const ZigZagSpec& spec, double t) {
  const double a = spec.a;
  const double u = j * y;
  const double dead = u < 0.0 ? -u / a : 0.0;
  if (t <= dead) return 0.0;
  const double u0 = std::max(u, 0.0);
  const double s = t - dead;
  if (const auto* r = std::get_if<LinearRate>(&spec.rate)) return r->l * (u0 * s + 0.5 * a * s * s);
  if (const auto* r = std::get_if<CubicRate>(&spec.rate))
    return r->c * (std::pow(u0 + a * s, 4) - std::pow(u0, 4)) / (4.0 * a);
  throw std::invalid_argument("integrated_rate: built-in rates only");
}

/// Next switching time from (y, j): one exponential and exact inversion for
/// built-in rates, thinning for general ones. Infinite if the rate is zero forever.
inline double sample_event_time(double y, int j, const ZigZagSpec& spec, StreamRng& rng) {
  const auto* g = std::get_if<GeneralRate>(&spec.rate);
  if (!g) return first_event_time(y, j, spec, rng.exponential());
  double elapsed = 0.0;
  for (;;) {
    const double here = y + spec.a * j * elapsed;
    const LinearBound b = g->bound(here, j);
    if (b.intercept < 0.0 || b.slope < 0.0) throw ContractViolation("dominating bound must be nonnegative");
    if (b.intercept == 0.0 && b.slope == 0.0) return std::numeric_limits<double>::infinity();
    const double tau = detail::invert_linear_hazard(b.intercept, b.slope, rng.exponential());
    elapsed += tau;
    const double lambda = spec.rate_at(y + spec.a * j * elapsed, j);
    const double ceiling = b.intercept + b.slope * tau;
    if (lambda > ceiling * (1.0 + 1e-12) + 1e-300)
      throw ContractViolation("general rate exceeds its declared dominating bound");
    if (rng.uniform() * ceiling < lambda) return elapsed;
  }
}

/// Switching times and positions of one zig-zag path on [0, t_end].
///
/// Direction after the i-th switch is j0 (-1)^i (right-continuous).
struct ZigZagEventLog {
  double a = 1.0;
  double y0 = 0.0;
  int j0 = 1;
  double t_end = 0.0;
  std::vector<double> times;
  std::vector<double> positions;
  double y_end = 0.0;  // Y(t_end), the checksum position
  int j_end = 1;

  std::size_t events() const { return times.size(); }
  int direction_after(std::size_t i) const { return (i % 2 == 0) ? j0 : -j0; }
};

class EventBudgetExceeded : public BudgetExceeded {
 public:
  EventBudgetExceeded(std::string what, ZigZagEventLog partial)
      : BudgetExceeded(std::move(what)), partial_(std::make_shared<ZigZagEventLog>(std::move(partial))) {}
  const ZigZagEventLog& partial() const { return *partial_; }

 private:
  std::shared_ptr<ZigZagEventLog> partial_;
};

inline constexpr std::uint64_t kDefaultMaxEvents = 1'000'000'000;

inline ZigZagEventLog simulate(const ZigZagSpec& spec, double y0, int j0, double t_end, StreamRng& rng,
                               std::uint64_t max_events = kDefaultMaxEvents) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be > 0 and finite");
  if (max_events < 1) throw std::invalid_argument("max_events must be >= 1");
  if (j0 != 1 && j0 != -1) throw std::invalid_argument("direction must be +1 or -1");
  ZigZagEventLog log;
  log.a = spec.a;
  log.y0 = y0;
  log.j0 = j0;
  log.t_end = t_end;
  double t = 0.0, y = y0;
  int j = j0;
  for (;;) {
    const double z = sample_event_time(y, j, spec, rng);
    if (t + z > t_end) {
      log.y_end = y + j * spec.a * (t_end - t);
      log.j_end = j;
      return log;
    }
    // positions advance by the stored time differences, so the log replays exactly
    const double t_next = t + z;
    y += j * spec.a * (t_next - t);
    t = t_next;
    j = -j;
    if (log.times.size() >= max_events) {
      log.y_end = y;
      log.j_end = j;
      log.t_end = t;
      throw EventBudgetExceeded("simulate: event budget exceeded", std::move(log));
    }
    log.times.push_back(t);
    log.positions.push_back(y);
  }
}

struct PathPoint {
  double y = 0.0;
  int j = 1;
};

/// Position and (right-continuous) direction at time t.
inline PathPoint evaluate_path(const ZigZagEventLog& log, double t) {
  if (!(t >= 0.0 && t <= log.t_end)) throw std::out_of_range("evaluate_path: t outside [0, t_end]");
  const auto idx = static_cast<std::size_t>(std::upper_bound(log.times.begin(), log.times.end(), t) - log.times.begin());
  const double t_base = idx == 0 ? 0.0 : log.times[idx - 1];
  const double y_base = idx == 0 ? log.y0 : log.positions[idx - 1];
  const int j = log.direction_after(idx);
  return {y_base + j * log.a * (t - t_base), j};
}

/// Terminal position rebuilt from the stored times alone.
inline double reconstruct_terminal(const ZigZagEventLog& log) {
  double y = log.y0, t = 0.0;
  for (std::size_t i = 0; i < log.times.size(); ++i) {
    y += log.direction_after(i) * log.a * (log.times[i] - t);
    t = log.times[i];
  }
  return y + log.direction_after(log.times.size()) * log.a * (log.t_end - t);
}

/// Visits every linear piece (t0, y0) -> (t1, y1) of the path.
template <class Fn>
void for_each_segment(const ZigZagEventLog& log, Fn&& fn) {
  double t = 0.0, y = log.y0;
  for (std::size_t i = 0; i < log.times.size(); ++i) {
    fn(t, y, log.times[i], log.positions[i]);
    t = log.times[i];
    y = log.positions[i];
  }
  fn(t, y, log.t_end, log.y_end);
}

struct PathMoments {
  double mean = 0.0;
  double variance = 0.0;
  double second_moment = 0.0;
};

/// Exact time averages of Y and Y^2 along the piecewise linear path.
inline PathMoments path_moments(const ZigZagEventLog& log) {
  double s1 = 0.0, s2 = 0.0;
  for_each_segment(log, [&](double t0, double y0, double t1, double y1) {
    const double dt = t1 - t0;
    s1 += dt * 0.5 * (y0 + y1);
    s2 += dt * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
  });
  PathMoments m;
  m.mean = s1 / log.t_end;
  m.second_moment = s2 / log.t_end;
  m.variance = m.second_moment - m.mean * m.mean;
  return m;
}

/// Batch-means standard error of the time average of Y.
inline double path_mean_stderr(const ZigZagEventLog& log, std::size_t batches = 50) {
  if (batches < 2) throw std::invalid_argument("need at least two batches");
  const double width = log.t_end / static_cast<double>(batches);
  std::vector<double> sums(batches, 0.0);
  for_each_segment(log, [&](double t0, double y0, double t1, double y1) {
    const double v = (t1 > t0) ? (y1 - y0) / (t1 - t0) : 0.0;
    double a = t0;
    while (a < t1) {
      const auto b_idx = std::min(batches - 1, static_cast<std::size_t>(a / width));
      const double b_end = std::min(t1, (b_idx + 1) * width);
      const double end = (b_idx == batches - 1) ? t1 : b_end;
      const double ya = y0 + v * (a - t0), yb = y0 + v * (end - t0);
      sums[b_idx] += (end - a) * 0.5 * (ya + yb);
      if (end <= a) break;
      a = end;
    }
  });
  double mean = 0.0;
  for (double& s : sums) {
    s /= width;
    mean += s;
  }
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double s : sums) var += (s - mean) * (s - mean);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

/// Occupation (time-averaged) distribution function G of the path at the
/// cells + 1 grid points lo + i (hi - lo) / cells. Exact at the grid points.
inline std::vector<double> occupation_cdf_grid(const ZigZagEventLog& log, double lo, double hi, std::size_t cells) {
  if (!(hi > lo) || cells < 1) throw std::invalid_argument("occupation grid needs lo < hi and cells >= 1");
  // G(x) = 1/(a T) sum over segments of [(x - low)^+ - (x - high)^+]
  const double width = (hi - lo) / static_cast<double>(cells);
  std::vector<double> count(cells + 2, 0.0), total(cells + 2, 0.0);
  auto bin = [&](double p) -> std::size_t {
    if (p < lo) return 0;
    if (p >= hi) return cells + 1;
    return 1 + std::min(cells - 1, static_cast<std::size_t>((p - lo) / width));
  };
  auto add = [&](double p, double w) {
    const std::size_t b = bin(p);
    count[b] += w;
    total[b] += w * p;
  };
  for_each_segment(log, [&](double, double y0, double, double y1) {
    add(std::min(y0, y1), 1.0);
    add(std::max(y0, y1), -1.0);
  });
  const double scale = 1.0 / (log.a * log.t_end);
  std::vector<double> g(cells + 1);
  double c = count[0], s = total[0];
  for (std::size_t i = 0; i <= cells; ++i) {
    const double x = lo + width * static_cast<double>(i);
    // endpoints below x sit in bins 0..i (bin i holds [x_{i-1}, x_i))
    g[i] = scale * (c * x - s);
    if (i < cells) {
      c += count[i + 1];
      s += total[i + 1];
    }
  }
  return g;
}

/// sup over the grid of |G(x) - cdf(x)|.
template <class Cdf>
double occupation_ks(const ZigZagEventLog& log, Cdf&& cdf, double lo, double hi, std::size_t cells = 20000) {
  const std::vector<double> g = occupation_cdf_grid(log, lo, hi, cells);
  const double width = (hi - lo) / static_cast<double>(cells);
  double worst = 0.0;
  for (std::size_t i = 0; i <= cells; ++i) worst = std::max(worst, std::abs(g[i] - cdf(lo + width * static_cast<double>(i))));
  return worst;
}

struct EventRateCheck {
  std::size_t events = 0;  // switches at positions with |Y| <= R
  double exposure = 0.0;   // time spent with |Y| <= R
  double lambda_max = 0.0;
  double poisson_bound = 0.0;  // mean + 4 sd of Poisson(lambda_max * exposure)
  bool passed() const { return static_cast<double>(events) <= poisson_bound; }
};

/// Switches inside |Y| <= R cannot outnumber a Poisson process at the largest rate there.
inline EventRateCheck event_rate_check(const ZigZagEventLog& log, const ZigZagSpec& spec, double radius,
                                       std::size_t rate_grid = 2001) {
  EventRateCheck c;
  for (std::size_t i = 0; i < rate_grid; ++i) {
    const double y = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(rate_grid - 1);
    c.lambda_max = std::max({c.lambda_max, spec.rate_at(y, +1), spec.rate_at(y, -1)});
  }
  for (double p : log.positions) c.events += std::abs(p) <= radius;
  for_each_segment(log, [&](double t0, double y0, double t1, double y1) {
    const double lo = std::min(y0, y1), hi = std::max(y0, y1);
    if (hi == lo) {
      if (std::abs(lo) <= radius) c.exposure += t1 - t0;
      return;
    }
    const double inside = std::max(0.0, std::min(hi, radius) - std::max(lo, -radius));
    c.exposure += (t1 - t0) * inside / (hi - lo);
  });
  const double mean = c.lambda_max * c.exposure;
  c.poisson_bound = mean + 4.0 * std::sqrt(mean);
  return c;
}

/// Stationary density proportional to exp(-Psi(y)) with Psi' = (lambda+ - lambda-)/a.
class PotentialProfile {
 public:
  std::function<double(double)> psi;
  std::function<double(double)> density;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  double normalization = 1.0;  // integral of exp(-Psi)
};

namespace detail {

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

/// Tabulated potential for general rates on a symmetric grid.
struct GeneralPotential {
  double a = 1.0;
  std::function<double(double)> drift;  // lambda+ - lambda-
  double half_width = 0.0;
  double cell = 0.0;
  std::vector<double> psi_nodes;  // Psi at -L + i cell
  std::vector<double> mass;       // cumulative unnormalized mass at nodes
  double total = 0.0;

  std::size_t cells() const { return psi_nodes.size() - 1; }
  double node(std::size_t i) const { return -half_width + cell * static_cast<double>(i); }

  double local_psi(std::size_t i, double y) const {
    return psi_nodes[i] + GK15::integrate(drift, node(i), y, 0, 0) / a;
  }
  std::size_t locate(double y) const {
    const double r = (y + half_width) / cell;
    if (r <= 0.0) return 0;
    return std::min(cells() - 1, static_cast<std::size_t>(r));
  }
  double psi(double y) const {
    if (y == 0.0) return 0.0;
    return GK15::integrate(drift, 0.0, y, 0, 0) / a;
  }
  double cdf(double y) const {
    if (y <= -half_width) return 0.0;
    if (y >= half_width) return 1.0;
    const std::size_t i = locate(y);
    const double part = GK15::integrate([&](double x) { return std::exp(-local_psi(i, x)); }, node(i), y, 0, 0);
    return (mass[i] + part) / total;
  }
};

inline std::shared_ptr<GeneralPotential> tabulate_general(const ZigZagSpec& spec) {
  const auto& g = std::get<GeneralRate>(spec.rate);
  auto pot = std::make_shared<GeneralPotential>();
  pot->a = spec.a;
  pot->drift = [plus = g.plus, minus = g.minus](double y) { return plus(y) - minus(y); };
  auto psi = [&](double y) { return GK15::integrate(pot->drift, 0.0, y, 0, 0) / spec.a; };
  // Grow the window until exp(-Psi) is negligible at both ends.
  double half = 8.0;
  for (;;) {
    double lowest = 0.0;
    for (int i = -64; i <= 64; ++i) lowest = std::min(lowest, psi(half * i / 64.0));
    if (psi(half) - lowest > 48.0 && psi(-half) - lowest > 48.0) break;
    half *= 2.0;
    if (half > 1e6) throw DivergentNormalization("exp(-Psi) is not integrable: stationary measure is not finite");
  }
  constexpr std::size_t kCells = 4096;
  pot->half_width = half;
  pot->cell = 2.0 * half / kCells;
  pot->psi_nodes.assign(kCells + 1, 0.0);
  const std::size_t mid = kCells / 2;
  for (std::size_t i = mid; i < kCells; ++i)
    pot->psi_nodes[i + 1] = pot->psi_nodes[i] + GK15::integrate(pot->drift, pot->node(i), pot->node(i + 1), 0, 0) / spec.a;
  for (std::size_t i = mid; i > 0; --i)
    pot->psi_nodes[i - 1] = pot->psi_nodes[i] - GK15::integrate(pot->drift, pot->node(i - 1), pot->node(i), 0, 0) / spec.a;
  pot->mass.assign(kCells + 1, 0.0);
  for (std::size_t i = 0; i < kCells; ++i) {
    const double piece = GK15::integrate([&](double x) { return std::exp(-pot->local_psi(i, x)); }, pot->node(i),
                                         pot->node(i + 1), 0, 0);
    pot->mass[i + 1] = pot->mass[i] + piece;
  }
  pot->total = pot->mass.back();
  if (!(pot->total > 0.0) || !std::isfinite(pot->total))
    throw DivergentNormalization("exp(-Psi) is not integrable: stationary measure is not finite");
  return pot;
}

}  // namespace detail

inline PotentialProfile stationary_profile(const ZigZagSpec& spec) {
  PotentialProfile p;
  const double a = spec.a;
  if (const auto* r = std::get_if<LinearRate>(&spec.rate)) {
    const double var = a / r->l;
    p.psi = [k = r->l / (2.0 * a)](double y) { return k * y * y; };
    p.normalization = std::sqrt(2.0 * std::numbers::pi * var);
    p.density = [var, z = p.normalization](double y) { return std::exp(-0.5 * y * y / var) / z; };
    p.cdf = [var](double y) { return 0.5 * std::erfc(-y / std::sqrt(2.0 * var)); };
    p.quantile = [var](double u) { return std::sqrt(2.0 * var) * boost::math::erf_inv(2.0 * u - 1.0); };
    return p;
  }
  if (const auto* r = std::get_if<CubicRate>(&spec.rate)) {
    const double k = r->c / (4.0 * a);  // Psi = k y^4
    p.psi = [k](double y) { return k * y * y * y * y; };
    p.normalization = 0.5 * std::tgamma(0.25) * std::pow(k, -0.25);
    p.density = [k, z = p.normalization](double y) { return std::exp(-k * y * y * y * y) / z; };
    p.cdf = [k](double y) { return detail::quartic_cdf(y, k); };
    p.quantile = [k](double u) { return detail::quartic_quantile(u, k); };
    return p;
  }
  auto pot = detail::tabulate_general(spec);
  p.normalization = pot->total * std::exp(0.0);
  p.psi = [pot](double y) { return pot->psi(y); };
  p.density = [pot](double y) { return std::exp(-pot->psi(y)) / pot->total; };
  p.cdf = [pot](double y) { return pot->cdf(y); };
  p.quantile = [pot](double u) {
    double lo = -pot->half_width, hi = pot->half_width;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pot->cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return p;
}

struct LyapunovGrid {
  double y1 = 1.0;      // drift is checked on |y| >= y1
  double y_max = 20.0;  // outer edge of the checked tail
  std::size_t points = 2001;
};

struct LyapunovReport {
  double m_plus = 0.0, big_m_plus = 0.0, m_minus = 0.0, big_m_minus = 0.0;
  double alpha_plus = 0.0, beta_plus = 0.0, alpha_minus = 0.0, beta_minus = 0.0;
  double sup_ratio = 0.0;  // sup of LV/V over the tail grid
  double c = 0.0;          // implied drift constant, -sup_ratio
};

/// Foster-Lyapunov drift for V = exp(alpha+ y + beta+ j) on y >= y1 and
/// exp(-alpha- y - beta- j) on y <= -y1, with LV from the generator a j d/dy + lambda (flip).
inline LyapunovReport lyapunov_drift_check(const ZigZagSpec& spec, const LyapunovGrid& grid) {
  if (!(grid.y1 > 0.0 && grid.y_max > grid.y1 && grid.points >= 2))
    throw std::invalid_argument("lyapunov grid needs 0 < y1 < y_max and >= 2 points");
  std::vector<double> tail(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i)
    tail[i] = grid.y1 + (grid.y_max - grid.y1) * static_cast<double>(i) / static_cast<double>(grid.points - 1);

  LyapunovReport rep;
  rep.m_plus = 0.0;
  rep.big_m_plus = std::numeric_limits<double>::infinity();
  rep.m_minus = 0.0;
  rep.big_m_minus = std::numeric_limits<double>::infinity();
  for (double y : tail) {
    rep.m_plus = std::max(rep.m_plus, spec.rate_at(y, -1));
    rep.big_m_plus = std::min(rep.big_m_plus, spec.rate_at(y, +1));
    rep.m_minus = std::max(rep.m_minus, spec.rate_at(-y, +1));
    rep.big_m_minus = std::min(rep.big_m_minus, spec.rate_at(-y, -1));
  }
  // beta with m e^{2 beta} < M, then a*alpha in (m (e^{2 beta} - 1), M (1 - e^{-2 beta})) at its midpoint
  auto select = [&](double m, double big_m, double& alpha, double& beta) {
    if (!(big_m > m)) throw LyapunovConstantError("Lyapunov constants: good-switch rate does not dominate bad-switch rate");
    beta = m > 0.0 ? 0.25 * std::log(big_m / m) : 0.5;
    const double lo = m * (std::exp(2.0 * beta) - 1.0);
    const double hi = big_m * (1.0 - std::exp(-2.0 * beta));
    if (!(hi > lo)) throw LyapunovConstantError("Lyapunov constants: empty interval for alpha");
    alpha = 0.5 * (lo + hi) / spec.a;
  };
  select(rep.m_plus, rep.big_m_plus, rep.alpha_plus, rep.beta_plus);
  select(rep.m_minus, rep.big_m_minus, rep.alpha_minus, rep.beta_minus);

  const double a = spec.a;
  double sup = -std::numeric_limits<double>::infinity();
  for (double y : tail) {
    const double up_p = a * rep.alpha_plus - spec.rate_at(y, +1) * (1.0 - std::exp(-2.0 * rep.beta_plus));
    const double up_m = -a * rep.alpha_plus + spec.rate_at(y, -1) * (std::exp(2.0 * rep.beta_plus) - 1.0);
    const double dn_m = a * rep.alpha_minus - spec.rate_at(-y, -1) * (1.0 - std::exp(-2.0 * rep.beta_minus));
    const double dn_p = -a * rep.alpha_minus + spec.rate_at(-y, +1) * (std::exp(2.0 * rep.beta_minus) - 1.0);
    sup = std::max({sup, up_p, up_m, dn_m, dn_p});
  }
  rep.sup_ratio = sup;
  rep.c = -sup;
  return rep;
}

/// Starting distribution for ergodicity studies.
struct PointStart {
  double y = 0.0;
  int j = 1;
};
struct ProfileStart {};  // stationary: Y ~ profile, J uniform
using ZigZagStart = std::variant<PointStart, ProfileStart>;

struct ErgodicityReport {
  std::vector<double> t;
  std::vector<double> ks;
  double noise_floor = 0.0;  // 1.36 / sqrt(replicas)
  double rate = std::numeric_limits<double>::quiet_NaN();
  double plateau = std::numeric_limits<double>::quiet_NaN();
  std::size_t fitted_points = 0;
};

/// sup |F_emp - cdf| over the sample, checking both one-sided gaps at each order statistic.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

/// KS distance between the law of Y(t) over independent replicas and the stationary cdf.
inline ErgodicityReport ergodicity_decay(const ZigZagSpec& spec, const ZigZagStart& start, std::vector<double> t_grid,
                                         std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  if (replicas < 1000) throw std::invalid_argument("ergodicity_decay needs >= 1000 replicas");
  if (t_grid.empty()) throw std::invalid_argument("empty t grid");
  std::sort(t_grid.begin(), t_grid.end());
  if (t_grid.front() < 0.0) throw std::invalid_argument("t grid must be >= 0");
  const PotentialProfile profile = stationary_profile(spec);
  const double horizon = std::max(t_grid.back(), 1e-12);
  std::vector<std::vector<double>> at_t(t_grid.size(), std::vector<double>(replicas));
  parallel_for_index(replicas, threads, [&](std::size_t r) {
    StreamRng rng(seed, static_cast<std::uint32_t>(r), Purpose::ZigZag);
    PointStart s0;
    if (const auto* p = std::get_if<PointStart>(&start)) {
      s0 = *p;
    } else {
      s0.y = profile.quantile(rng.uniform_open());
      s0.j = rng.sign();
    }
    const ZigZagEventLog log = simulate(spec, s0.y, s0.j, horizon, rng);
    for (std::size_t i = 0; i < t_grid.size(); ++i) at_t[i][r] = evaluate_path(log, t_grid[i]).y;
  });
  ErgodicityReport rep;
  rep.t = t_grid;
  rep.noise_floor = 1.36 / std::sqrt(static_cast<double>(replicas));
  for (auto& col : at_t) rep.ks.push_back(ks_statistic(std::move(col), profile.cdf));

  // least squares of log KS on t over the points above twice the noise floor
  std::vector<double> xs, ys, floor_vals;
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    if (rep.ks[i] > 2.0 * rep.noise_floor) {
      xs.push_back(rep.t[i]);
      ys.push_back(std::log(rep.ks[i]));
    } else {
      floor_vals.push_back(rep.ks[i]);
    }
  }
  rep.fitted_points = xs.size();
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0) rep.rate = -sxy / sxx;
  }
  if (!floor_vals.empty()) {
    double s = 0;
    for (double v : floor_vals) s += v;
    rep.plateau = s / floor_vals.size();
  }
  return rep;
}

// --- event-log serialization -------------------------------------------------

inline std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV: metadata comment lines, then event_index,T_i,Y_i,J_i; row 0 is the initial state.
inline void write_event_log_csv(std::ostream& os, const ZigZagEventLog& log) {
  os << "# a=" << format_exact(log.a) << "\n";
  os << "# t_end=" << format_exact(log.t_end) << "\n";
  os << "# y_end=" << format_exact(log.y_end) << "\n";
  os << "# j_end=" << log.j_end << "\n";
  os << "event_index,T_i,Y_i,J_i\n";
  os << "0,0," << format_exact(log.y0) << "," << log.j0 << "\n";
  for (std::size_t i = 0; i < log.times.size(); ++i)
    os << (i + 1) << "," << format_exact(log.times[i]) << "," << format_exact(log.positions[i]) << ","
       << log.direction_after(i + 1) << "\n";
}

inline ZigZagEventLog read_event_log_csv(std::istream& is) {
  ZigZagEventLog log;
  std::string line;
  bool header = false, first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "a") log.a = std::stod(val);
      else if (key == "t_end") log.t_end = std::stod(val);
      else if (key == "y_end") log.y_end = std::stod(val);
      else if (key == "j_end") log.j_end = std::stoi(val);
      continue;
    }
    if (!header) {
      if (line != "event_index,T_i,Y_i,J_i") throw std::runtime_error("event log csv: bad header");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string idx, t, y, j;
    std::getline(ss, idx, ',');
    std::getline(ss, t, ',');
    std::getline(ss, y, ',');
    std::getline(ss, j, ',');
    if (first) {
      log.y0 = std::stod(y);
      log.j0 = std::stoi(j);
      first = false;
    } else {
      log.times.push_back(std::stod(t));
      log.positions.push_back(std::stod(y));
    }
  }
  if (!header || first) throw std::runtime_error("event log csv: missing rows");
  return log;
}

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}
inline void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("event log binary: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline constexpr char kEventLogMagic[5] = {'Z', 'Z', 'E', 'L', '1'};

/// Binary framing: "ZZEL1", u64 event count, then little-endian f64 fields
/// a, t_end, y0, j0, y_end, j_end followed by (T_i, Y_i) pairs.
inline void write_event_log_binary(std::ostream& os, const ZigZagEventLog& log) {
  os.write(kEventLogMagic, sizeof kEventLogMagic);
  detail::put_u64(os, log.times.size());
  for (double x : {log.a, log.t_end, log.y0, static_cast<double>(log.j0), log.y_end, static_cast<double>(log.j_end)})
    detail::put_f64(os, x);
  for (std::size_t i = 0; i < log.times.size(); ++i) {
    detail::put_f64(os, log.times[i]);
    detail::put_f64(os, log.positions[i]);
  }
}

inline ZigZagEventLog read_event_log_binary(std::istream& is) {
  char magic[sizeof kEventLogMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kEventLogMagic, sizeof magic) != 0)
    throw std::runtime_error("event log binary: bad magic");
  ZigZagEventLog log;
  const std::uint64_t count = detail::get_u64(is);
  log.a = detail::get_f64(is);
  log.t_end = detail::get_f64(is);
  log.y0 = detail::get_f64(is);
  log.j0 = static_cast<int>(detail::get_f64(is));
  log.y_end = detail::get_f64(is);
  log.j_end = static_cast<int>(detail::get_f64(is));
  log.times.reserve(count);
  log.positions.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    log.times.push_back(detail::get_f64(is));
    log.positions.push_back(detail::get_f64(is));
  }
  return log;
}

}  // namespace zzcw
