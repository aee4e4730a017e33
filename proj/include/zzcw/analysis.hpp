#pragma once

// Empirical distributions, KS and W1 distances, integrated autocorrelation
// times, and the log-log scaling fits for the MH / LMH relaxation exponents.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zzcw/chains.hpp"
#include "zzcw/curie_weiss.hpp"
#include "zzcw/parallel.hpp"
#include "zzcw/rng.hpp"

namespace zzcw {

class EmpiricalSummary {
 public:
  explicit EmpiricalSummary(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw std::invalid_argument("empirical summary needs at least one value");
    std::sort(sorted_.begin(), sorted_.end());
    // two-pass mean / variance
    double s = 0.0;
    for (double v : sorted_) s += v;
    mean_ = s / static_cast<double>(sorted_.size());
    double q = 0.0;
    for (double v : sorted_) q += (v - mean_) * (v - mean_);
    variance_ = sorted_.size() > 1 ? q / static_cast<double>(sorted_.size() - 1) : 0.0;
  }

  std::size_t count() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0,1]");
    const double pos = p * static_cast<double>(sorted_.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted_.size()) return sorted_.back();
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * sorted_[i] + w * sorted_[i + 1];
  }

 private:
  std::vector<double> sorted_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

/// sup |F_emp - cdf|, both one-sided gaps at each order statistic.
template <class Cdf>
double ks_distance(const EmpiricalSummary& sample, Cdf&& cdf) {
  const auto& x = sample.sorted();
  const double m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // ties: the empirical cdf jumps once at the last copy
    if (i + 1 < x.size() && x[i + 1] == x[i]) {
      d = std::max(d, cdf(x[i]) - static_cast<double>(i) / m);
      continue;
    }
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

/// Kolmogorov distance between a lattice law (support increasing) and a continuous cdf.
template <class Cdf>
double lattice_ks(const std::vector<double>& support, const std::vector<double>& probs, Cdf&& cdf) {
  double below = 0.0, d = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double f = cdf(support[k]);
    const double above = below + probs[k];
    d = std::max({d, std::abs(below - f), std::abs(above - f)});
    below = above;
  }
  return d;
}

/// W1 = integral of |F_lattice - F| over the line, with tails integrated until negligible.
template <class Cdf>
double lattice_wasserstein1(const std::vector<double>& support, const std::vector<double>& probs, Cdf&& cdf) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  double w = 0.0;
  // left tail: integral of F below the first atom
  {
    double hi = support.front(), width = 1.0;
    for (int it = 0; it < 200 && cdf(hi) > 1e-17; ++it) {
      w += GK::integrate(cdf, hi - width, hi, 0, 0);
      hi -= width;
      width *= 2.0;
    }
  }
  double level = 0.0;
  for (std::size_t k = 0; k + 1 < support.size(); ++k) {
    level += probs[k];
    const double lv = level;
    w += GK::integrate([&](double x) { return std::abs(lv - cdf(x)); }, support[k], support[k + 1], 0, 0);
  }
  {
    double lo = support.back(), width = 1.0;
    for (int it = 0; it < 200 && 1.0 - cdf(lo) > 1e-17; ++it) {
      w += GK::integrate([&](double x) { return 1.0 - cdf(x); }, lo, lo + width, 0, 0);
      lo += width;
      width *= 2.0;
    }
  }
  return w;
}

/// W1 between a sample and a continuous law given by its quantile function:
/// integral over u of |Q_emp(u) - Q(u)|, Q_emp the step quantile.
template <class Quantile>
double wasserstein1(const EmpiricalSummary& sample, Quantile&& quantile) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  const auto& x = sample.sorted();
  const double m = static_cast<double>(x.size());
  double w = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = static_cast<double>(i) / m, b = static_cast<double>(i + 1) / m;
    w += GK::integrate([&](double u) { return std::abs(x[i] - quantile(u)); }, a, b, 0, 0);
  }
  return w;
}

struct AutocorrelationResult {
  double tau = 1.0;
  double stderr_tau = 0.0;
  std::size_t window = 0;
  std::size_t length = 0;
  bool too_short = false;  // length < 1000 tau
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline std::size_t next_pow2(std::size_t x) {
  std::size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

}  // namespace detail

/// Normalized autocorrelation rho_0..rho_{N-1} via a zero-padded real FFT.
inline std::vector<double> autocorrelation(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("autocorrelation needs at least two points");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  const std::size_t len = detail::next_pow2(2 * n);
  const std::size_t bins = len / 2 + 1;
  double* in = fftw_alloc_real(len);
  fftw_complex* spec = fftw_alloc_complex(bins);
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(len), spec, in, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = series[i] - mean;
  std::fill(in + n, in + len, 0.0);
  fftw_execute(fwd);
  for (std::size_t i = 0; i < bins; ++i) {
    spec[i][0] = spec[i][0] * spec[i][0] + spec[i][1] * spec[i][1];
    spec[i][1] = 0.0;
  }
  fftw_execute(bwd);
  std::vector<double> rho(n);
  const double c0 = in[0];
  for (std::size_t k = 0; k < n; ++k) rho[k] = c0 > 0.0 ? in[k] / c0 : 0.0;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(in);
  fftw_free(spec);
  if (!(c0 > 0.0)) throw std::invalid_argument("autocorrelation of a constant series is undefined");
  return rho;
}

/// tau_int = 1 + 2 sum_{k=1}^{W} rho_k, W the smallest lag with W >= c tau(W).
inline AutocorrelationResult integrated_autocorrelation(const std::vector<double>& series, double c = 6.0) {
  const std::vector<double> rho = autocorrelation(series);
  AutocorrelationResult r;
  r.length = series.size();
  double tau = 1.0;
  std::size_t w = 0;
  for (std::size_t k = 1; k < rho.size(); ++k) {
    tau += 2.0 * rho[k];
    w = k;
    if (static_cast<double>(k) >= c * tau) break;
  }
  r.tau = tau;
  r.window = w;
  const double nd = static_cast<double>(series.size());
  r.stderr_tau = std::abs(tau) * std::sqrt(2.0 * (2.0 * static_cast<double>(w) + 1.0) / nd);
  r.too_short = nd < 1000.0 * tau;
  return r;
}

// --- slope fits --------------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs >= 2 paired points");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("least squares needs distinct x values");
  return {sxy / sxx, my - sxy / sxx * mx};
}

struct SlopeEstimate {
  double slope = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Slope of log(mean tau) on log n; percentile bootstrap over replicas within each n.
/// The interval is widened if needed so that it contains the point estimate.
inline SlopeEstimate fit_scaling_slope(const std::vector<double>& ns, const std::vector<std::vector<double>>& taus,
                                       std::uint64_t seed, std::size_t resamples = 200, double level = 0.95) {
  if (ns.size() != taus.size() || ns.size() < 2) throw std::invalid_argument("scaling fit needs matching n and tau lists");
  std::vector<double> lx(ns.size()), ly(ns.size());
  auto mean_of = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (taus[i].empty()) throw std::invalid_argument("empty replica list");
    lx[i] = std::log(ns[i]);
    const double m = mean_of(taus[i]);
    if (!(m > 0.0)) throw std::invalid_argument("autocorrelation times must be positive");
    ly[i] = std::log(m);
  }
  SlopeEstimate est;
  est.slope = least_squares(lx, ly).slope;
  StreamRng rng(seed, 0, Purpose::Bootstrap);
  std::vector<double> slopes;
  slopes.reserve(resamples);
  std::vector<double> by(ns.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto& t = taus[i];
      double s = 0.0;
      for (std::size_t r = 0; r < t.size(); ++r) s += t[static_cast<std::size_t>(rng.uniform() * static_cast<double>(t.size()))];
      by[i] = std::log(std::max(s / static_cast<double>(t.size()), std::numeric_limits<double>::min()));
    }
    slopes.push_back(least_squares(lx, by).slope);
  }
  EmpiricalSummary dist(slopes);
  est.ci_lo = std::min(dist.quantile(0.5 * (1.0 - level)), est.slope);
  est.ci_hi = std::max(dist.quantile(0.5 * (1.0 + level)), est.slope);
  return est;
}

// --- scaling study ----------------------------------------------------------

struct ScalingConfig {
  ChainKind kind = ChainKind::MH;
  double beta = 0.5;
  double h = 0.0;
  std::vector<std::int64_t> n_list;
  std::size_t replicas = 8;
  /// Per-replica cap on chain steps.
  std::uint64_t max_steps = std::uint64_t{1} << 34;
  /// Records per autocorrelation time targeted by the thinning stride.
  double records_per_unit_time = 16.0;
  std::size_t initial_records = std::size_t{1} << 14;
  /// Required series length in units of tau.
  double length_factor = 1000.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t bootstrap_resamples = 200;
};

struct ScalingRow {
  std::int64_t n = 0;
  double tau = 0.0;     // mean over replicas, in chain steps
  double stderr_tau = 0.0;  // from the replica spread
  std::vector<double> replica_tau;
  std::uint64_t stride = 1;
  std::uint64_t steps_per_replica = 0;
  bool budget_exhausted = false;
  bool too_short = false;
};

struct ScalingReport {
  ChainKind kind = ChainKind::MH;
  Regime regime = Regime::Supercritical;
  double beta = 0.0, h = 0.0;
  std::vector<ScalingRow> rows;
  double slope = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
};

/// Observable whose autocorrelation is measured: eta, or eta^2 at criticality.
inline double scaling_observable(double eta, Regime regime) { return regime == Regime::Critical ? eta * eta : eta; }

struct ReplicaTau {
  double tau = 0.0;
  std::uint64_t steps = 0;
  bool budget_exhausted = false;
  bool too_short = false;
};

namespace detail {

template <class Chain>
ReplicaTau measure_replica(Chain& chain, const Model& model, Regime regime, std::uint64_t stride,
                           const ScalingConfig& cfg, StreamRng& rng) {
  ReplicaTau out;
  std::vector<double> series;
  std::size_t target = cfg.initial_records;
  std::uint64_t steps = 0;
  series.push_back(scaling_observable(model.eta(chain.state().k), regime));
  for (;;) {
    while (series.size() < target) {
      if (steps + stride > cfg.max_steps) {
        out.budget_exhausted = true;
        break;
      }
      for (std::uint64_t s = 0; s < stride; ++s) chain.step(rng);
      steps += stride;
      series.push_back(scaling_observable(model.eta(chain.state().k), regime));
    }
    const AutocorrelationResult ac = integrated_autocorrelation(series);
    out.tau = ac.tau * static_cast<double>(stride);
    out.too_short = ac.too_short;
    if (!ac.too_short || out.budget_exhausted) break;
    target = std::max(2 * series.size(), static_cast<std::size_t>(std::ceil(cfg.length_factor * ac.tau * 1.1)));
  }
  out.steps = steps;
  return out;
}

}  // namespace detail

/// tau_int, in chain steps, of one stationary replica run at size n.
inline ReplicaTau replica_tau(const ScalingConfig& cfg, const Model& model, const MagnetizationLaw& law,
                              std::uint64_t stride, std::uint32_t replica_index) {
  StreamRng rng(cfg.seed, replica_index, Purpose::Chain);
  const auto k0 = sample_stationary(law, rng);
  const int j0 = rng.sign();
  const Regime regime = model.params.regime;
  if (cfg.kind == ChainKind::MH) {
    MhChain chain(model, {k0});
    return detail::measure_replica(chain, model, regime, stride, cfg, rng);
  }
  LmhChain chain(model, {{k0}, j0});
  return detail::measure_replica(chain, model, regime, stride, cfg, rng);
}

/// Thinning stride: about records_per_unit_time records per unit of limiting-process time.
inline std::uint64_t scaling_stride(ChainKind kind, Regime regime, std::int64_t n, double records_per_unit_time) {
  const double rate = std::pow(static_cast<double>(n), default_alpha(kind, regime));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(rate / records_per_unit_time)));
}

inline ScalingReport scaling_study(const ScalingConfig& cfg) {
  if (cfg.n_list.size() < 4) throw std::invalid_argument("scaling study needs at least 4 values of n");
  if (cfg.replicas < 2) throw std::invalid_argument("scaling study needs at least 2 replicas");
  std::vector<std::int64_t> ns = cfg.n_list;
  std::sort(ns.begin(), ns.end());
  if (std::adjacent_find(ns.begin(), ns.end()) != ns.end()) throw std::invalid_argument("n values must be distinct");

  ScalingReport rep;
  rep.kind = cfg.kind;
  rep.beta = cfg.beta;
  rep.h = cfg.h;
  rep.regime = classify_regime(cfg.beta, cfg.h);

  struct Cell {
    Model model;
    MagnetizationLaw law;
    std::uint64_t stride;
  };
  std::vector<Cell> cells;
  for (std::int64_t n : ns) {
    Model model(ModelParams::make(cfg.beta, cfg.h, n));
    MagnetizationLaw law = exact_stationary_law(model);
    cells.push_back({model, std::move(law), scaling_stride(cfg.kind, rep.regime, n, cfg.records_per_unit_time)});
  }
  const std::size_t jobs = cells.size() * cfg.replicas;
  std::vector<ReplicaTau> results(jobs);
  // largest n first so the long jobs do not trail
  parallel_for_index(jobs, cfg.threads, [&](std::size_t idx) {
    const std::size_t job = jobs - 1 - idx;
    const std::size_t c = job / cfg.replicas;
    const auto replica = static_cast<std::uint32_t>(job);
    results[job] = replica_tau(cfg, cells[c].model, cells[c].law, cells[c].stride, replica);
  });

  std::vector<double> xs;
  std::vector<std::vector<double>> taus;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    ScalingRow row;
    row.n = ns[c];
    row.stride = cells[c].stride;
    for (std::size_t r = 0; r < cfg.replicas; ++r) {
      const ReplicaTau& rt = results[c * cfg.replicas + r];
      row.replica_tau.push_back(rt.tau);
      row.steps_per_replica = std::max(row.steps_per_replica, rt.steps);
      row.budget_exhausted = row.budget_exhausted || rt.budget_exhausted;
      row.too_short = row.too_short || rt.too_short;
    }
    const EmpiricalSummary s(row.replica_tau);
    row.tau = s.mean();
    row.stderr_tau = std::sqrt(s.variance() / static_cast<double>(cfg.replicas));
    xs.push_back(static_cast<double>(row.n));
    taus.push_back(row.replica_tau);
    rep.rows.push_back(std::move(row));
  }
  const SlopeEstimate est = fit_scaling_slope(xs, taus, cfg.seed, cfg.bootstrap_resamples);
  rep.slope = est.slope;
  rep.ci_lo = est.ci_lo;
  rep.ci_hi = est.ci_hi;
  return rep;
}

// --- limit check -------------------------------------------------------------

struct LimitRow {
  std::int64_t n = 0;
  double ks = 0.0;
  double w1 = 0.0;
};

struct LimitReport {
  ChainKind kind = ChainKind::MH;
  Regime regime = Regime::Supercritical;
  double beta = 0.0, h = 0.0;
  std::vector<LimitRow> rows;

  bool strictly_decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].ks < rows[i - 1].ks)) return false;
    return true;
  }
};

/// Stationary law of eta under the chosen chain: pi itself for MH, the replica
/// marginal of 1/2 (pi, pi) for LMH.
inline std::vector<double> chain_marginal(ChainKind kind, const MagnetizationLaw& law) {
  const auto& pi = law.probabilities();
  if (kind == ChainKind::MH) return pi;
  std::vector<double> marginal(pi.size());
  for (std::size_t k = 0; k < pi.size(); ++k) marginal[k] = 0.5 * pi[k] + 0.5 * pi[k];
  return marginal;
}

/// Exact lattice law vs the limiting law, no sampling.
inline LimitReport limit_check(ChainKind kind, double beta, double h, const std::vector<std::int64_t>& n_list) {
  LimitReport rep;
  rep.kind = kind;
  rep.beta = beta;
  rep.h = h;
  rep.regime = classify_regime(beta, h);
  for (std::int64_t n : n_list) {
    const Model model(ModelParams::make(beta, h, n));
    const MagnetizationLaw law = exact_stationary_law(model);
    const LimitingLaw limit = limiting_law(model);
    const auto probs = chain_marginal(kind, law);
    const auto support = law.support();
    auto cdf = [&](double y) { return limit.cdf(y); };
    rep.rows.push_back({n, lattice_ks(support, probs, cdf), lattice_wasserstein1(support, probs, cdf)});
  }
  return rep;
}

}  // namespace zzcw
