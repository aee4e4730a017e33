// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "zzcw/analysis.hpp"
#include "zzcw/cli.hpp"
#include "zzcw/lemmas.hpp"
#include "zzcw/oracle.hpp"
#include "zzcw/zigzag.hpp"

using namespace zzcw;

namespace {

constexpr double kResidualTol = 1e-13;
constexpr double kFixedPointTol = 1e-12;
constexpr double kVarianceIdentityTol = 1e-12;
constexpr double kLinearKs = 0.01;
constexpr double kLinearVarianceRel = 0.02;
constexpr double kCubicKs = 0.02;
constexpr double kThinningKs = 0.01;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "ok    " : "fails ") + what);
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// criterion 1
Outcome exact_invariance() {
  Outcome o;
  double worst_db = 0, worst_skew = 0, worst_inv = 0, worst_id = 0, worst_rows = 0;
  int cells = 0, witnesses = 0, differ = 0;
  bool others = true;
  for (std::int64_t n : {4, 8, 16, 32, 64})
    for (double beta : {0.0, 0.5, 0.9, 1.0})
      for (double h : {0.0, 0.3}) {
        if (beta == 1.0 && h != 0.0) continue;
        const OracleReport r = verify_oracle(Model(ModelParams::make(beta, h, n)));
        ++cells;
        worst_db = std::max(worst_db, r.detailed_balance);
        worst_skew = std::max(worst_skew, r.skew_detailed_balance);
        worst_inv = std::max(worst_inv, r.lifted_invariance);
        worst_id = std::max(worst_id, r.replica_identity);
        worst_rows = std::max({worst_rows, r.mh_row_sum, r.lmh_row_sum});
        if (r.replicas_differ) {
          ++differ;
          witnesses += r.witness.has_value();
        }
        others = others && r.passed(kResidualTol);
      }
  o.check(worst_db < kResidualTol, "detailed balance " + fmt("%.2e", worst_db));
  o.check(worst_skew < kResidualTol, "skew detailed balance " + fmt("%.2e", worst_skew));
  o.check(worst_inv < kResidualTol, "lifted invariance " + fmt("%.2e", worst_inv));
  o.check(worst_id < kResidualTol, "replica switch identity " + fmt("%.2e", worst_id));
  o.check(worst_rows < kResidualTol, "row sums " + fmt("%.2e", worst_rows));
  o.check(witnesses == differ, "non-reversibility witness in " + std::to_string(witnesses) + "/" +
                                   std::to_string(differ) + " cells with T+ != T-");
  o.check(others, "independent constructions, spin enumeration, power iteration over " + std::to_string(cells) + " cells");
  return o;
}

// criterion 2
Outcome fixed_point_and_constants() {
  Outcome o;
  double worst_fp = 0, worst_v = 0;
  int points = 0;
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 10; ++k) {
      const double beta = 0.99 * i / 9.0;
      const double h = -1.0 + 2.0 * k / 9.0;
      const double m0 = solve_m0(beta, h);
      worst_fp = std::max(worst_fp, std::abs(m0 - std::tanh(beta * (m0 + h))));
      const DerivedConstants c = derive_constants(ModelParams::make(beta, h, 100));
      worst_v = std::max(worst_v, std::abs(*c.v - c.a / c.l) / std::max(1.0, *c.v));
      ++points;
    }
  worst_fp = std::max(worst_fp, std::abs(solve_m0(1.0, 0.0)));
  o.check(worst_fp < kFixedPointTol, "fixed-point residual " + fmt("%.2e", worst_fp) + " over " + std::to_string(points) + " points");
  o.check(worst_v < kVarianceIdentityTol, "v = a/l " + fmt("%.2e", worst_v));
  return o;
}

// criterion 3
Outcome lemma_suprema() {
  Outcome o;
  const std::vector<std::int64_t> ns = {100, 1000, 10000, 100000};
  for (const auto& spec : standard_lemma_specs()) {
    const LemmaTable t = lemma_table(spec, ns);
    std::string vals;
    for (const auto& r : t.rows) vals += " " + fmt("%.4g", r.value);
    o.check(t.monotone_decreasing(), t.name + " decreasing:" + vals);
    o.check(t.final_below_threshold(), t.name + " at n=1e5 " + fmt("%.4g", t.rows.back().value) + " < " + fmt("%g", t.threshold));
  }
  const LemmaTable taylor = lemma_table(taylor_lemma_spec(), {100, 10000, 1000000});
  o.check(taylor.monotone_decreasing(), "taylor gap decreasing over 1e2, 1e4, 1e6");
  return o;
}

double two_sample_ks(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / x.size() - double(j) / y.size()));
  }
  return d;
}

// criterion 4
Outcome zigzag_stationarity() {
  Outcome o;
  {
    const auto spec = ZigZagSpec::linear(1.0, 1.0);
    StreamRng rng(kSeed, 0, Purpose::ZigZag);
    const auto log = simulate(spec, 0.0, 1, 1e6, rng);
    const double ks = occupation_ks(log, stationary_profile(spec).cdf, -8.0, 8.0);
    const double var = path_moments(log).variance;
    o.check(ks < kLinearKs, "linear occupation KS " + fmt("%.4g", ks));
    o.check(std::abs(var - 1.0) < kLinearVarianceRel, "linear time variance " + fmt("%.5g", var));
  }
  {
    const auto spec = ZigZagSpec::cubic(1.0 / 3.0, 1.0);
    StreamRng rng(kSeed, 1, Purpose::ZigZag);
    const auto log = simulate(spec, 0.0, 1, 1e6, rng);
    // the quartic law of the critical MH limit, independent of the zig-zag module
    const LimitingLaw quartic(Model(ModelParams::make(1.0, 0.0, 16)));
    const double ks = occupation_ks(log, [&](double y) { return quartic.cdf(y); }, -6.0, 6.0);
    o.check(ks < kCubicKs, "cubic occupation KS " + fmt("%.4g", ks));
  }
  {
    GeneralRate g;
    g.plus = [](double y) { return std::max(0.0, y); };
    g.minus = [](double y) { return std::max(0.0, -y); };
    g.bound = [](double y, int j) { return LinearBound{std::max(0.0, j * y), 1.0}; };
    g.y0 = 1.0;
    g.lambda_min = 1.0;
    const auto thinned = ZigZagSpec::general(g);
    const auto closed = ZigZagSpec::linear(1.0);
    StreamRng r1(kSeed, 2, Purpose::ZigZag), r2(kSeed, 3, Purpose::ZigZag);
    std::vector<double> a, b;
    for (int i = 0; i < 100000; ++i) {
      a.push_back(sample_event_time(0.5, 1, closed, r1));
      b.push_back(sample_event_time(0.5, 1, thinned, r2));
    }
    const double ks = two_sample_ks(a, b);
    o.check(ks < kThinningKs, "thinning vs closed form KS " + fmt("%.4g", ks));
  }
  return o;
}

// criterion 5
Outcome scaling_exponents() {
  Outcome o;
  struct Cell {
    ChainKind kind;
    double beta;
    int top;
    double lo, hi;
  };
  for (const Cell& c : {Cell{ChainKind::MH, 0.5, 12, 0.85, 1.15}, Cell{ChainKind::LMH, 0.5, 12, 0.35, 0.65},
                        Cell{ChainKind::MH, 1.0, 10, 1.3, 1.7}, Cell{ChainKind::LMH, 1.0, 10, 0.55, 0.95}}) {
    ScalingConfig cfg;
    cfg.kind = c.kind;
    cfg.beta = c.beta;
    cfg.h = 0.0;
    for (int p = 6; p <= c.top; ++p) cfg.n_list.push_back(std::int64_t{1} << p);
    cfg.seed = kSeed;
    cfg.threads = resolve_threads(0);
    const auto start = std::chrono::steady_clock::now();
    const ScalingReport rep = scaling_study(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool exhausted = false;
    for (const auto& row : rep.rows) exhausted = exhausted || row.budget_exhausted;
    o.check(rep.slope >= c.lo && rep.slope <= c.hi && !exhausted,
            std::string(to_string(c.kind)) + " " + to_string(rep.regime) + " slope " + fmt("%.4f", rep.slope) + " ci [" +
                fmt("%.3f", rep.ci_lo) + ", " + fmt("%.3f", rep.ci_hi) + "] in [" + fmt("%g", c.lo) + ", " +
                fmt("%g", c.hi) + "]" + (exhausted ? " (budget exhausted)" : "") + fmt(", %.0f s", secs));
  }
  return o;
}

// criterion 6
Outcome limit_convergence() {
  Outcome o;
  for (double beta : {0.5, 1.0})
    for (ChainKind k : {ChainKind::MH, ChainKind::LMH}) {
      const LimitReport rep = limit_check(k, beta, 0.0, {100, 1000, 10000});
      std::string vals;
      for (const auto& r : rep.rows) vals += " " + fmt("%.4g", r.ks);
      o.check(rep.strictly_decreasing(), std::string(to_string(k)) + " " + to_string(rep.regime) + " KS:" + vals);
    }
  return o;
}

// criterion 7
Outcome ergodicity() {
  Outcome o;
  LyapunovGrid g1;
  g1.y1 = 1.0;
  const auto lin = lyapunov_drift_check(ZigZagSpec::linear(1.0), g1);
  o.check(lin.sup_ratio < 0.0, "linear sup LV/V " + fmt("%.4g", lin.sup_ratio) + " on |y| >= 1");
  LyapunovGrid g2;
  g2.y1 = 2.0;
  const auto cub = lyapunov_drift_check(ZigZagSpec::cubic(1.0 / 3.0), g2);
  o.check(cub.sup_ratio < 0.0, "cubic sup LV/V " + fmt("%.4g", cub.sup_ratio) + " on |y| >= 2");

  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i);
  const auto rep = ergodicity_decay(ZigZagSpec::linear(1.0), PointStart{5.0, 1}, grid, 2000, 10);
  const double cut = 2.0 * rep.noise_floor;
  std::string breaks;
  for (std::size_t i = 1; i < rep.ks.size(); ++i)
    if (rep.ks[i] > cut && rep.ks[i] > rep.ks[i - 1])
      breaks += " t=" + fmt("%g", rep.t[i]) + " (" + fmt("%.4f", rep.ks[i - 1]) + " -> " + fmt("%.4f", rep.ks[i]) + ")";
  o.check(breaks.empty(), "KS from (5, +1) nonincreasing above 2x noise floor " + fmt("%.4f", cut) +
                              (breaks.empty() ? std::string() : ", increases at" + breaks));
  o.check(rep.ks.back() < cut, "KS at t=20 " + fmt("%.4f", rep.ks.back()) + " below 2x noise floor");
  o.check(rep.rate > 0.0, "fitted decay rate " + fmt("%.4f", rep.rate));
  return o;
}

// criterion 8
Outcome determinism() {
  Outcome o;
  auto run = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return std::pair{code, out.str()};
  };
  auto without_threads = [](const std::string& s) {
    std::istringstream is(s);
    std::string o, l;
    while (std::getline(is, l))
      if (l.rfind("# config.threads=", 0) != 0) o += l + "\n";
    return o;
  };
  const std::vector<std::vector<std::string>> commands = {
      {"sample-mh", "--seed", "5", "--n", "1000", "--t-end", "5", "--replicas", "4"},
      {"sample-lmh", "--seed", "5", "--n", "1000", "--t-end", "5", "--replicas", "4", "--poissonized"},
      {"simulate-zigzag", "--seed", "5", "--rate", "cubic", "--t-end", "1000"},
      {"scaling-study", "--seed", "5", "--chain", "lmh", "--n", "32,64,128,256", "--replicas", "4"},
      {"limit-check", "--regime", "critical"},
  };
  for (const auto& cmd : commands) {
    const auto a = run(cmd), b = run(cmd);
    o.check(a.first == 0 && a.second == b.second, cmd.front() + " repeated output byte-identical");
    auto one = cmd, four = cmd;
    one.insert(one.end(), {"--threads", "1"});
    four.insert(four.end(), {"--threads", "4"});
    const auto c = run(one), d = run(four);
    o.check(c.first == 0 && without_threads(c.second) == without_threads(d.second),
            cmd.front() + " identical under 1 and 4 threads");
  }
  return o;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* title;
    Outcome (*fn)();
  };
  const Item items[] = {
      {1, "exact invariance suite", exact_invariance},
      {2, "fixed point and constants", fixed_point_and_constants},
      {3, "lemma suprema", lemma_suprema},
      {4, "zig-zag stationarity", zigzag_stationarity},
      {5, "scaling exponents", scaling_exponents},
      {6, "limit-law convergence", limit_convergence},
      {7, "ergodicity diagnostics", ergodicity},
      {8, "determinism", determinism},
  };
  int failed = 0;
  for (const Item& it : items) {
    Outcome o;
    try {
      o = it.fn();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", it.id, it.title);
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed ? 1 : 0;
}
