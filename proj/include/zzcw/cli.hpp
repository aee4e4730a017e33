#pragma once

// Command-line front end. run() returns 0 on success, 1 on a validation
// error and 2 when a verification command finds a tolerance failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zzcw/analysis.hpp"
#include "zzcw/chains.hpp"
#include "zzcw/curie_weiss.hpp"
#include "zzcw/io.hpp"
#include "zzcw/lemmas.hpp"
#include "zzcw/oracle.hpp"
#include "zzcw/parallel.hpp"
#include "zzcw/zigzag.hpp"

namespace zzcw::cli {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string output;
  std::string format = "csv";
};

struct ModelOptions {
  std::string regime;  // empty, supercritical or critical
  std::optional<double> beta;
  std::optional<double> h;
};

/// (beta, h) from an optional regime name and explicit values.
inline std::pair<double, double> resolve_model(const ModelOptions& m) {
  double beta = 0.5, h = 0.0;
  if (m.regime == "critical") beta = 1.0;
  else if (!m.regime.empty() && m.regime != "supercritical")
    throw ValidationError("--regime must be supercritical or critical");
  if (m.beta) beta = *m.beta;
  if (m.h) h = *m.h;
  const Regime r = classify_regime(beta, h);
  if (!m.regime.empty() && m.regime != to_string(r))
    throw ValidationError("--regime " + m.regime + " does not match beta=" + io::format_double(beta) +
                          ", h=" + io::format_double(h));
  return {beta, h};
}

inline ChainKind parse_chain(const std::string& s) {
  if (s == "mh") return ChainKind::MH;
  if (s == "lmh") return ChainKind::LMH;
  throw ValidationError("--chain must be mh or lmh");
}

namespace detail {

inline void add_common(CLI::App* sub, Common& c, std::string& config_path, bool needs_seed) {
  // read by expand_config before parsing; declared so that it shows in help and parses
  sub->add_option("--config", config_path, "key = value file; command-line flags take precedence");
  auto* seed = sub->add_option("--seed", c.seed, "master seed of the counter-based streams");
  if (needs_seed) seed->description("master seed (required)");
  sub->add_option("--threads", c.threads, "worker threads, 0 = all cores")->capture_default_str();
  sub->add_option("--output,-o", c.output, "output file (default stdout)");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

inline void add_model(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--regime", m.regime, "supercritical (beta=0.5) or critical (beta=1, h=0)");
  sub->add_option("--beta", m.beta, "inverse temperature");
  sub->add_option("--h", m.h, "external field");
}

/// Resolved options of a subcommand, in declaration order.
inline std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config" || names.front() == "output") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    out.emplace_back(names.front(), value);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Splices the key = value lines of a --config file into args right after the
/// subcommand, skipping keys that are also given as flags.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::size_t sub_pos = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (sub_pos == args.size() && !args[i].empty() && args[i][0] != '-') sub_pos = i;
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || sub_pos == args.size()) return args;
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read --config " + path);
  auto given = [&](const std::string& key) {
    for (const auto& a : args)
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> injected;
  std::string line;
  for (int lineno = 1; std::getline(f, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") throw ValidationError(path + ":" + std::to_string(lineno) + ": bad key");
    if (!given(key)) injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, args.end());
  return out;
}

inline std::vector<std::int64_t> parse_n_list(const std::vector<std::string>& raw) {
  std::vector<std::int64_t> ns;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      const double v = std::stod(tok);  // accepts 1e4
      if (!(v >= 2.0) || v != std::floor(v) || v > 1e12) throw ValidationError("--n values must be integers >= 2");
      ns.push_back(static_cast<std::int64_t>(v));
    }
  }
  return ns;
}

inline std::vector<double> parse_real_list(const std::vector<std::string>& raw, const char* flag) {
  std::vector<double> xs;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      try {
        xs.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ValidationError(std::string(flag) + " expects numbers, got '" + tok + "'");
      }
    }
  }
  return xs;
}

}  // namespace detail

struct Outcome {
  io::Document doc;
  int code = 0;
};

// --- sample-mh / sample-lmh ----------------------------------------------------

struct SampleOptions {
  ModelOptions model;
  std::int64_t n = 0;
  double t_end = 0.0;
  std::optional<double> alpha;
  std::optional<double> gamma_override;
  std::size_t replicas = 1;
  std::uint64_t stride = 1;
  bool poissonized = false;
  std::string init = "stationary";
  int j0 = 1;
  std::uint64_t max_steps = std::uint64_t{1} << 40;
};

inline Outcome run_sample(ChainKind kind, const SampleOptions& o, const Common& c) {
  const auto [beta, h] = resolve_model(o.model);
  const ModelParams params = o.gamma_override ? ModelParams::with_gamma_override(beta, h, o.n, *o.gamma_override)
                                              : ModelParams::make(beta, h, o.n);
  const Model model(params);
  const double alpha = o.alpha.value_or(default_alpha(kind, params.regime));
  if (o.replicas < 1) throw ValidationError("--replicas must be >= 1");
  if (o.j0 != 1 && o.j0 != -1) throw ValidationError("--j0 must be 1 or -1");
  TrajectoryOptions topt;
  topt.record_stride = o.stride;
  topt.poissonized = o.poissonized;
  topt.alpha_override = o.alpha.has_value();
  topt.max_steps = o.max_steps;

  ChainStart start;
  if (o.init == "stationary") {
    start = StationaryStart{std::make_shared<const MagnetizationLaw>(exact_stationary_law(model))};
  } else {
    std::int64_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoll(o.init, &used);
      if (used != o.init.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError("--init must be 'stationary' or a lattice index k in [0, n]");
    }
    if (k < 0 || k > o.n) throw ValidationError("--init lattice index outside [0, n]");
    start = FixedStart{k, o.j0};
  }

  std::vector<Trajectory> runs(o.replicas);
  parallel_for_index(o.replicas, c.threads, [&](std::size_t r) {
    StreamRng rng(*c.seed, static_cast<std::uint32_t>(r), Purpose::Chain);
    runs[r] = run_trajectory(kind, model, alpha, o.t_end, start, rng, topt);
  });

  Outcome out;
  out.doc.table.columns = {"replica", "t", "eta", "j"};
  std::vector<double> etas;
  std::uint64_t steps = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    steps += runs[r].steps;
    for (const auto& rec : runs[r].records) {
      out.doc.table.add({static_cast<std::int64_t>(r), rec.t, rec.eta, static_cast<std::int64_t>(rec.j)});
      etas.push_back(rec.eta);
    }
  }
  const EmpiricalSummary s(etas);
  out.doc.summary = {{"chain", std::string(to_string(kind))},
                     {"regime", std::string(to_string(params.regime))},
                     {"gamma", params.gamma},
                     {"alpha", alpha},
                     {"steps", static_cast<std::int64_t>(steps)},
                     {"records", static_cast<std::int64_t>(etas.size())},
                     {"eta_mean", s.mean()},
                     {"eta_variance", s.variance()}};
  if (!params.gamma_overridden) {
    const LimitingLaw limit = limiting_law(model);
    out.doc.summary.emplace_back("ks_vs_limit", ks_distance(s, [&](double y) { return limit.cdf(y); }));
  }
  if (params.gamma_overridden) out.doc.watermarks.push_back("gamma-override=" + io::format_double(params.gamma));
  if (topt.alpha_override) out.doc.watermarks.push_back("alpha-override=" + io::format_double(alpha));
  return out;
}

// --- simulate-zigzag ------------------------------------------------------------

struct ZigZagOptions {
  ModelOptions model;
  std::string rate = "linear";
  double l = 1.0;
  double c = 1.0 / 3.0;
  double a = 1.0;
  double y0 = 0.0;
  int j0 = 1;
  double t_end = 0.0;
  std::uint64_t max_events = kDefaultMaxEvents;
  std::string events_out;
  std::string events_format = "csv";
  std::size_t bins = 200;
};

inline double stationary_variance(const ZigZagSpec& spec) {
  if (const auto* r = std::get_if<LinearRate>(&spec.rate)) return spec.a / r->l;
  const auto& r = std::get<CubicRate>(spec.rate);
  const double k = r.c / (4.0 * spec.a);
  return std::tgamma(0.75) / (std::tgamma(0.25) * std::sqrt(k));
}

inline Outcome run_zigzag(const ZigZagOptions& o, const Common& c) {
  ZigZagSpec spec;
  if (o.rate == "linear") spec = ZigZagSpec::linear(o.l, o.a);
  else if (o.rate == "cubic") spec = ZigZagSpec::cubic(o.c, o.a);
  else if (o.rate == "model") {
    const auto [beta, h] = resolve_model(o.model);
    spec = ZigZagSpec::from_model(Model(ModelParams::make(beta, h, 2)));
  } else {
    throw ValidationError("--rate must be linear, cubic or model");
  }
  if (o.j0 != 1 && o.j0 != -1) throw ValidationError("--j0 must be 1 or -1");
  if (o.bins < 1) throw ValidationError("--bins must be >= 1");
  StreamRng rng(*c.seed, 0, Purpose::ZigZag);
  const ZigZagEventLog log = simulate(spec, o.y0, o.j0, o.t_end, rng, o.max_events);
  if (!o.events_out.empty()) {
    std::ofstream f(o.events_out, std::ios::binary);
    if (!f) throw ValidationError("cannot open --events-out " + o.events_out);
    if (o.events_format == "binary") write_event_log_binary(f, log);
    else write_event_log_csv(f, log);
  }
  const PotentialProfile profile = stationary_profile(spec);
  const double lo = profile.quantile(1e-6), hi = profile.quantile(1.0 - 1e-6);
  const double ks = occupation_ks(log, profile.cdf, std::min(lo, -1e-9), std::max(hi, 1e-9));
  const PathMoments m = path_moments(log);
  const std::vector<double> g = occupation_cdf_grid(log, lo, hi, o.bins);

  Outcome out;
  out.doc.table.columns = {"bin_lo", "bin_hi", "occupation_density", "stationary_density"};
  const double width = (hi - lo) / static_cast<double>(o.bins);
  for (std::size_t i = 0; i < o.bins; ++i) {
    const double x0 = lo + width * static_cast<double>(i), x1 = x0 + width;
    out.doc.table.add({x0, x1, (g[i + 1] - g[i]) / width, (profile.cdf(x1) - profile.cdf(x0)) / width});
  }
  out.doc.summary = {{"events", static_cast<std::int64_t>(log.events())},
                     {"y_end", log.y_end},
                     {"checksum_error", std::abs(reconstruct_terminal(log) - log.y_end)},
                     {"time_mean", m.mean},
                     {"time_mean_stderr", path_mean_stderr(log)},
                     {"time_variance", m.variance},
                     {"stationary_variance", stationary_variance(spec)},
                     {"ks_vs_stationary", ks}};
  return out;
}

// --- verify-oracle ----------------------------------------------------------------

struct OracleOptions {
  std::vector<std::string> n{"8"};
  std::vector<std::string> beta{"0.5"};
  std::vector<std::string> h{"0"};
  double tol = 1e-13;
};

inline Outcome run_oracle(const OracleOptions& o) {
  const auto ns = detail::parse_n_list(o.n);
  const auto betas = detail::parse_real_list(o.beta, "--beta");
  const auto hs = detail::parse_real_list(o.h, "--h");
  Outcome out;
  out.doc.table.columns = {"n", "beta", "h", "mh_row_sum", "lmh_row_sum", "detailed_balance", "skew_detailed_balance",
                           "lifted_invariance", "replica_identity", "generic_mh_mismatch", "ordering_lift_mismatch",
                           "witness_gap", "spin_enumeration", "power_iteration", "pass"};
  const bool single = betas.size() * hs.size() == 1;
  std::int64_t cells = 0, failed = 0;
  for (auto n : ns) {
    if (n > 256) throw ValidationError("verify-oracle: n must be <= 256");
    for (double beta : betas)
      for (double h : hs) {
        std::optional<Model> model;
        try {
          model.emplace(ModelParams::make(beta, h, n));
        } catch (const RegimeError&) {
          if (single) throw;
          continue;  // unsupported grid corner
        }
        const OracleReport r = verify_oracle(*model);
        const bool ok = r.passed(o.tol);
        ++cells;
        failed += !ok;
        out.doc.table.add({n, beta, h, r.mh_row_sum, r.lmh_row_sum, r.detailed_balance, r.skew_detailed_balance,
                           r.lifted_invariance, r.replica_identity, r.generic_mh_mismatch, r.ordering_lift_mismatch,
                           r.witness ? r.witness->gap : 0.0,
                           r.spin_enumeration_mismatch ? io::Cell(*r.spin_enumeration_mismatch) : io::Cell(std::string("")),
                           r.power_iteration_error ? io::Cell(*r.power_iteration_error) : io::Cell(std::string("")), ok});
      }
  }
  if (cells == 0) throw ValidationError("verify-oracle: no supported (beta, h) cell in the grid");
  out.doc.summary = {{"cells", cells}, {"failed", failed}, {"tolerance", o.tol}};
  out.code = failed ? 2 : 0;
  return out;
}

// --- scaling-study ------------------------------------------------------------------

struct ScalingOptions {
  ModelOptions model;
  std::string chain = "mh";
  std::vector<std::string> n;
  std::size_t replicas = 8;
  std::uint64_t max_steps = std::uint64_t{1} << 34;
  double records_per_unit = 16.0;
  std::size_t bootstrap = 200;
};

inline Outcome run_scaling(const ScalingOptions& o, const Common& c) {
  const auto [beta, h] = resolve_model(o.model);
  ScalingConfig cfg;
  cfg.kind = parse_chain(o.chain);
  cfg.beta = beta;
  cfg.h = h;
  cfg.n_list = detail::parse_n_list(o.n);
  if (cfg.n_list.empty()) {
    const int top = classify_regime(beta, h) == Regime::Critical ? 10 : 12;
    for (int p = 6; p <= top; ++p) cfg.n_list.push_back(std::int64_t{1} << p);
  }
  cfg.replicas = o.replicas;
  cfg.max_steps = o.max_steps;
  cfg.records_per_unit_time = o.records_per_unit;
  cfg.bootstrap_resamples = o.bootstrap;
  cfg.seed = *c.seed;
  cfg.threads = c.threads;
  const ScalingReport rep = scaling_study(cfg);
  Outcome out;
  out.doc.table.columns = {"n", "tau", "stderr", "slope", "ci_lo", "ci_hi", "stride", "steps_per_replica",
                           "budget_exhausted", "too_short"};
  for (const auto& row : rep.rows)
    out.doc.table.add({row.n, row.tau, row.stderr_tau, rep.slope, rep.ci_lo, rep.ci_hi,
                       static_cast<std::int64_t>(row.stride), static_cast<std::int64_t>(row.steps_per_replica),
                       row.budget_exhausted, row.too_short});
  out.doc.summary = {{"chain", std::string(to_string(rep.kind))},
                     {"regime", std::string(to_string(rep.regime))},
                     {"observable", std::string(rep.regime == Regime::Critical ? "eta^2" : "eta")},
                     {"slope", rep.slope},
                     {"ci_lo", rep.ci_lo},
                     {"ci_hi", rep.ci_hi}};
  return out;
}

// --- limit-check --------------------------------------------------------------------

struct LimitOptions {
  ModelOptions model;
  std::string chain = "both";
  std::vector<std::string> n{"100,1000,10000"};
};

inline Outcome run_limit(const LimitOptions& o) {
  const auto [beta, h] = resolve_model(o.model);
  const auto ns = detail::parse_n_list(o.n);
  if (ns.empty()) throw ValidationError("--n needs at least one value");
  std::vector<ChainKind> kinds;
  if (o.chain == "both") kinds = {ChainKind::MH, ChainKind::LMH};
  else kinds = {parse_chain(o.chain)};
  Outcome out;
  out.doc.table.columns = {"chain", "n", "ks", "w1"};
  bool all = true;
  for (ChainKind k : kinds) {
    const LimitReport rep = limit_check(k, beta, h, ns);
    for (const auto& row : rep.rows) out.doc.table.add({std::string(to_string(k)), row.n, row.ks, row.w1});
    out.doc.summary.emplace_back(std::string(to_string(k)) + "_strictly_decreasing", rep.strictly_decreasing());
    all = all && rep.strictly_decreasing();
  }
  out.doc.summary.emplace_back("regime", std::string(to_string(classify_regime(beta, h))));
  out.code = all ? 0 : 2;
  return out;
}

// --- lemma-suite --------------------------------------------------------------------

struct LemmaOptions {
  std::vector<std::string> n{"100,1000,10000,100000"};
  std::vector<std::string> taylor_n{"100,10000,1000000"};
  double beta = 0.5;
  double h = 0.0;
};

inline Outcome run_lemmas(const LemmaOptions& o) {
  const auto ns = detail::parse_n_list(o.n);
  const auto tns = detail::parse_n_list(o.taylor_n);
  if (classify_regime(o.beta, o.h) != Regime::Supercritical)
    throw ValidationError("lemma-suite: --beta/--h select the supercritical cell (beta < 1)");
  std::vector<LemmaTable> tables;
  for (const auto& spec : standard_lemma_specs(o.beta, o.h)) tables.push_back(lemma_table(spec, ns));
  LemmaTable taylor = lemma_table(taylor_lemma_spec(o.beta, o.h), tns);
  taylor.threshold = std::numeric_limits<double>::infinity();
  tables.push_back(std::move(taylor));

  Outcome out;
  out.doc.table.columns = {"check", "regime", "beta", "h", "delta", "n", "value", "threshold"};
  std::int64_t failed = 0;
  for (const auto& t : tables) {
    for (const auto& row : t.rows) out.doc.table.add({t.name, t.regime, t.beta, t.h, t.delta, row.n, row.value, t.threshold});
    out.doc.summary.emplace_back(t.name + "_monotone", t.monotone_decreasing());
    out.doc.summary.emplace_back(t.name + "_below_threshold", t.final_below_threshold());
    failed += !t.passed();
  }
  out.doc.summary.emplace_back("failed_checks", failed);
  out.code = failed ? 2 : 0;
  return out;
}

// --- entry point --------------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curie-Weiss MH / lifted MH chains and their zig-zag limits"};
  app.require_subcommand(1);
  // -h would collide with the field option --h
  app.set_help_flag("--help", "print this help and exit");

  Common common;
  std::string config_path;
  SampleOptions sample;
  ZigZagOptions zz;
  OracleOptions oracle;
  ScalingOptions scaling;
  LimitOptions limit;
  LemmaOptions lemmas;

  auto add_sample = [&](const char* name, const char* what) {
    auto* sub = app.add_subcommand(name, what);
    detail::add_common(sub, common, config_path, true);
    detail::add_model(sub, sample.model);
    sub->add_option("--n", sample.n, "number of spins")->required();
    sub->add_option("--t-end", sample.t_end, "time horizon in rescaled units")->required();
    sub->add_option("--alpha", sample.alpha, "jump-rate exponent (overrides the regime table)");
    sub->add_option("--replicas", sample.replicas, "independent replicas")->capture_default_str();
    sub->add_option("--stride", sample.stride, "record every this many steps")->capture_default_str();
    sub->add_flag("--poissonized", sample.poissonized, "Poisson jump times instead of t = step / n^alpha");
    sub->add_option("--init", sample.init, "'stationary' or a lattice index k")->capture_default_str();
    sub->add_option("--j0", sample.j0, "initial replica direction for a fixed start")->capture_default_str();
    sub->add_option("--max-steps", sample.max_steps, "hard cap on chain steps")->capture_default_str();
    sub->add_option("--gamma-override", sample.gamma_override, "exploration only")->group("");
    return sub;
  };
  auto* mh_cmd = add_sample("sample-mh", "Metropolis-Hastings trajectories");
  auto* lmh_cmd = add_sample("sample-lmh", "lifted Metropolis-Hastings trajectories");

  auto* zz_cmd = app.add_subcommand("simulate-zigzag", "exact zig-zag path and occupation density");
  detail::add_common(zz_cmd, common, config_path, true);
  detail::add_model(zz_cmd, zz.model);
  zz_cmd->add_option("--rate", zz.rate, "linear, cubic, or model (limit rates of --beta/--h)")->capture_default_str();
  zz_cmd->add_option("--l", zz.l, "linear rate slope")->capture_default_str();
  zz_cmd->add_option("--c", zz.c, "cubic rate coefficient")->capture_default_str();
  zz_cmd->add_option("--a", zz.a, "speed")->capture_default_str();
  zz_cmd->add_option("--y0", zz.y0, "initial position")->capture_default_str();
  zz_cmd->add_option("--j0", zz.j0, "initial direction")->capture_default_str();
  zz_cmd->add_option("--t-end", zz.t_end, "time horizon")->required();
  zz_cmd->add_option("--max-events", zz.max_events, "event budget")->capture_default_str();
  zz_cmd->add_option("--events-out", zz.events_out, "write the event log here");
  zz_cmd->add_option("--events-format", zz.events_format, "csv or binary")
      ->check(CLI::IsMember({"csv", "binary"}))
      ->capture_default_str();
  zz_cmd->add_option("--bins", zz.bins, "density comparison bins")->capture_default_str();

  auto* oracle_cmd = app.add_subcommand("verify-oracle", "dense-matrix checks for small n");
  detail::add_common(oracle_cmd, common, config_path, false);
  oracle_cmd->add_option("--n", oracle.n, "n values (comma separated)")->capture_default_str();
  oracle_cmd->add_option("--beta", oracle.beta, "beta values (comma separated)")->capture_default_str();
  oracle_cmd->add_option("--h", oracle.h, "h values (comma separated)")->capture_default_str();
  oracle_cmd->add_option("--tol", oracle.tol, "residual tolerance")->capture_default_str();

  auto* scaling_cmd = app.add_subcommand("scaling-study", "autocorrelation time vs n and log-log slope");
  detail::add_common(scaling_cmd, common, config_path, true);
  detail::add_model(scaling_cmd, scaling.model);
  scaling_cmd->add_option("--chain", scaling.chain, "mh or lmh")->capture_default_str();
  scaling_cmd->add_option("--n", scaling.n, "n values (default 2^6..2^12, or 2^6..2^10 critical)");
  scaling_cmd->add_option("--replicas", scaling.replicas, "replicas per n")->capture_default_str();
  scaling_cmd->add_option("--max-steps", scaling.max_steps, "per-replica step budget")->capture_default_str();
  scaling_cmd->add_option("--records-per-unit", scaling.records_per_unit, "records per unit of limit time")
      ->capture_default_str();
  scaling_cmd->add_option("--bootstrap", scaling.bootstrap, "bootstrap resamples")->capture_default_str();

  auto* limit_cmd = app.add_subcommand("limit-check", "exact lattice law vs limiting law");
  detail::add_common(limit_cmd, common, config_path, false);
  detail::add_model(limit_cmd, limit.model);
  limit_cmd->add_option("--chain", limit.chain, "mh, lmh or both")->capture_default_str();
  limit_cmd->add_option("--n", limit.n, "n values (comma separated)")->capture_default_str();

  auto* lemma_cmd = app.add_subcommand("lemma-suite", "exact suprema of the one-step moment gaps");
  detail::add_common(lemma_cmd, common, config_path, false);
  lemma_cmd->add_option("--n", lemmas.n, "n values (comma separated)")->capture_default_str();
  lemma_cmd->add_option("--taylor-n", lemmas.taylor_n, "n values of the Taylor-gap check")->capture_default_str();
  lemma_cmd->add_option("--beta", lemmas.beta, "supercritical beta")->capture_default_str();
  lemma_cmd->add_option("--h", lemmas.h, "supercritical field")->capture_default_str();

  std::vector<std::string> expanded;
  try {
    expanded = detail::expand_config(args);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    const bool needs_seed = sub == mh_cmd || sub == lmh_cmd || sub == zz_cmd || sub == scaling_cmd;
    if (needs_seed && !common.seed) throw ValidationError(name + " requires --seed (sampling is never implicitly seeded)");
    if (common.threads == 0) common.threads = resolve_threads(0);
    const io::Format format = io::parse_format(common.format);
    Outcome result;
    if (sub == mh_cmd) result = run_sample(ChainKind::MH, sample, common);
    else if (sub == lmh_cmd) result = run_sample(ChainKind::LMH, sample, common);
    else if (sub == zz_cmd) result = run_zigzag(zz, common);
    else if (sub == oracle_cmd) result = run_oracle(oracle);
    else if (sub == scaling_cmd) result = run_scaling(scaling, common);
    else if (sub == limit_cmd) result = run_limit(limit);
    else result = run_lemmas(lemmas);
    result.doc.command = name;
    result.doc.config = detail::resolved_config(sub);
    if (common.output.empty()) {
      io::write(out, result.doc, format);
    } else {
      std::ofstream f(common.output, std::ios::binary);
      if (!f) throw ValidationError("cannot open --output " + common.output);
      io::write(f, result.doc, format);
    }
    if (result.code == 2) err << name << ": tolerance check failed\n";
    return result.code;
  } catch (const std::invalid_argument& e) {
    err << "error: " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    err << "error: " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const BudgetExceeded& e) {
    err << "error: " << name << ": " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace zzcw::cli
