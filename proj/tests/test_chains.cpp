#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "zzcw/analysis.hpp"
#include "zzcw/chains.hpp"

using namespace zzcw;

namespace {

Model make_model(double beta, double h, std::int64_t n) { return Model(ModelParams::make(beta, h, n)); }

std::int64_t k_of_eta(const Model& m, double eta) {
  return static_cast<std::int64_t>(std::llround(0.5 * m.n() * (eta / m.eta_scale + m.m0() + 1.0)));
}

}  // namespace

TEST(Proposal, Examples) {
  const Model m = make_model(0.5, 0.0, 10);
  auto q = rw_proposal({5}, m);
  EXPECT_DOUBLE_EQ(q.q_plus, 0.5);
  EXPECT_DOUBLE_EQ(q.q_minus, 0.5);
  q = rw_proposal({10}, m);
  EXPECT_EQ(q.q_plus, 0.0);
  EXPECT_EQ(q.q_minus, 1.0);
  q = rw_proposal({0}, m);
  EXPECT_EQ(q.q_minus, 0.0);
  q = rw_proposal({7}, m);
  EXPECT_DOUBLE_EQ(q.q_plus, 0.3);
  EXPECT_DOUBLE_EQ(q.q_minus, 0.7);
  EXPECT_THROW(rw_proposal({11}, m), std::out_of_range);
}

TEST(MhProbs, InfiniteTemperatureIsProposal) {
  const Model m = make_model(0.0, 0.0, 20);
  for (std::int64_t k = 0; k <= 20; ++k) {
    const auto p = mh_probs({k}, m);
    const auto q = rw_proposal({k}, m);
    EXPECT_DOUBLE_EQ(p.p_plus, q.q_plus);
    EXPECT_DOUBLE_EQ(p.p_minus, q.q_minus);
  }
}

TEST(MhProbs, HandEvaluation) {
  const Model m = make_model(0.5, 0.0, 100);
  ASSERT_DOUBLE_EQ(m.eta(55), 1.0);
  const auto p = mh_probs({55}, m);
  EXPECT_NEAR(p.p_plus, 0.45, 1e-15);
  EXPECT_NEAR(p.p_minus, 0.55 * std::exp(-0.09), 1e-15);
}

TEST(MhProbs, RowsStochasticEverywhere) {
  for (double beta : {0.0, 0.3, 0.9, 1.0})
    for (double h : {0.0, 0.5, -1.5}) {
      if (beta == 1.0 && h != 0.0) continue;
      for (std::int64_t n : {2, 9, 128, 5000}) {
        const Model m = make_model(beta, h, n);
        for (std::int64_t k = 0; k <= n; ++k) {
          const auto p = mh_probs({k}, m);
          ASSERT_GE(p.p_plus, 0.0);
          ASSERT_GE(p.p_minus, 0.0);
          ASSERT_GE(p.hold, 0.0);
          ASSERT_LE(std::abs(p.p_plus + p.p_minus + p.hold - 1.0), 1e-14);
        }
        EXPECT_EQ(mh_probs({n}, m).p_plus, 0.0);
        EXPECT_EQ(mh_probs({0}, m).p_minus, 0.0);
      }
    }
}

TEST(MhStep, ThreeWaySplitAndBoundary) {
  const TransitionProbs p{0.2, 0.3, 0.5};
  EXPECT_EQ(mh_step({4}, p, 0.1).k, 5);
  EXPECT_EQ(mh_step({4}, p, 0.3).k, 3);
  EXPECT_EQ(mh_step({4}, p, 0.9).k, 4);
  EXPECT_EQ(mh_step({4}, TransitionProbs{0, 0, 1}, 0.0).k, 4);
  const Model m = make_model(0.0, 0.0, 10);
  StreamRng rng(1, 0, Purpose::Test);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(mh_step({0}, m, rng).k, 1);
}

TEST(MhStep, OneStepMomentsMatchExact) {
  const Model m = make_model(0.5, 0.0, 10000);
  const std::int64_t k = k_of_eta(m, 1.0);
  const auto p = mh_probs({k}, m);
  const double d = m.spacing();
  const double n = 10000.0;
  const double mean = n * d * (p.p_plus - p.p_minus);
  const double second = n * d * d * (p.p_plus + p.p_minus);
  StreamRng rng(4, 0, Purpose::Test);
  const int draws = 1000000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double inc = m.eta(mh_step({k}, m, rng).k) - m.eta(k);
    s1 += n * inc;
    s2 += n * inc * inc;
  }
  // per-draw sd of n*inc is n*d*sqrt(p+ + p-)
  const double sd1 = n * d * std::sqrt(p.p_plus + p.p_minus);
  EXPECT_NEAR(s1 / draws, mean, 4.0 * sd1 / std::sqrt(draws));
  EXPECT_NEAR(s2 / draws, second, 4.0 * n * d * d / std::sqrt(draws));
}

TEST(LmhProbs, InfiniteTemperatureSwitch) {
  const Model m = make_model(0.0, 0.0, 100);
  const std::int64_t k = 60;
  const double eta = m.eta(k);
  ASSERT_GT(eta, 0.0);
  const auto fw = lmh_probs({{k}, +1}, m);
  EXPECT_NEAR(fw.flip, std::pow(100.0, -0.5) * eta, 1e-15);
  const auto bw = lmh_probs({{k}, -1}, m);
  EXPECT_EQ(bw.flip, 0.0);
  EXPECT_THROW(lmh_probs({{k}, 0}, m), std::invalid_argument);
}

TEST(LmhProbs, TriplesSumToOne) {
  const Model m = make_model(0.8, 0.3, 300);
  for (std::int64_t k = 0; k <= 300; ++k)
    for (int j : {+1, -1}) {
      const auto p = lmh_probs({{k}, j}, m);
      ASSERT_NEAR(p.advance + p.flip + p.hold, 1.0, 1e-14);
      ASSERT_GE(p.hold, 0.0);
    }
}

TEST(LmhStep, OrderAndDeterministicAdvance) {
  EXPECT_EQ(lmh_step({{3}, +1}, LiftedProbs{1.0, 0.0, 0.0}, 0.999), (LiftedState{{4}, +1}));
  EXPECT_EQ(lmh_step({{3}, -1}, LiftedProbs{0.2, 0.3, 0.5}, 0.4), (LiftedState{{3}, +1}));
  EXPECT_EQ(lmh_step({{3}, -1}, LiftedProbs{0.2, 0.3, 0.5}, 0.6), (LiftedState{{3}, -1}));
}

TEST(LmhStep, ReplicaOccupancyIsBalanced) {
  const Model m = make_model(0.5, 0.0, 400);
  const auto law = std::make_shared<const MagnetizationLaw>(exact_stationary_law(m));
  StreamRng rng(8, 0, Purpose::Test);
  const LiftedState s0 = draw_start(StationaryStart{law}, m, rng);
  LmhChain chain(m, s0);
  // batch means over a long stationary run
  const int batches = 50, per_batch = 100000;
  std::vector<double> frac;
  for (int b = 0; b < batches; ++b) {
    int plus = 0;
    for (int i = 0; i < per_batch; ++i) {
      chain.step(rng);
      plus += chain.direction() > 0;
    }
    frac.push_back(static_cast<double>(plus) / per_batch);
  }
  const EmpiricalSummary s(frac);
  EXPECT_NEAR(s.mean(), 0.5, 4.0 * std::sqrt(s.variance() / batches) + 1e-3);
}

TEST(LmhDrift, RescaledOneStepDriftNearSpeed) {
  const Model m = make_model(0.5, 0.0, 1000000);
  const std::int64_t k = k_of_eta(m, 1.0);
  const auto p = lmh_probs({{k}, +1}, m);
  const double drift = std::sqrt(1e6) * m.spacing() * p.advance;
  EXPECT_NEAR(drift, m.constants.a, 0.01 * m.constants.a);
}

TEST(TaylorProbs, ZeroEtaGivesHalfProposal) {
  const Model m = make_model(0.5, 0.0, 100);
  for (int order = 0; order <= 3; ++order) {
    const auto t = taylor_probs({50}, m, order);
    EXPECT_DOUBLE_EQ(t.p_plus, 0.5);
    EXPECT_DOUBLE_EQ(t.p_minus, 0.5);
  }
  EXPECT_THROW(taylor_probs({50}, m, 4), std::invalid_argument);
}

TEST(TaylorProbs, NegativeEtaBranch) {
  const Model m = make_model(0.5, 0.0, 100);
  ASSERT_DOUBLE_EQ(m.eta(45), -1.0);
  const auto t = taylor_probs({45}, m, 1);
  EXPECT_NEAR(t.p_plus, 0.5 * (1.0 + 0.1) * (1.0 - 2 * 0.5 * 0.1), 1e-15);
  EXPECT_DOUBLE_EQ(t.p_minus, 0.5 * (1.0 - 0.1));
}

TEST(TaylorProbs, NonzeroFieldBranches) {
  const Model m = make_model(0.6, 0.4, 400);
  const double s = m.m0() + m.h();
  ASSERT_GT(s, 0.0);
  const std::int64_t k = 250;
  const double x = std::pow(400.0, -0.5) * m.eta(k);
  const auto t = taylor_probs({k}, m, 2);
  EXPECT_NEAR(t.p_plus, 0.5 * (1 - (m.m0() + x)), 1e-14);
  const double b = -2 * 0.6 * x;
  EXPECT_NEAR(t.p_minus, 0.5 * (1 + m.m0() + x) * std::exp(-2 * 0.6 * s) * (1 + b + b * b / 2), 1e-14);
}

TEST(Trajectory, ZeroHorizonGivesInitialRecord) {
  const Model m = make_model(0.5, 0.0, 100);
  StreamRng rng(1, 0, Purpose::Test);
  const auto tr = run_trajectory(ChainKind::MH, m, 1.0, 0.0, FixedStart{60, 1}, rng);
  ASSERT_EQ(tr.records.size(), 1u);
  EXPECT_EQ(tr.records[0].t, 0.0);
  EXPECT_DOUBLE_EQ(tr.records[0].eta, m.eta(60));
  EXPECT_EQ(tr.steps, 0u);
}

TEST(Trajectory, StepCountAndTimes) {
  const Model m = make_model(0.5, 0.0, 100);
  StreamRng rng(1, 0, Purpose::Test);
  TrajectoryOptions opt;
  opt.record_stride = 10;
  const auto tr = run_trajectory(ChainKind::LMH, m, 0.5, 3.05, FixedStart{50, -1}, rng, opt);
  EXPECT_EQ(tr.steps, 31u);  // ceil(3.05 * 10)
  ASSERT_EQ(tr.records.size(), 4u);
  EXPECT_DOUBLE_EQ(tr.records[3].t, 3.0);
  for (const auto& r : tr.records) EXPECT_TRUE(r.j == 1 || r.j == -1);
}

TEST(Trajectory, Validation) {
  const Model m = make_model(0.5, 0.0, 100);
  StreamRng rng(1, 0, Purpose::Test);
  EXPECT_THROW(run_trajectory(ChainKind::MH, m, 1.0, std::nan(""), FixedStart{}, rng), std::invalid_argument);
  EXPECT_THROW(run_trajectory(ChainKind::MH, m, 1.5, 1.0, FixedStart{}, rng), std::invalid_argument);
  TrajectoryOptions opt;
  opt.alpha_override = true;
  EXPECT_NO_THROW(run_trajectory(ChainKind::MH, m, 1.5, 0.01, FixedStart{50, 1}, rng, opt));
  opt.max_steps = 10;
  EXPECT_THROW(run_trajectory(ChainKind::MH, m, 1.0, 1.0, FixedStart{50, 1}, rng, opt), BudgetExceeded);
  EXPECT_EQ(default_alpha(ChainKind::MH, Regime::Critical), 1.5);
  EXPECT_EQ(default_alpha(ChainKind::LMH, Regime::Critical), 0.75);
}

TEST(Trajectory, PoissonizedGrid) {
  const Model m = make_model(0.5, 0.0, 100);
  StreamRng rng(2, 0, Purpose::Test);
  TrajectoryOptions opt;
  opt.poissonized = true;
  opt.record_stride = 100;
  const auto tr = run_trajectory(ChainKind::MH, m, 1.0, 50.0, FixedStart{50, 1}, rng, opt);
  ASSERT_EQ(tr.records.size(), 51u);
  // Poisson(5000) jumps
  EXPECT_NEAR(static_cast<double>(tr.steps), 5000.0, 4 * std::sqrt(5000.0));
}

TEST(Trajectory, StationarityPreserved) {
  const Model m = make_model(0.5, 0.0, 10000);
  const auto law = std::make_shared<const MagnetizationLaw>(exact_stationary_law(m));
  const std::size_t reps = 100000;
  std::vector<double> freq(law->size(), 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    StreamRng rng(22, static_cast<std::uint32_t>(r), Purpose::Chain);
    TrajectoryOptions opt;
    opt.record_stride = 500;
    const auto tr = run_trajectory(ChainKind::MH, m, 1.0, 0.05, StationaryStart{law}, rng, opt);
    ASSERT_EQ(tr.records.size(), 2u);
    freq[static_cast<std::size_t>(k_of_eta(m, tr.records.back().eta))] += 1.0 / reps;
  }
  // both laws live on the lattice, so the sup is attained at lattice points
  double emp = 0.0, ks = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k) {
    emp += freq[k];
    ks = std::max(ks, std::abs(emp - law->cumulative()[k]));
  }
  EXPECT_LT(ks, 1.5 * 1.36 / std::sqrt(static_cast<double>(reps)));
}
