#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "zzcw/lemmas.hpp"

using namespace zzcw;

namespace {

Model make_model(double beta, double h, std::int64_t n) { return Model(ModelParams::make(beta, h, n)); }

const std::vector<std::int64_t> kLemmaNs = {1000, 10000, 100000};

}  // namespace

TEST(Window, IndicesBracketDelta) {
  const Model m = make_model(0.5, 0.2, 10000);
  const auto [lo, hi] = window_indices(m, 0.125);
  const double bound = std::pow(1e4, 0.125);
  ASSERT_LE(lo, hi);
  EXPECT_LE(std::abs(m.eta(lo)), bound);
  EXPECT_LE(std::abs(m.eta(hi)), bound);
  if (lo > 0) {
    EXPECT_GT(std::abs(m.eta(lo - 1)), bound);
  }
  if (hi < m.n()) {
    EXPECT_GT(std::abs(m.eta(hi + 1)), bound);
  }
}

TEST(Window, SupMatchesBruteForce) {
  const Model m = make_model(0.5, 0.0, 2000);
  const double bound = std::pow(2000.0, 0.125);
  double brute = 0.0;
  for (std::int64_t k = 0; k <= m.n(); ++k) {
    if (std::abs(m.eta(k)) > bound) continue;
    const auto p = mh_probs({k}, m);
    brute = std::max(brute, std::abs(4.0 * (p.p_plus + p.p_minus) - m.constants.sigma * m.constants.sigma));
  }
  EXPECT_DOUBLE_EQ(mh_second_moment_sup(m, 0.125), brute);
}

TEST(TaylorGap, DecreasesOverDecades) {
  const auto t = lemma_table(taylor_lemma_spec(), {100, 10000, 1000000});
  EXPECT_TRUE(t.monotone_decreasing());
  for (const auto& r : t.rows) EXPECT_GT(r.value, 0.0);
}

TEST(TaylorGap, ExactAtZeroOrderZeroField) {
  // p_k(0) = 1, so at eta = 0 the gap is only the exp-vs-Taylor error of phi_increment
  const Model m = make_model(0.5, 0.0, 100);
  const auto t = taylor_probs({50}, m, 3);
  const auto p = mh_probs({50}, m);
  EXPECT_NEAR(t.p_plus, p.p_plus, 1e-6);
}

TEST(Lemmas, SupercriticalTablesPass) {
  for (const auto& spec : standard_lemma_specs()) {
    if (spec.beta == 1.0) continue;
    const auto t = lemma_table(spec, kLemmaNs);
    EXPECT_EQ(t.regime, "supercritical");
    EXPECT_TRUE(t.passed()) << spec.name << ": " << t.rows.back().value;
  }
}

TEST(Lemmas, SupercriticalWithField) {
  for (const auto& spec : standard_lemma_specs(0.6, 0.4)) {
    if (spec.beta == 1.0) continue;
    EXPECT_TRUE(lemma_table(spec, kLemmaNs).passed()) << spec.name;
  }
}

TEST(Lemmas, CriticalTablesDecrease) {
  // the drift check in the critical window carries a 2/n^(1/4) term from the
  // exponent, so at n = 1e5 it sits just above 0.1; only the trend is unit-tested
  for (const auto& spec : standard_lemma_specs()) {
    if (spec.beta != 1.0) continue;
    const auto t = lemma_table(spec, kLemmaNs);
    EXPECT_EQ(t.regime, "critical");
    EXPECT_TRUE(t.monotone_decreasing()) << spec.name;
  }
}

TEST(Lemmas, CriticalDriftResidualTracksExponentTerm) {
  for (std::int64_t n : kLemmaNs) {
    const double v = mh_drift_cubic_sup(make_model(1.0, 0.0, n), 1.0 / 32.0);
    const double term = 2.0 * std::pow(static_cast<double>(n), -0.25);
    EXPECT_GT(v, 0.5 * term) << n;
    EXPECT_LT(v, 2.5 * term) << n;
  }
}

TEST(Lemmas, HigherMomentsVanish) {
  double prev = INFINITY;
  for (std::int64_t n : kLemmaNs) {
    const double v = mh_higher_moment_sup(make_model(0.5, 0.0, n), 3.0, 0.125);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(Lemmas, LmhDriftFailsOffWindow) {
  // at the boundary k = n the forward replica cannot advance
  const Model m = make_model(0.5, 0.0, 1000);
  const auto p = mh_probs({m.n()}, m);
  EXPECT_NEAR(std::abs(2.0 * p.p_plus - m.constants.a), m.constants.a, 1e-15);
  EXPECT_LT(lmh_drift_sup(m, 0.125), 0.5 * m.constants.a);
}
