#include <gtest/gtest.h>

#include <cmath>

#include <sinest/cascade.hpp>
#include <sinest/signal.hpp>

using namespace sinest;

namespace {

Scenario kt82() {
  Scenario s;
  s.p = 2;
  s.n = 25;
  s.frequencies = RVec(2);
  s.frequencies << 0.5, 0.52;
  s.amplitudes = RVec(2);
  s.amplitudes << 1.0, 1.0;
  s.phases = RVec(2);
  s.phases << 0.0, 0.0;
  s.snr_db = 10.0;
  return s;
}

Scenario three_sin() {
  Scenario s;
  s.p = 3;
  s.n = 25;
  s.frequencies = RVec(3);
  s.frequencies << 0.35, 0.5, 0.52;
  s.amplitudes = RVec(3);
  s.amplitudes << 1.0, 0.5, 0.53;
  s.phases = RVec(3);
  s.phases << 0.0, std::numbers::pi / 4.0, 0.0;
  s.snr_db = 10.0;
  return s;
}

CascadeConfig config(int p) {
  CascadeConfig cfg;
  cfg.p = p;
  cfg.m = 18;
  cfg.beta = 0.72;
  return cfg;
}

}  // namespace

TEST(Cascade, NoiselessPairExact) {
  CVec x = synthesize_noiseless(kt82());
  CascadeResult r = cascade_estimate(x, config(2));
  EXPECT_NEAR(r.estimate.freqs[0], 0.5, 1e-9);
  EXPECT_NEAR(r.estimate.freqs[1], 0.52, 1e-9);
  EXPECT_EQ(r.estimate.branch, Branch::Esprit);
  ASSERT_TRUE(r.estimate.cost.has_value());
  EXPECT_LT(*r.estimate.cost, 1e-15);
  ASSERT_TRUE(r.trace.gamma_esprit.has_value());
  // noiseless data leaves only rounding in the noise eigenvalues, so the
  // estimated snr margin is enormous
  EXPECT_GT(r.trace.gamma_esprit->gamma_db, 50.0);
  ASSERT_TRUE(r.trace.esprit_freqs.has_value());
  EXPECT_FALSE(r.trace.gamma_ac.has_value());
}

TEST(Cascade, NoiselessTripleExact) {
  Scenario s = three_sin();
  CVec x = synthesize_noiseless(s);
  CascadeResult r = cascade_estimate(x, config(3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.estimate.freqs[i], s.frequencies[i], 1e-6);
}

TEST(Cascade, RemoveReestimateRecoversThreeSinOutlier) {
  // worked example: the zero-padding estimate descends into a local
  // minimum; one removal pass then lands on the truth
  Scenario s = three_sin();
  CVec x = synthesize_noiseless(s);
  FrequencyEstimate ac = esprit_ac(x, 3, 18);
  FrequencyEstimate stuck = descend(x, ac.freqs);
  EXPECT_NEAR(*stuck.cost, 0.7313, 1e-2);

  // the pair re-estimate after notching the component left near 0.351
  int nearest = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(stuck.freqs[i] - 0.351) < std::abs(stuck.freqs[nearest] - 0.351))
      nearest = i;
  RVec keep(1);
  keep << stuck.freqs[nearest];
  FrequencyEstimate pair = esprit_ac(notch_filter(x, keep), 2, 18);
  EXPECT_NEAR(pair.freqs[0], 0.4982, 2e-3);
  EXPECT_NEAR(pair.freqs[1], 0.5225, 2e-3);

  CascadeTrace tr;
  FrequencyEstimate rr = remove_reestimate(x, stuck.freqs, config(3), &tr);
  EXPECT_LT(*rr.cost, *stuck.cost);
  FrequencyEstimate fin = descend(x, rr.freqs);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(fin.freqs[i], s.frequencies[i], 1e-6);
  EXPECT_GE(tr.rr_iterations, 1);
}

TEST(Cascade, RemoveReestimateCostsNonIncreasing) {
  Scenario s = three_sin();
  s.snr_db = 6.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    CVec x = synthesize(s, seed);
    FrequencyEstimate start = esprit_ac(x, 3, 18);
    CascadeTrace tr;
    FrequencyEstimate rr = remove_reestimate(x, start.freqs, config(3), &tr);
    ASSERT_FALSE(tr.rr_costs.empty());
    for (size_t i = 1; i < tr.rr_costs.size(); ++i)
      EXPECT_LE(tr.rr_costs[i], tr.rr_costs[i - 1] + 1e-12);
    EXPECT_NEAR(*rr.cost, tr.rr_costs.back(), 1e-12);
  }
}

TEST(Cascade, RemoveReestimateNeedsThreeComponents) {
  CVec x = synthesize(kt82(), 3);
  RVec f(2);
  f << 0.5, 0.52;
  EXPECT_THROW(remove_reestimate(x, f, config(2)), std::invalid_argument);
}

TEST(Cascade, BranchAgreesWithGateReports) {
  Scenario s = kt82();
  s.snr_db = 6.0;  // both sides of the plain-subspace gate are populated here
  CascadeConfig cfg = config(2);
  int seen_esprit = 0, seen_ac = 0, seen_rr = 0;
  for (uint64_t seed = 0; seed < 300; ++seed) {
    CascadeResult r = cascade_estimate(synthesize(s, seed), cfg);
    ASSERT_TRUE(r.trace.gamma_esprit.has_value());
    ASSERT_TRUE(r.estimate.cost.has_value());
    switch (r.trace.branch) {
      case Branch::Esprit:
        ++seen_esprit;
        EXPECT_GT(r.trace.gamma_esprit->gamma_db, 0.0);
        EXPECT_FALSE(r.trace.gamma_ac.has_value());
        break;
      case Branch::EspritAc:
        ++seen_ac;
        EXPECT_LE(r.trace.gamma_esprit->gamma_db, 0.0);
        ASSERT_TRUE(r.trace.gamma_ac.has_value());
        EXPECT_GT(r.trace.gamma_ac->gamma_db, 0.0);
        break;
      case Branch::EspritAcRemoveReestimate:
        // for p = 2 this labels the both-gates-failed path
        ++seen_rr;
        EXPECT_LE(r.trace.gamma_esprit->gamma_db, 0.0);
        ASSERT_TRUE(r.trace.gamma_ac.has_value());
        EXPECT_LE(r.trace.gamma_ac->gamma_db, 0.0);
        break;
    }
    EXPECT_EQ(r.estimate.branch, r.trace.branch);
  }
  EXPECT_GT(seen_esprit, 0);
  EXPECT_GT(seen_ac, 0);
}

TEST(Cascade, RawEspritBranchWhenRefinementDisabled) {
  Scenario s = kt82();
  s.snr_db = 20.0;
  CVec x = synthesize(s, 9);
  CascadeConfig cfg = config(2);
  cfg.descend_esprit_branch = false;
  CascadeResult r = cascade_estimate(x, cfg);
  ASSERT_EQ(r.trace.branch, Branch::Esprit);
  FrequencyEstimate raw = esprit(x, 2, 18);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(r.estimate.freqs[i], raw.freqs[i]);
  ASSERT_TRUE(r.estimate.cost.has_value());
  EXPECT_EQ(*r.estimate.cost, likelihood_cost(x, raw.freqs));

  cfg.descend_esprit_branch = true;
  CascadeResult refined = cascade_estimate(x, cfg);
  EXPECT_LE(*refined.estimate.cost, *r.estimate.cost + 1e-12);
}

TEST(Cascade, AcDescentVariantMatchesManualChain) {
  Scenario s = kt82();
  s.snr_db = 5.0;
  CVec x = synthesize(s, 17);
  CascadeConfig cfg = config(2);
  cfg.variant = CascadeVariant::EspritAcPlusDescentOnly;
  CascadeResult r = cascade_estimate(x, cfg);
  FrequencyEstimate manual = descend(x, esprit_ac(x, 2, 18).freqs);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(r.estimate.freqs[i], manual.freqs[i]);
  EXPECT_EQ(r.estimate.branch, Branch::EspritAc);
  EXPECT_FALSE(r.trace.gamma_esprit.has_value());  // no gating in the ablation
}

TEST(Cascade, EspritRrVariantPairIsDescendOnly) {
  CVec x = synthesize_noiseless(kt82());
  CascadeConfig cfg = config(2);
  cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
  CascadeResult r = cascade_estimate(x, cfg);
  EXPECT_NEAR(r.estimate.freqs[0], 0.5, 1e-9);
  EXPECT_NEAR(r.estimate.freqs[1], 0.52, 1e-9);
  EXPECT_EQ(r.estimate.branch, Branch::EspritAcRemoveReestimate);
}

TEST(Cascade, EspritRrVariantRunsRemovalForTriples) {
  Scenario s = three_sin();
  s.snr_db = 8.0;
  CVec x = synthesize(s, 23);
  CascadeConfig cfg = config(3);
  cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
  CascadeResult r = cascade_estimate(x, cfg);
  ASSERT_FALSE(r.trace.rr_costs.empty());
  ASSERT_TRUE(r.trace.esprit_freqs.has_value());
  // removal starts from plain esprit, never from the zero-padded estimate
  FrequencyEstimate raw = esprit(x, 3, 18);
  for (int i = 0; i < 3; ++i) EXPECT_EQ((*r.trace.esprit_freqs)[i], raw.freqs[i]);
}

TEST(Cascade, Preconditions) {
  CVec x = synthesize(kt82(), 4);
  CascadeConfig cfg = config(0);
  EXPECT_THROW(cascade_estimate(x, cfg), std::invalid_argument);
  cfg = config(2);
  cfg.m = 2;
  EXPECT_THROW(cascade_estimate(x, cfg), std::invalid_argument);
  cfg.m = 26;
  EXPECT_THROW(cascade_estimate(x, cfg), std::invalid_argument);
}

TEST(Cascade, GateSplitsBySnr) {
  Scenario s = kt82();
  CascadeConfig cfg = config(2);
  s.snr_db = 24.0;
  int high = 0;
  for (uint64_t t = 0; t < 50; ++t)
    high += cascade_estimate(synthesize(s, t), cfg).trace.branch == Branch::Esprit;
  s.snr_db = -2.0;
  int low = 0;
  for (uint64_t t = 0; t < 50; ++t)
    low += cascade_estimate(synthesize(s, t), cfg).trace.branch != Branch::Esprit;
  EXPECT_GE(high, 45);
  EXPECT_GE(low, 45);
}
