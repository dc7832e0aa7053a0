#include <gtest/gtest.h>

#include <cmath>

#include <sinest/cascade.hpp>
#include <sinest/doa.hpp>
#include <sinest/signal.hpp>

using namespace sinest;

namespace {

ArrayScenario two_sources() {
  ArrayScenario s;
  s.p = 2;
  s.m_ant = 10;
  s.k = 10;
  s.angles_deg = RVec(2);
  s.angles_deg << 35.0, 37.0;
  s.snr_db = 10.0;
  s.sources = SourceModel::Gaussian;
  return s;
}

DoaConfig config() {
  DoaConfig cfg;
  cfg.p = 2;
  cfg.m_sub = 10;
  cfg.beta = 0.72;
  return cfg;
}

}  // namespace

TEST(Doa, AngleToFreqMapping) {
  EXPECT_NEAR(angle_to_freq(30.0), 0.25, 1e-15);
  EXPECT_NEAR(angle_to_freq(0.0), 0.0, 1e-15);
  EXPECT_NEAR(angle_to_freq(-30.0), -0.25, 1e-15);
  EXPECT_LT(angle_to_freq(89.9), 0.5);
  EXPECT_GT(angle_to_freq(-89.9), -0.5);
}

TEST(Doa, SynthesizeShapeAndDeterminism) {
  ArrayScenario s = two_sources();
  CMat a = synthesize_array(s, 5);
  ASSERT_EQ(a.rows(), 10);
  ASSERT_EQ(a.cols(), 10);
  CMat b = synthesize_array(s, 5);
  EXPECT_EQ((a - b).norm(), 0.0);
  CMat c = synthesize_array(s, 6);
  EXPECT_GT((a - c).norm(), 0.0);
}

TEST(Doa, PartsComposeExactly) {
  ArrayScenario s = two_sources();
  s.snr_db = 7.0;
  auto [clean, w] = synthesize_array_parts(s, 11);
  CMat x = synthesize_array(s, 11);
  CMat want = clean + std::sqrt(s.noise_sigma2()) * w;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) EXPECT_EQ(x(i, j), want(i, j));
  s.snr_db = kInf;
  CMat noiseless = synthesize_array(s, 11);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) EXPECT_EQ(noiseless(i, j), clean(i, j));
}

TEST(Doa, CleanColumnsLiveInSteeringSpan) {
  ArrayScenario s = two_sources();
  auto [clean, w] = synthesize_array_parts(s, 12);
  RVec f(2);
  f << angle_to_freq(35.0), angle_to_freq(37.0);
  RVec wrapped(2);
  for (int i = 0; i < 2; ++i) wrapped[i] = f[i] - std::floor(f[i]);
  EXPECT_LT(stacked_cost(clean, wrapped), 1e-18 * clean.squaredNorm());
}

TEST(Doa, ConstantModulusSourcesHaveUnitPower) {
  ArrayScenario s = two_sources();
  s.p = 1;
  s.angles_deg = RVec(1);
  s.angles_deg << 20.0;
  s.sources = SourceModel::ConstantModulus;
  auto [clean, w] = synthesize_array_parts(s, 13);
  // one unit-modulus source through a unit-gain array: every column has
  // squared norm m_ant
  for (int t = 0; t < s.k; ++t)
    EXPECT_NEAR(clean.col(t).squaredNorm(), double(s.m_ant), 1e-9);
}

TEST(Doa, SnapshotCovarianceMatchesTimeSeriesOnOneColumn) {
  ArrayScenario s = two_sources();
  s.k = 1;
  CMat xs = synthesize_array(s, 21);
  auto [r, count] = snapshot_covariance(xs, 6);
  CVec col = xs.col(0);
  CMat want = fb_covariance(col, 6);
  EXPECT_EQ((r - want).norm(), 0.0);
  EXPECT_EQ(count, 10 - 6 + 1);
}

TEST(Doa, SnapshotCountIncludesSmoothing) {
  ArrayScenario s = two_sources();
  s.k = 3;
  CMat xs = synthesize_array(s, 22);
  auto [r, count] = snapshot_covariance(xs, 6);
  EXPECT_EQ(count, 3 * 5);
  ASSERT_EQ(r.rows(), 6);
  EXPECT_THROW(snapshot_covariance(xs, 11), std::invalid_argument);
  EXPECT_THROW(snapshot_covariance(xs, 0), std::invalid_argument);
}

TEST(Doa, ZeroPadSnapshotsShape) {
  CMat xs = CMat::Ones(4, 3);
  CMat y = zero_pad_snapshots(xs, 2);
  ASSERT_EQ(y.rows(), 8);
  ASSERT_EQ(y.cols(), 3);
  EXPECT_EQ(y.topRows(2).norm(), 0.0);
  EXPECT_EQ(y.bottomRows(2).norm(), 0.0);
  EXPECT_EQ((y.middleRows(2, 4) - xs).norm(), 0.0);
}

TEST(Doa, StackedCostSumsPerColumnCosts) {
  ArrayScenario s = two_sources();
  s.k = 4;
  CMat xs = synthesize_array(s, 23);
  RVec f(2);
  f << 0.28, 0.31;
  double want = 0.0;
  for (int t = 0; t < 4; ++t) want += likelihood_cost(xs.col(t), f);
  EXPECT_NEAR(stacked_cost(xs, f), want, 1e-10 * std::max(1.0, want));
}

TEST(Doa, StackedGradientMatchesCentralDifference) {
  ArrayScenario s = two_sources();
  CMat xs = synthesize_array(s, 24);
  RVec f(2);
  f << 0.27, 0.33;
  RVec g = stacked_gradient(xs, f);
  const double h = 1e-6;
  for (int k = 0; k < 2; ++k) {
    RVec fp = f, fm = f;
    fp[k] += h;
    fm[k] -= h;
    double fd = (stacked_cost(xs, fp) - stacked_cost(xs, fm)) / (2.0 * h);
    EXPECT_NEAR(g[k], fd, 1e-4 * std::max(std::abs(fd), 1.0));
  }
}

TEST(Doa, NoiselessEstimateExact) {
  ArrayScenario s = two_sources();
  s.snr_db = kInf;
  CMat xs = synthesize_array(s, 25);
  DoaEstimate e = doa_estimate(xs, config());
  ASSERT_EQ(e.angles_deg.size(), 2);
  EXPECT_NEAR(e.angles_deg[0], 35.0, 1e-6);
  EXPECT_NEAR(e.angles_deg[1], 37.0, 1e-6);
  EXPECT_FALSE(e.clamped);
  EXPECT_LE(e.angles_deg[0], e.angles_deg[1]);
}

TEST(Doa, NoiselessMlExact) {
  ArrayScenario s = two_sources();
  s.snr_db = kInf;
  CMat xs = synthesize_array(s, 26);
  DoaEstimate e = doa_ml(xs, config());
  EXPECT_NEAR(e.angles_deg[0], 35.0, 1e-5);
  EXPECT_NEAR(e.angles_deg[1], 37.0, 1e-5);
}

TEST(Doa, FreqWrapMapsToNegativeAngles) {
  FrequencyEstimate fe;
  fe.freqs = RVec(1);
  fe.freqs << 0.75;  // alias of -0.25 cycles, i.e. -30 degrees
  DoaEstimate e = detail::freqs_to_angles(fe);
  EXPECT_NEAR(e.spatial_freqs[0], -0.25, 1e-12);
  EXPECT_NEAR(e.angles_deg[0], -30.0, 1e-9);
  EXPECT_FALSE(e.clamped);
}

TEST(Doa, AnglesSortedEvenWhenWrappedFreqsAreNot) {
  FrequencyEstimate fe;
  fe.freqs = RVec(2);
  fe.freqs << 0.25, 0.9;  // 0.9 wraps to -0.1: smaller angle
  DoaEstimate e = detail::freqs_to_angles(fe);
  EXPECT_LT(e.angles_deg[0], e.angles_deg[1]);
  EXPECT_NEAR(e.spatial_freqs[0], -0.1, 1e-12);
  EXPECT_NEAR(e.spatial_freqs[1], 0.25, 1e-12);
}

TEST(Doa, SingleSnapshotMirrorsTimeSeriesCascade) {
  ArrayScenario s = two_sources();
  s.k = 1;
  s.snr_db = 8.0;
  CMat xs = synthesize_array(s, 27);
  DoaConfig dcfg = config();
  dcfg.m_sub = 6;
  DoaEstimate de = doa_estimate(xs, dcfg);

  CascadeConfig ccfg;
  ccfg.p = 2;
  ccfg.m = 6;
  ccfg.beta = 0.72;
  CascadeResult cr = cascade_estimate(xs.col(0), ccfg);
  EXPECT_EQ(de.branch, cr.trace.branch);
  RVec unwrapped(2);
  for (int i = 0; i < 2; ++i)
    unwrapped[i] = de.spatial_freqs[i] - std::floor(de.spatial_freqs[i]);
  std::sort(unwrapped.data(), unwrapped.data() + 2);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(unwrapped[i], cr.estimate.freqs[i], 1e-9);
}

TEST(Doa, ScenarioValidation) {
  ArrayScenario s = two_sources();
  s.angles_deg << 37.0, 35.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = two_sources();
  s.angles_deg << 35.0, 95.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = two_sources();
  s.k = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = two_sources();
  s.m_ant = 2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Doa, EstimateBranchesPopulate) {
  ArrayScenario s = two_sources();
  s.snr_db = 12.0;  // the snapshot-covariance gate opens later than one might guess
  DoaConfig cfg = config();
  int esprit_n = 0, other = 0;
  for (uint64_t t = 0; t < 60; ++t) {
    DoaEstimate e = doa_estimate(synthesize_array(s, t), cfg);
    (e.branch == Branch::Esprit ? esprit_n : other)++;
  }
  EXPECT_GT(esprit_n, 0);
  EXPECT_GT(other, 0);
}
