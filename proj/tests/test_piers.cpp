#include <gtest/gtest.h>

#include "affectloop/piers.hpp"
#include "affectloop/random.hpp"
#include "oracles.hpp"

using namespace affectloop;
using namespace affectloop::piers;

namespace {

CalibrationRecord rec(Phase p, double sc, double hr, double zyg, double corr, double a, double v) {
  return {p, {0.0, sc, hr, zyg, corr}, {a, v}};
}

std::vector<CalibrationRecord> four_phases() {
  return {rec(Phase::RelaxingMusic, 2.0, 60.0, 0.20, 0.30, 3.0, 7.0),
          rec(Phase::WaldoScare, 5.0, 70.0, 0.10, 0.60, 4.0, 3.0),
          rec(Phase::FunnyVideo, 3.0, 85.0, 0.80, 0.10, 7.0, 9.0),
          rec(Phase::HorrorVideo, 8.0, 95.0, 0.05, 0.90, 9.0, 2.0)};
}

} // namespace

TEST(FitCalibration, TwoPointsGiveExactLine) {
  std::vector<CalibrationRecord> r{rec(Phase::RelaxingMusic, 1.0, 60.0, 0.2, 0.3, 3.0, 4.0),
                                   rec(Phase::HorrorVideo, 2.0, 90.0, 0.4, 0.1, 8.0, 6.0)};
  const auto m = fit_calibration(r);
  const auto& hr = m.model(Channel::HR);
  EXPECT_NEAR(hr.predict(60.0), 3.0, 1e-12);
  EXPECT_NEAR(hr.predict(90.0), 8.0, 1e-12);
  EXPECT_NEAR(hr.rss, 0.0, 1e-20);
  EXPECT_FALSE(hr.degenerate);
}

TEST(FitCalibration, MatchesNormalEquationsOracle) {
  const auto m = fit_calibration(four_phases());
  const auto o = oracle::normal_equations({60, 70, 85, 95}, {3, 4, 7, 9});
  const auto& hr = m.model(Channel::HR);
  EXPECT_NEAR(hr.slope, o.slope, 1e-12);
  EXPECT_NEAR(hr.intercept, o.intercept, 1e-10);
  EXPECT_NEAR(hr.rss, o.rss, 1e-10);
}

TEST(FitCalibration, RandomFitsMatchOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CalibrationRecord> r;
    std::vector<double> x, y;
    for (auto p : kAllPhases) {
      const double sc = rng.uniform(0.5, 20.0), a = rng.uniform(0.0, 10.0);
      r.push_back(rec(p, sc, 70.0 + rng.uniform(0, 30), 0.5, 0.5, a, 5.0));
      x.push_back(sc);
      y.push_back(a);
    }
    const auto m = fit_calibration(r).model(Channel::SC);
    const auto o = oracle::normal_equations(x, y);
    EXPECT_NEAR(m.slope, o.slope, 1e-9 * std::max(1.0, std::abs(o.slope)));
    EXPECT_NEAR(m.intercept, o.intercept, 1e-8 * std::max(1.0, std::abs(o.intercept)));
    EXPECT_NEAR(m.rss, o.rss, 1e-8 * std::max(1.0, o.rss));
  }
}

TEST(FitCalibration, TargetsFollowChannels) {
  const auto m = fit_calibration(four_phases());
  EXPECT_EQ(m.model(Channel::SC).target, Dimension::Arousal);
  EXPECT_EQ(m.model(Channel::HR).target, Dimension::Arousal);
  EXPECT_EQ(m.model(Channel::EmgZyg).target, Dimension::Valence);
  EXPECT_EQ(m.model(Channel::EmgCorr).target, Dimension::Valence);
  for (const auto& cm : m.channel_models) EXPECT_GE(cm.rss, 0.0);
}

TEST(FitCalibration, ConstantChannelIsDegenerate) {
  auto r = four_phases();
  for (auto& x : r) x.features.sc = 4.0;
  const auto m = fit_calibration(r);
  EXPECT_TRUE(m.model(Channel::SC).degenerate);
  // HR alone then drives arousal.
  PhysiologicalSample s{0.0, 4.0, 80.0, 0.3, 0.3};
  EXPECT_NEAR(predict_dimension(m, s, Dimension::Arousal), clamp_to_scale(m.model(Channel::HR).predict(80.0)), 1e-12);
}

TEST(FitCalibration, Errors) {
  EXPECT_THROW(fit_calibration(std::vector<CalibrationRecord>{four_phases()[0]}), CalibrationError);
  auto r = four_phases();
  r[1].phase = r[0].phase;
  EXPECT_THROW(fit_calibration(r), CalibrationError);
}

TEST(Fuse, PaperExamples) {
  // inverse-rss weights 0.75/0.25 (up to epsilon)
  std::vector<Prediction> p{{4.0, 1.0, false}, {8.0, 3.0, false}};
  EXPECT_NEAR(fuse(p), 5.0, 1e-5);
  std::vector<Prediction> q{{2.0, 1.0, false}, {6.0, 1.0, false}, {10.0, 2.0, false}};
  EXPECT_NEAR(fuse(q), 5.2, 1e-5);
  const auto w = fusion_weights(q);
  EXPECT_NEAR(w[0], 0.4, 1e-6);
  EXPECT_NEAR(w[2], 0.2, 1e-6);
}

TEST(Fuse, SymmetryIdentityAndErrors) {
  std::vector<Prediction> eq{{1.0, 2.0, false}, {3.0, 2.0, false}, {8.0, 2.0, false}};
  EXPECT_NEAR(fuse(eq), 4.0, 1e-12);
  std::vector<Prediction> one{{6.5, 0.3, false}};
  EXPECT_DOUBLE_EQ(fuse(one), 6.5);
  EXPECT_THROW(fuse(std::vector<Prediction>{}), FusionError);
  EXPECT_THROW(fuse(std::vector<Prediction>{{1.0, 0.0, true}}), FusionError);
}

TEST(Fuse, WeightsSumToOneAndOutputInHull) {
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    std::vector<Prediction> p;
    const int n = 1 + static_cast<int>(rng.below(5));
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < n; ++k) {
      p.push_back({rng.uniform(-5, 15), rng.bernoulli(0.2) ? 0.0 : rng.uniform(0, 100), false});
      lo = std::min(lo, p.back().value);
      hi = std::max(hi, p.back().value);
    }
    const auto w = fusion_weights(p);
    double sum = 0.0;
    for (double x : w) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const double f = fuse(p);
    EXPECT_GE(f, lo);
    EXPECT_LE(f, hi);
  }
}

TEST(Classify, ExactFitPassthrough) {
  // Features generated from a linear map, so every model has rss 0.
  std::vector<CalibrationRecord> r;
  const double reports[4][2] = {{2, 7}, {8, 3}, {5, 8.5}, {7.5, 2}};
  for (int i = 0; i < 4; ++i) {
    const double a = reports[i][0], v = reports[i][1];
    r.push_back(rec(kAllPhases[i], 2 + a, 60 + 4 * a, 0.05 + 0.09 * v, 0.95 - 0.09 * v, a, v));
  }
  const auto m = fit_calibration(r);
  for (const auto& x : r) {
    const auto es = classify_unsmoothed(std::span<const PhysiologicalSample>(&x.features, 1), m);
    EXPECT_NEAR(es.arousal(), x.self_report.arousal(), 1e-9);
    EXPECT_NEAR(es.valence(), x.self_report.valence(), 1e-9);
  }
}

TEST(Classify, SmoothingIsTrailingMean) {
  const auto m = fit_calibration(four_phases(), 3);
  Classifier c(m);
  std::vector<PhysiologicalSample> xs{{0, 2, 60, 0.2, 0.3}, {0, 5, 90, 0.2, 0.3}, {0, 8, 95, 0.2, 0.3},
                                      {0, 3, 70, 0.2, 0.3}};
  std::vector<double> raw;
  for (const auto& s : xs) raw.push_back(classify_unsmoothed(std::span(&s, 1), m).arousal());
  std::vector<double> got;
  for (const auto& s : xs) got.push_back(c.classify(std::span(&s, 1)).arousal());
  EXPECT_NEAR(got[0], raw[0], 1e-12);
  EXPECT_NEAR(got[1], (raw[0] + raw[1]) / 2, 1e-12);
  EXPECT_NEAR(got[2], (raw[0] + raw[1] + raw[2]) / 3, 1e-12);
  EXPECT_NEAR(got[3], (raw[1] + raw[2] + raw[3]) / 3, 1e-12);
}

TEST(Classify, ConstantStreamGivesConstantOutput) {
  const auto m = fit_calibration(four_phases());
  Classifier c(m);
  PhysiologicalSample s{0, 4, 77, 0.4, 0.2};
  const auto raw = classify_unsmoothed(std::span(&s, 1), m);
  for (int i = 0; i < 20; ++i) {
    const auto es = c.classify(std::span(&s, 1));
    EXPECT_NEAR(es.arousal(), raw.arousal(), 1e-12);
    EXPECT_NEAR(es.valence(), raw.valence(), 1e-12);
  }
}

TEST(Classify, MonotoneInHeartRateAsSoleVoter) {
  auto r = four_phases();
  for (auto& x : r) x.features.sc = 4.0; // SC degenerate
  const auto m = fit_calibration(r);
  ASSERT_GT(m.model(Channel::HR).slope, 0.0);
  double last = -1.0;
  for (double hr = 40; hr <= 140; hr += 0.5) {
    PhysiologicalSample s{0, 4.0, hr, 0.3, 0.3};
    const double a = predict_dimension(m, s, Dimension::Arousal);
    EXPECT_GE(a, last);
    last = a;
  }
}

TEST(Classify, AllDegenerateIsClassificationError) {
  auto r = four_phases();
  for (auto& x : r) {
    x.features.emg_zyg = 0.5;
    x.features.emg_corr = 0.5;
  }
  const auto m = fit_calibration(r);
  PhysiologicalSample s{0, 4, 70, 0.5, 0.5};
  EXPECT_THROW(classify_unsmoothed(std::span(&s, 1), m), ClassificationError);
  EXPECT_THROW(classify_unsmoothed(std::span<const PhysiologicalSample>{}, m), ClassificationError);
}

TEST(PiersFiles, CalibrationAndModelRoundTrip) {
  const auto r = four_phases();
  const auto parsed = parse_calibration(format_calibration(r));
  ASSERT_EQ(parsed.size(), r.size());
  const auto m = fit_calibration(r);
  EXPECT_EQ(parse_model(format_model(m)), m);
}

TEST(PiersFiles, BadInput) {
  EXPECT_THROW(parse_calibration("phase,sc,hr,emg_zyg,emg_corr,arousal,valence\nRelaxingMusic,1,2\n"), InputError);
  EXPECT_THROW(parse_calibration("Sleeping,1,60,0.1,0.1,5,5\n"), InputError);
  EXPECT_THROW(parse_physio("t,sc,hr,emg_zyg,emg_corr\n0,1,60,2,0\n"), InputError);
}
