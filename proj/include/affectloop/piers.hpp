#pragma once

// Two-layer emotion recognition.
//
// Layer 1: one least-squares line per physiological channel, fitted on the
// calibration phases. SC and HR predict arousal; the two facial EMG channels
// predict valence.
// Layer 2: per dimension, the channel predictions are merged with weights
// proportional to 1/(rss + eps), then a trailing moving average over the last
// few classifications keeps the output stream smooth.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/av_core.hpp"
#include "affectloop/error.hpp"
#include "affectloop/text.hpp"

namespace affectloop::piers {

inline constexpr double kFusionEpsilon = 1e-6;
inline constexpr int kDefaultSmoothingWindow = 5;

enum class Phase : std::uint8_t { RelaxingMusic, WaldoScare, FunnyVideo, HorrorVideo };

inline constexpr Phase kAllPhases[] = {Phase::RelaxingMusic, Phase::WaldoScare, Phase::FunnyVideo, Phase::HorrorVideo};

inline std::string_view to_string(Phase p) {
  switch (p) {
  case Phase::RelaxingMusic: return "RelaxingMusic";
  case Phase::WaldoScare: return "WaldoScare";
  case Phase::FunnyVideo: return "FunnyVideo";
  case Phase::HorrorVideo: return "HorrorVideo";
  }
  return "?";
}

inline std::optional<Phase> phase_from_string(std::string_view s) {
  for (Phase p : kAllPhases)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

struct CalibrationRecord {
  Phase phase = Phase::RelaxingMusic;
  PhysiologicalSample features; // phase means
  EmotionalState self_report;
  friend bool operator==(const CalibrationRecord&, const CalibrationRecord&) = default;
};

inline Dimension target_of(Channel c) {
  return (c == Channel::SC || c == Channel::HR) ? Dimension::Arousal : Dimension::Valence;
}

struct ChannelModel {
  Channel channel = Channel::SC;
  Dimension target = Dimension::Arousal;
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
  // Constant feature during calibration: the line carries no information and
  // the model gets zero fusion weight.
  bool degenerate = false;

  double predict(double feature) const { return slope * feature + intercept; }

  // Feature value this model maps onto `target_value`; used by the synthetic
  // player to emit channels consistent with an intended emotional state.
  double invert(double target_value) const { return (target_value - intercept) / slope; }

  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;
};

struct PiersModel {
  std::array<ChannelModel, 4> channel_models{};
  int smoothing_window = kDefaultSmoothingWindow;

  const ChannelModel& model(Channel c) const { return channel_models[static_cast<std::size_t>(c)]; }

  friend bool operator==(const PiersModel&, const PiersModel&) = default;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
  bool degenerate = false;
};

// Ordinary least squares on centred sums.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit fit;
  const double scale = std::max(1.0, mx * mx);
  if (sxx <= 1e-12 * scale * n) {
    fit.degenerate = true;
    fit.slope = 0.0;
    fit.intercept = my;
  } else {
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    fit.rss += r * r;
  }
  return fit;
}

inline PiersModel fit_calibration(std::span<const CalibrationRecord> records,
                                  int smoothing_window = kDefaultSmoothingWindow) {
  if (records.size() < 2) throw CalibrationError("calibration needs at least two phases");
  if (smoothing_window < 1) throw CalibrationError("smoothing window must be positive");
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].features.validate();
    for (std::size_t j = 0; j < i; ++j)
      if (records[i].phase == records[j].phase)
        throw CalibrationError("duplicate calibration phase " + std::string(to_string(records[i].phase)));
  }

  PiersModel model;
  model.smoothing_window = smoothing_window;
  std::vector<double> xs(records.size()), ys(records.size());
  for (Channel c : kAllChannels) {
    const Dimension target = target_of(c);
    for (std::size_t i = 0; i < records.size(); ++i) {
      xs[i] = records[i].features.channel(c);
      ys[i] = records[i].self_report.get(target);
    }
    const LineFit fit = fit_line(xs, ys);
    model.channel_models[static_cast<std::size_t>(c)] = {c, target, fit.slope, fit.intercept, fit.rss, fit.degenerate};
  }
  return model;
}

struct Prediction {
  double value = 0.0;
  double rss = 0.0;
  bool degenerate = false;
};

// Normalised inverse-RSS weights; degenerate entries get weight zero.
inline std::vector<double> fusion_weights(std::span<const Prediction> predictions) {
  std::vector<double> w(predictions.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    if (p.degenerate || !std::isfinite(p.value) || !std::isfinite(p.rss) || p.rss < 0.0) continue;
    w[i] = 1.0 / (p.rss + kFusionEpsilon);
    total += w[i];
  }
  if (!(total > 0.0)) throw FusionError("fusion needs at least one non-degenerate prediction");
  for (double& x : w) x /= total;
  return w;
}

inline double fuse(std::span<const Prediction> predictions) {
  const auto w = fusion_weights(predictions);
  double out = 0.0;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (w[i] == 0.0) continue;
    out += w[i] * predictions[i].value;
    lo = std::min(lo, predictions[i].value);
    hi = std::max(hi, predictions[i].value);
  }
  // Rounding can push a convex combination an ulp outside its hull.
  return std::clamp(out, lo, hi);
}

inline PhysiologicalSample window_mean(std::span<const PhysiologicalSample> window) {
  if (window.empty()) throw ClassificationError("classification window is empty");
  PhysiologicalSample mean{};
  mean.hr = 0.0;
  for (const auto& s : window) {
    mean.sc += s.sc;
    mean.hr += s.hr;
    mean.emg_zyg += s.emg_zyg;
    mean.emg_corr += s.emg_corr;
  }
  const auto n = static_cast<double>(window.size());
  mean.timestamp = window.back().timestamp;
  mean.sc /= n;
  mean.hr /= n;
  mean.emg_zyg /= n;
  mean.emg_corr /= n;
  return mean;
}

// Fused, clamped value for one dimension from a feature vector.
inline double predict_dimension(const PiersModel& model, const PhysiologicalSample& features, Dimension d) {
  std::vector<Prediction> preds;
  preds.reserve(2);
  for (const auto& m : model.channel_models) {
    if (m.target != d) continue;
    preds.push_back({m.predict(features.channel(m.channel)), m.rss, m.degenerate});
  }
  try {
    return clamp_to_scale(fuse(preds));
  } catch (const FusionError&) {
    throw ClassificationError("all " + std::string(to_string(d)) + " channel models are degenerate");
  }
}

// Single classification without smoothing.
inline EmotionalState classify_unsmoothed(std::span<const PhysiologicalSample> window, const PiersModel& model) {
  const auto features = window_mean(window);
  return {predict_dimension(model, features, Dimension::Arousal),
          predict_dimension(model, features, Dimension::Valence)};
}

// Streaming classifier: one instance per physiological stream. Holds the last
// `smoothing_window` raw classifications.
class Classifier {
public:
  explicit Classifier(PiersModel model) : model_(std::move(model)) {
    if (model_.smoothing_window < 1) throw ClassificationError("smoothing window must be positive");
  }

  EmotionalState classify(std::span<const PhysiologicalSample> window) {
    const EmotionalState raw = classify_unsmoothed(window, model_);
    history_.push_back(raw);
    while (history_.size() > static_cast<std::size_t>(model_.smoothing_window)) history_.pop_front();
    double a = 0.0, v = 0.0;
    for (const auto& s : history_) {
      a += s.arousal();
      v += s.valence();
    }
    const auto n = static_cast<double>(history_.size());
    return {a / n, v / n};
  }

  void reset() { history_.clear(); }
  const PiersModel& model() const { return model_; }

private:
  PiersModel model_;
  std::deque<EmotionalState> history_;
};

// ---------------------------------------------------------------------------
// Calibration file: `phase,sc,hr,emg_zyg,emg_corr,arousal,valence`, one line
// per phase. Blank lines, `#` comments and a header starting with `phase` are
// skipped.

inline std::vector<CalibrationRecord> parse_calibration(std::string_view content) {
  std::vector<CalibrationRecord> out;
  std::size_t lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("phase")) continue;
    auto f = text::split(line, ',');
    auto fail = [&](const std::string& why) {
      return InputError("calibration line " + std::to_string(lineno) + ": " + why);
    };
    if (f.size() != 7) throw fail("expected 7 fields");
    auto phase = phase_from_string(text::trim(f[0]));
    if (!phase) throw fail("unknown phase '" + std::string(text::trim(f[0])) + "'");
    double v[6];
    for (int i = 0; i < 6; ++i) {
      auto d = text::parse_double(f[i + 1]);
      if (!d || !std::isfinite(*d)) throw fail("bad number in field " + std::to_string(i + 2));
      v[i] = *d;
    }
    CalibrationRecord r;
    r.phase = *phase;
    r.features = {0.0, v[0], v[1], v[2], v[3]};
    if (!r.features.valid()) throw fail("features out of range");
    if (v[4] < kScaleMin || v[4] > kScaleMax || v[5] < kScaleMin || v[5] > kScaleMax)
      throw fail("self-report outside the AV scale");
    r.self_report = {v[4], v[5]};
    out.push_back(r);
  }
  return out;
}

inline std::string format_calibration(std::span<const CalibrationRecord> records) {
  std::string out = "phase,sc,hr,emg_zyg,emg_corr,arousal,valence\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.phase)) + ',' + text::format_double(r.features.sc) + ',' +
           text::format_double(r.features.hr) + ',' + text::format_double(r.features.emg_zyg) + ',' +
           text::format_double(r.features.emg_corr) + ',' + text::format_double(r.self_report.arousal()) + ',' +
           text::format_double(r.self_report.valence()) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fitted model file (written by `calibrate`, read by `classify`).

inline std::string format_model(const PiersModel& m) {
  std::string out = "# piers-model v1\nsmoothing_window=" + std::to_string(m.smoothing_window) +
                    "\nchannel,target,slope,intercept,rss,degenerate\n";
  for (const auto& c : m.channel_models) {
    out += std::string(to_string(c.channel)) + ',' + std::string(to_string(c.target)) + ',' +
           text::format_double(c.slope) + ',' + text::format_double(c.intercept) + ',' + text::format_double(c.rss) +
           ',' + (c.degenerate ? "1" : "0") + '\n';
  }
  return out;
}

inline PiersModel parse_model(std::string_view content) {
  PiersModel m;
  std::array<bool, 4> seen{};
  std::size_t lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.starts_with("channel,")) continue;
    auto fail = [&](const std::string& why) {
      return InputError("model line " + std::to_string(lineno) + ": " + why);
    };
    if (line.starts_with("smoothing_window=")) {
      auto w = text::parse_int<int>(line.substr(17));
      if (!w || *w < 1) throw fail("bad smoothing window");
      m.smoothing_window = *w;
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != 6) throw fail("expected 6 fields");
    std::optional<Channel> ch;
    for (Channel c : kAllChannels)
      if (to_string(c) == text::trim(f[0])) ch = c;
    if (!ch) throw fail("unknown channel");
    auto slope = text::parse_double(f[2]);
    auto intercept = text::parse_double(f[3]);
    auto rss = text::parse_double(f[4]);
    if (!slope || !intercept || !rss || *rss < 0.0) throw fail("bad number");
    auto& cm = m.channel_models[static_cast<std::size_t>(*ch)];
    cm = {*ch, target_of(*ch), *slope, *intercept, *rss, text::trim(f[5]) == "1"};
    if (to_string(cm.target) != text::trim(f[1])) throw fail("channel/target mismatch");
    seen[static_cast<std::size_t>(*ch)] = true;
  }
  for (bool s : seen)
    if (!s) throw InputError("model file is missing a channel");
  return m;
}

// Physiological stream file: `t,sc,hr,emg_zyg,emg_corr` with a header line.
inline std::vector<PhysiologicalSample> parse_physio(std::string_view content) {
  std::vector<PhysiologicalSample> out;
  std::size_t lineno = 0;
  for (auto raw : text::lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == 't') continue;
    auto f = text::split(line, ',');
    if (f.size() != 5) throw InputError("physio line " + std::to_string(lineno) + ": expected 5 fields");
    double v[5];
    for (int i = 0; i < 5; ++i) {
      auto d = text::parse_double(f[i]);
      if (!d) throw InputError("physio line " + std::to_string(lineno) + ": bad number");
      v[i] = *d;
    }
    PhysiologicalSample s{v[0], v[1], v[2], v[3], v[4]};
    if (!s.valid()) throw InputError("physio line " + std::to_string(lineno) + ": sample out of range");
    out.push_back(s);
  }
  return out;
}

} // namespace affectloop::piers
