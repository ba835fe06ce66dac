#pragma once

// Shared domain types: the bounded arousal/valence scale, physiological
// samples, AV traces and the simulation clock.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/error.hpp"

namespace affectloop {

inline constexpr double kScaleMin = 0.0;
inline constexpr double kScaleMax = 10.0;
inline constexpr double kScaleNeutral = 5.0;

inline double clamp_to_scale(double x) {
  if (!std::isfinite(x)) throw DomainError("clamp_to_scale: non-finite value");
  return x < kScaleMin ? kScaleMin : (x > kScaleMax ? kScaleMax : x);
}

enum class Dimension : std::uint8_t { Arousal, Valence };

inline std::string_view to_string(Dimension d) {
  return d == Dimension::Arousal ? "Arousal" : "Valence";
}

// A point in Russell's arousal/valence plane. Both coordinates are clamped to
// the scale on construction, so every instance is in range.
class EmotionalState {
public:
  EmotionalState() = default;
  EmotionalState(double arousal, double valence)
      : arousal_(clamp_to_scale(arousal)), valence_(clamp_to_scale(valence)) {}

  double arousal() const { return arousal_; }
  double valence() const { return valence_; }
  double get(Dimension d) const { return d == Dimension::Arousal ? arousal_ : valence_; }

  EmotionalState with_arousal(double a) const { return {a, valence_}; }
  EmotionalState with_valence(double v) const { return {arousal_, v}; }

  friend bool operator==(const EmotionalState&, const EmotionalState&) = default;

private:
  double arousal_ = kScaleNeutral;
  double valence_ = kScaleNeutral;
};

enum class Channel : std::uint8_t { SC, HR, EmgZyg, EmgCorr };

inline constexpr Channel kAllChannels[] = {Channel::SC, Channel::HR, Channel::EmgZyg, Channel::EmgCorr};

inline std::string_view to_string(Channel c) {
  switch (c) {
  case Channel::SC: return "SC";
  case Channel::HR: return "HR";
  case Channel::EmgZyg: return "EMG_ZYG";
  case Channel::EmgCorr: return "EMG_CORR";
  }
  return "?";
}

// Engineered features for one instant: skin conductance (microsiemens), heart
// rate (bpm) and zygomaticus/corrugator EMG activation in [0,1].
struct PhysiologicalSample {
  double timestamp = 0.0;
  double sc = 0.0;
  double hr = 60.0;
  double emg_zyg = 0.0;
  double emg_corr = 0.0;

  double channel(Channel c) const {
    switch (c) {
    case Channel::SC: return sc;
    case Channel::HR: return hr;
    case Channel::EmgZyg: return emg_zyg;
    case Channel::EmgCorr: return emg_corr;
    }
    return 0.0;
  }

  void set_channel(Channel c, double v) {
    switch (c) {
    case Channel::SC: sc = v; break;
    case Channel::HR: hr = v; break;
    case Channel::EmgZyg: emg_zyg = v; break;
    case Channel::EmgCorr: emg_corr = v; break;
    }
  }

  bool valid() const {
    auto finite = [](double v) { return std::isfinite(v); };
    return finite(timestamp) && finite(sc) && finite(hr) && finite(emg_zyg) && finite(emg_corr) &&
           timestamp >= 0.0 && hr > 0.0 && sc >= 0.0 && emg_zyg >= 0.0 && emg_zyg <= 1.0 &&
           emg_corr >= 0.0 && emg_corr <= 1.0;
  }

  void validate() const {
    if (!valid()) throw DomainError("physiological sample out of range at t=" + std::to_string(timestamp));
  }

  friend bool operator==(const PhysiologicalSample&, const PhysiologicalSample&) = default;
};

struct TimedState {
  double t = 0.0;
  EmotionalState state;
  friend bool operator==(const TimedState&, const TimedState&) = default;
};

// Uniformly sampled AV stream. Timestamps are strictly increasing and spaced
// by sample_period (to 1e-9 s).
class AvTrace {
public:
  static constexpr double kSpacingTolerance = 1e-9;

  AvTrace() = default;

  AvTrace(std::vector<TimedState> samples, double sample_period)
      : samples_(std::move(samples)), period_(sample_period) {
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw DomainError("AvTrace: sample period must be positive");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].t)) throw DomainError("AvTrace: non-finite timestamp");
      if (i == 0) continue;
      const double gap = samples_[i].t - samples_[i - 1].t;
      if (!(gap > 0.0)) throw DomainError("AvTrace: timestamps not strictly increasing at index " + std::to_string(i));
      if (std::abs(gap - period_) > kSpacingTolerance)
        throw DomainError("AvTrace: irregular spacing at index " + std::to_string(i));
    }
  }

  std::span<const TimedState> samples() const { return samples_; }
  double sample_period() const { return period_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TimedState& operator[](std::size_t i) const { return samples_[i]; }
  double start_time() const { return samples_.empty() ? 0.0 : samples_.front().t; }
  double end_time() const { return samples_.empty() ? 0.0 : samples_.back().t; }

  friend bool operator==(const AvTrace&, const AvTrace&) = default;

private:
  std::vector<TimedState> samples_;
  double period_ = 1.0;
};

// Shifts every timestamp by offset (log clock -> trace clock alignment).
inline AvTrace align_trace(const AvTrace& trace, double offset) {
  if (!std::isfinite(offset)) throw DomainError("align_trace: non-finite offset");
  std::vector<TimedState> shifted;
  shifted.reserve(trace.size());
  for (const auto& s : trace.samples()) {
    const double t = s.t + offset;
    if (t < 0.0) throw DomainError("align_trace: shift produces negative timestamp");
    shifted.push_back({t, s.state});
  }
  return AvTrace(std::move(shifted), trace.sample_period());
}

class SimClock {
public:
  explicit SimClock(double tick_period = 0.1) : period_(tick_period) {
    if (!(tick_period > 0.0) || !std::isfinite(tick_period)) throw DomainError("SimClock: tick period must be positive");
  }

  std::uint64_t tick() const { return tick_; }
  double tick_period() const { return period_; }
  double time() const { return static_cast<double>(tick_) * period_; }
  void advance() { ++tick_; }

private:
  std::uint64_t tick_ = 0;
  double period_;
};

} // namespace affectloop
