#pragma once

// Synthetic AV traces and event lists shared by the EET tests and the
// acceptance run.

#include <cmath>
#include <vector>

#include "affectloop/av_core.hpp"
#include "affectloop/eet.hpp"
#include "affectloop/glados.hpp"
#include "affectloop/random.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace affectloop;

struct Case {
  AvTrace trace;
  std::vector<glados::EventRecord> events;
};

// Kernel pulses plus noise at `period`; every other case is quantised to 0.5
// so plateaus show up.
inline Case random_case(Rng& rng, bool quantise) {
  const double period = rng.bernoulli(0.5) ? 0.1 : 0.25;
  const int n = 200 + static_cast<int>(rng.below(400));
  const double end = (n - 1) * period;
  struct Pulse {
    double t, amp_a, amp_v, tau;
  };
  std::vector<Pulse> pulses;
  const int np = 1 + static_cast<int>(rng.below(8));
  for (int i = 0; i < np; ++i)
    pulses.push_back({rng.uniform(0, end), rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0.5, 6)});
  const double noise = rng.uniform(0.0, 0.4);
  std::vector<TimedState> s;
  for (int i = 0; i < n; ++i) {
    const double t = i * period;
    double a = 5, v = 5;
    for (const auto& p : pulses) {
      if (t < p.t) continue;
      const double x = (t - p.t) / p.tau;
      a += p.amp_a * x * std::exp(1 - x);
      v += p.amp_v * x * std::exp(1 - x);
    }
    a += rng.normal(0, noise);
    v += rng.normal(0, noise);
    if (quantise) {
      a = std::round(a * 2) / 2;
      v = std::round(v * 2) / 2;
    }
    s.push_back({text::round_millis(t), {a, v}});
  }
  Case c{AvTrace(std::move(s), period), {}};
  const int ne = 1 + static_cast<int>(rng.below(12));
  std::vector<double> ts;
  for (int i = 0; i < ne; ++i) ts.push_back(text::round_millis(rng.uniform(0, end)));
  // a few events on exact sample times, a few duplicates
  if (ne > 2) ts[0] = text::round_millis(static_cast<double>(rng.below(static_cast<std::uint64_t>(n))) * period);
  if (ne > 3) ts[1] = ts[2];
  std::sort(ts.begin(), ts.end());
  for (double t : ts) c.events.push_back(glados::make_event(t, glados::EventKind::CreatureSpawn));
  return c;
}

inline eet::DetectParams params(double window, eet::ThresholdMode mode) {
  eet::DetectParams p;
  p.window = window;
  p.mode = mode;
  return p;
}

inline std::vector<oracle::Sample> series(const AvTrace& tr, Dimension d) {
  std::vector<oracle::Sample> out;
  for (const auto& s : tr.samples()) out.push_back({s.t, s.state.get(d)});
  return out;
}

// Region end by hand: next event or trace end, capped by the window.
inline double region_end(const Case& c, std::size_t i, double window) {
  const double next = i + 1 < c.events.size() ? c.events[i + 1].timestamp : c.trace.samples().back().t;
  return std::min(c.events[i].timestamp + window, std::max(next, c.events[i].timestamp));
}

// Number of (event, dimension) pairs where detect_responses and the oracle
// disagree on the accepted extrema.
inline int disagreements(const Case& c, const eet::DetectParams& p) {
  const auto got = eet::detect_responses(c.trace, c.events, p);
  int bad = 0;
  for (std::size_t i = 0; i < c.events.size(); ++i) {
    for (Dimension d : {Dimension::Arousal, Dimension::Valence}) {
      const auto& fixed = d == Dimension::Arousal ? p.phi_arousal : p.phi_valence;
      const auto want = oracle::responses_for(series(c.trace, d), c.events[i].timestamp, region_end(c, i, p.window),
                                              p.mode == eet::ThresholdMode::Deviation, fixed);
      const eet::EmotionalResponse* r = nullptr;
      for (const auto& x : got)
        if (x.event_index == i && x.dimension == d) r = &x;
      const std::size_t n = r ? r->extrema.size() : 0;
      bool same = n == want.size();
      for (std::size_t k = 0; same && k < n; ++k)
        same = r->extrema[k].t == want[k].t && r->extrema[k].value == want[k].value &&
               r->extrema[k].is_max == want[k].is_max;
      bad += !same;
    }
  }
  return bad;
}

} // namespace fixture
