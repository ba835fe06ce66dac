#pragma once

// Emotion-event triangulation. For each event, the region after it is
// searched per dimension for local extrema of the AV trace whose distance from
// the current initial state reaches a variability threshold phi. An accepted
// extremum becomes the next initial state, so a single event can produce a
// chain of alternating extrema (composite response).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/av_core.hpp"
#include "affectloop/error.hpp"
#include "affectloop/glados.hpp"
#include "affectloop/text.hpp"

namespace affectloop::eet {

using glados::EventRecord;

inline constexpr double kDefaultWindow = 10.0;
inline constexpr double kTimeTolerance = 1e-9;
// |IS - ZS| >= phi is tested with this slack: the two-pass sigma and other
// summation orders disagree in the last bit on quantised traces.
inline constexpr double kPhiTolerance = 1e-9;

enum class ThresholdMode : std::uint8_t { Literal, Deviation };

inline std::string_view to_string(ThresholdMode m) { return m == ThresholdMode::Literal ? "literal" : "deviation"; }

inline std::optional<ThresholdMode> mode_from_string(std::string_view s) {
  if (s == "literal") return ThresholdMode::Literal;
  if (s == "deviation") return ThresholdMode::Deviation;
  return std::nullopt;
}

enum class ResponseKind : std::uint8_t { Simple, Composite };

inline std::string_view to_string(ResponseKind k) { return k == ResponseKind::Simple ? "Simple" : "Composite"; }

struct TimeRegion {
  double start = 0.0;
  double end = 0.0;
  double window = kDefaultWindow;
  friend bool operator==(const TimeRegion&, const TimeRegion&) = default;
};

struct DetectParams {
  double window = kDefaultWindow;
  ThresholdMode mode = ThresholdMode::Deviation;
  // Fixed thresholds instead of the per-region statistic.
  std::optional<double> phi_arousal;
  std::optional<double> phi_valence;
  friend bool operator==(const DetectParams&, const DetectParams&) = default;
};

struct Threshold {
  double phi = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
};

struct Extremum {
  double t = 0.0;
  double value = 0.0;    // ZS
  double is_value = 0.0; // IS it was measured against
  bool is_max = false;
  friend bool operator==(const Extremum&, const Extremum&) = default;
};

struct EmotionalResponse {
  std::size_t event_index = 0;
  double event_ts = 0.0;
  std::string event_kind; // kind label of the event
  Dimension dimension = Dimension::Arousal;
  double phi = 0.0;
  std::vector<Extremum> extrema;

  ResponseKind kind() const { return extrema.size() == 1 ? ResponseKind::Simple : ResponseKind::Composite; }
  friend bool operator==(const EmotionalResponse&, const EmotionalResponse&) = default;
};

// ---------------------------------------------------------------------------
// Regions and thresholds

inline void check_ordered(std::span<const EventRecord> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].timestamp < events[i - 1].timestamp)
      throw InputError("events out of order at index " + std::to_string(i));
}

// `horizon` bounds the last event's region (normally the trace end).
inline TimeRegion time_region(std::span<const EventRecord> events, std::size_t i, double window, double horizon) {
  if (i >= events.size()) throw InputError("time_region: event index out of range");
  if (!(window > 0.0) || !std::isfinite(window)) throw InputError("time_region: window must be positive");
  check_ordered(events);
  const double start = events[i].timestamp;
  const double bound = i + 1 < events.size() ? events[i + 1].timestamp : std::max(start, horizon);
  return {start, std::min(start + window, bound), window};
}

inline Threshold population_stats(std::span<const double> xs) {
  Threshold t;
  if (xs.empty()) return t;
  double sum = 0.0;
  for (double x : xs) sum += x;
  t.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - t.mean) * (x - t.mean);
  t.sigma = std::sqrt(ss / static_cast<double>(xs.size()));
  t.phi = t.mean + 2.0 * t.sigma;
  return t;
}

// Literal: mean + 2 sigma of the raw values; Deviation: the same over the
// absolute first differences.
inline Threshold compute_threshold(std::span<const double> values, ThresholdMode mode) {
  if (mode == ThresholdMode::Literal) return population_stats(values);
  std::vector<double> diffs;
  for (std::size_t i = 1; i < values.size(); ++i) diffs.push_back(std::abs(values[i] - values[i - 1]));
  return population_stats(diffs);
}

// ---------------------------------------------------------------------------
// Extremum search

struct Candidate {
  std::size_t index = 0; // into the region's value array
  bool is_max = false;
};

// Sign changes of the first difference. A plateau between a rise and a fall
// (or fall and rise) yields one candidate at its midpoint; plateaus touching
// either end of the region do not.
inline std::vector<Candidate> extremum_candidates(std::span<const double> xs) {
  std::vector<Candidate> out;
  std::optional<std::size_t> last_nonzero; // index k of the last nonzero d_k = x_k - x_{k-1}
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double d = xs[k] - xs[k - 1];
    if (d == 0.0) continue;
    if (last_nonzero) {
      const double prev = xs[*last_nonzero] - xs[*last_nonzero - 1];
      if ((prev > 0.0) != (d > 0.0)) {
        // Plateau spans indices last_nonzero .. k-1.
        out.push_back({(*last_nonzero + (k - 1)) / 2, prev > 0.0});
      }
    }
    last_nonzero = k;
  }
  return out;
}

struct RegionView {
  std::size_t is_index = 0;  // sample at or before the event
  std::size_t first = 0;     // first sample inside the region
  std::size_t last = 0;      // last sample inside the region (inclusive)
  bool empty = true;
};

inline RegionView region_view(const AvTrace& trace, const TimeRegion& r, const std::string& event_label) {
  const auto s = trace.samples();
  if (s.empty() || s.front().t > r.start + kTimeTolerance || s.back().t < r.end - kTimeTolerance)
    throw CoverageError("trace does not cover the region [" + text::format_seconds(r.start) + ", " +
                        text::format_seconds(r.end) + "] of event " + event_label);
  RegionView v;
  auto it = std::upper_bound(s.begin(), s.end(), r.start + kTimeTolerance,
                             [](double t, const TimedState& x) { return t < x.t; });
  v.is_index = static_cast<std::size_t>(std::distance(s.begin(), it)) - 1;
  auto lo = std::lower_bound(s.begin(), s.end(), r.start - kTimeTolerance,
                             [](const TimedState& x, double t) { return x.t < t; });
  auto hi = std::upper_bound(s.begin(), s.end(), r.end + kTimeTolerance,
                             [](double t, const TimedState& x) { return t < x.t; });
  if (lo < hi) {
    v.first = static_cast<std::size_t>(std::distance(s.begin(), lo));
    v.last = static_cast<std::size_t>(std::distance(s.begin(), hi)) - 1;
    v.empty = false;
  }
  return v;
}

// Chained acceptance over one dimension of one region.
inline std::vector<Extremum> chain_extrema(std::span<const TimedState> region, Dimension dim, double is_value,
                                           double phi) {
  std::vector<double> xs;
  xs.reserve(region.size());
  for (const auto& s : region) xs.push_back(s.state.get(dim));
  std::vector<Extremum> out;
  double is = is_value;
  for (const auto& c : extremum_candidates(xs)) {
    if (!out.empty() && out.back().is_max == c.is_max) continue; // must alternate
    const double zs = xs[c.index];
    if (std::abs(is - zs) >= phi - kPhiTolerance) {
      out.push_back({region[c.index].t, zs, is, c.is_max});
      is = zs;
    }
  }
  return out;
}

inline std::vector<EmotionalResponse> detect_responses(const AvTrace& trace, std::span<const EventRecord> events,
                                                       const DetectParams& params = {}) {
  if (!(params.window > 0.0) || !std::isfinite(params.window)) throw InputError("window must be positive");
  check_ordered(events);
  std::vector<EmotionalResponse> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const TimeRegion r = time_region(events, i, params.window, trace.end_time());
    const std::string label = events[i].kind_label() + "@" + text::format_seconds(events[i].timestamp);
    const RegionView v = region_view(trace, r, label);
    if (v.empty) continue;
    const auto region = trace.samples().subspan(v.first, v.last - v.first + 1);
    for (Dimension dim : {Dimension::Arousal, Dimension::Valence}) {
      std::vector<double> xs;
      for (const auto& s : region) xs.push_back(s.state.get(dim));
      const auto& fixed = dim == Dimension::Arousal ? params.phi_arousal : params.phi_valence;
      const double phi = fixed ? *fixed : compute_threshold(xs, params.mode).phi;
      auto ex = chain_extrema(region, dim, trace[v.is_index].state.get(dim), phi);
      if (ex.empty()) continue;
      EmotionalResponse resp;
      resp.event_index = i;
      resp.event_ts = events[i].timestamp;
      resp.event_kind = events[i].kind_label();
      resp.dimension = dim;
      resp.phi = phi;
      resp.extrema = std::move(ex);
      out.push_back(std::move(resp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Import / export

struct LineError {
  std::size_t line = 0; // 1-based
  std::string reason;
};

struct ImportResult {
  std::vector<EventRecord> events;
  std::vector<LineError> errors;
};

// Lenient: bad lines are reported and skipped. Throws only when there were
// non-blank lines and none of them parsed.
inline ImportResult import_events(std::string_view content) {
  ImportResult res;
  std::size_t nonblank = 0;
  const auto ls = text::lines(content);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    if (text::trim(ls[i]).empty()) continue;
    ++nonblank;
    std::string why;
    if (auto r = glados::parse_event_line(ls[i], why)) res.events.push_back(std::move(*r));
    else res.errors.push_back({i + 1, why});
  }
  if (nonblank > 0 && res.events.empty())
    throw InputError("no parseable event lines (first error, line " + std::to_string(res.errors.front().line) +
                     ": " + res.errors.front().reason + ")");
  std::stable_sort(res.events.begin(), res.events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.timestamp < b.timestamp; });
  return res;
}

inline constexpr std::string_view kResponseHeader =
    "event_ts,event_kind,dimension,response_index,extremum_index,extremum_ts,is_value,zs_value,delta,kind";

inline std::string export_responses(std::span<const EmotionalResponse> responses) {
  std::string out(kResponseHeader);
  out += '\n';
  auto f = [](double v) { return text::format_fixed(v, 6); };
  for (std::size_t r = 0; r < responses.size(); ++r) {
    const auto& resp = responses[r];
    for (std::size_t e = 0; e < resp.extrema.size(); ++e) {
      const auto& x = resp.extrema[e];
      out += text::format_seconds(resp.event_ts) + ',' + resp.event_kind + ',' + std::string(to_string(resp.dimension)) +
             ',' + std::to_string(r) + ',' + std::to_string(e) + ',' + text::format_seconds(x.t) + ',' +
             f(x.is_value) + ',' + f(x.value) + ',' + f(x.value - x.is_value) + ',' +
             std::string(to_string(resp.kind())) + '\n';
    }
  }
  return out;
}

// `t,arousal,valence` with a header line. The sample period is taken from the
// first two rows.
inline AvTrace parse_av_csv(std::string_view content) {
  const auto ls = text::lines(content);
  std::vector<TimedState> samples;
  bool header = true;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto line = text::trim(ls[i]);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "t,arousal,valence") throw InputError("av csv: expected header 't,arousal,valence'");
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 3) throw InputError("av csv line " + std::to_string(i + 1) + ": expected 3 fields");
    auto t = text::parse_double(f[0]);
    auto a = text::parse_double(f[1]);
    auto v = text::parse_double(f[2]);
    if (!t || !a || !v || !std::isfinite(*t) || !std::isfinite(*a) || !std::isfinite(*v))
      throw InputError("av csv line " + std::to_string(i + 1) + ": bad number");
    if (*a < kScaleMin || *a > kScaleMax || *v < kScaleMin || *v > kScaleMax)
      throw InputError("av csv line " + std::to_string(i + 1) + ": value outside [0,10]");
    samples.push_back({*t, EmotionalState{*a, *v}});
  }
  if (header) throw InputError("av csv: empty input");
  const double period = samples.size() >= 2 ? samples[1].t - samples[0].t : 1.0;
  // Text timestamps carry rounding, so the spacing check is loosened to a
  // millionth of the period.
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (std::abs((samples[i].t - samples[i - 1].t) - period) > 1e-6 * std::max(1.0, period))
      throw InputError("av csv: irregular sampling at line " + std::to_string(i + 2));
    samples[i].t = samples[0].t + period * static_cast<double>(i);
  }
  try {
    return AvTrace(std::move(samples), period);
  } catch (const DomainError& e) {
    throw InputError(std::string("av csv: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Statistics

struct ResponseStats {
  std::size_t events = 0;
  std::size_t answered = 0;
  std::size_t responses = 0;
  std::size_t simple = 0;
  double event_response_ratio = 0.0;
  double simple_fraction = 0.0;
};

inline ResponseStats response_stats(std::span<const EventRecord> events, std::span<const EmotionalResponse> responses) {
  if (events.empty()) throw InputError("response ratio is undefined for zero events");
  ResponseStats s;
  s.events = events.size();
  std::vector<bool> hit(events.size(), false);
  for (const auto& r : responses) {
    if (r.event_index >= events.size()) throw InputError("response refers to an unknown event");
    hit[r.event_index] = true;
    ++s.responses;
    if (r.kind() == ResponseKind::Simple) ++s.simple;
  }
  s.answered = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
  s.event_response_ratio = static_cast<double>(s.answered) / static_cast<double>(s.events);
  s.simple_fraction = s.responses ? static_cast<double>(s.simple) / static_cast<double>(s.responses) : 0.0;
  return s;
}

struct PooledStats {
  double pooled_ratio = 0.0;        // all answered events / all events
  double mean_session_ratio = 0.0;  // average of per-session ratios
};

inline PooledStats pool(std::span<const ResponseStats> sessions) {
  if (sessions.empty()) throw InputError("no sessions to pool");
  std::size_t ev = 0, ans = 0;
  double sum = 0.0;
  for (const auto& s : sessions) {
    ev += s.events;
    ans += s.answered;
    sum += s.event_response_ratio;
  }
  return {static_cast<double>(ans) / static_cast<double>(ev), sum / static_cast<double>(sessions.size())};
}

// ---------------------------------------------------------------------------
// .eet container

struct EetSession {
  std::string trace_ref; // path of the AV trace the responses were found in
  std::vector<EventRecord> events;
  DetectParams params;
  std::vector<EmotionalResponse> responses;
  friend bool operator==(const EetSession&, const EetSession&) = default;
};

inline constexpr std::string_view kEetMagic = "EETv";
inline constexpr int kEetVersion = 1;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string save_session(const EetSession& s) {
  auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string("-"); };
  std::string out = std::string(kEetMagic) + std::to_string(kEetVersion) + '\n';
  out += "trace\t" + glados::escape_field(s.trace_ref) + '\n';
  out += "window\t" + text::format_double(s.params.window) + '\n';
  out += "mode\t" + std::string(to_string(s.params.mode)) + '\n';
  out += "phi_a\t" + opt(s.params.phi_arousal) + '\n';
  out += "phi_v\t" + opt(s.params.phi_valence) + '\n';
  out += "events\t" + std::to_string(s.events.size()) + '\n';
  for (const auto& e : s.events) out += glados::format_event(e) + '\n';
  out += "responses\t" + std::to_string(s.responses.size()) + '\n';
  for (const auto& r : s.responses) {
    out += std::to_string(r.event_index) + '\t' + text::format_double(r.event_ts) + '\t' + r.event_kind + '\t' +
           std::string(to_string(r.dimension)) + '\t' + text::format_double(r.phi) + '\t';
    for (std::size_t i = 0; i < r.extrema.size(); ++i) {
      const auto& x = r.extrema[i];
      if (i) out += ';';
      out += text::format_double(x.t) + ',' + text::format_double(x.value) + ',' + text::format_double(x.is_value) +
             ',' + (x.is_max ? "max" : "min");
    }
    out += '\n';
  }
  out += "END\t" + hex64(fnv1a(out)) + '\n';
  return out;
}

namespace detail {

class Reader {
public:
  explicit Reader(std::string_view body) : lines_(text::lines(body)) {}

  std::string_view next(const char* what) {
    if (pos_ >= lines_.size()) throw LoadError(std::string("truncated file: missing ") + what);
    return lines_[pos_++];
  }

  std::string_view field(const char* key) {
    const auto line = next(key);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.substr(0, tab) != key)
      throw LoadError(std::string("expected '") + key + "' at line " + std::to_string(pos_));
    return line.substr(tab + 1);
  }

  std::size_t line() const { return pos_; }

private:
  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
};

inline double load_double(std::string_view s, const char* what) {
  auto v = text::parse_double(s);
  if (!v || !std::isfinite(*v)) throw LoadError(std::string("bad number for ") + what);
  return *v;
}

inline std::size_t load_count(std::string_view s, const char* what) {
  auto v = text::parse_int<std::size_t>(s);
  if (!v) throw LoadError(std::string("bad count for ") + what);
  return *v;
}

} // namespace detail

inline EetSession load_session(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  const auto head = bytes.substr(0, nl);
  if (head.substr(0, kEetMagic.size()) != kEetMagic) throw LoadError("not an .eet file (missing EETv header)");
  if (head != std::string(kEetMagic) + std::to_string(kEetVersion))
    throw LoadError("unsupported .eet version '" + std::string(head) + "'");

  // Checksum covers everything before the END line.
  const auto end_pos = bytes.rfind("END\t");
  if (end_pos == std::string_view::npos || (end_pos > 0 && bytes[end_pos - 1] != '\n'))
    throw LoadError("truncated file: missing END line");
  const auto tail = text::trim(bytes.substr(end_pos + 4));
  if (tail != hex64(fnv1a(bytes.substr(0, end_pos)))) throw LoadError("checksum mismatch (file corrupted)");

  detail::Reader rd(bytes.substr(0, end_pos));
  rd.next("header");
  EetSession s;
  auto trace = glados::unescape_field(rd.field("trace"));
  if (!trace) throw LoadError("bad escape in trace reference");
  s.trace_ref = std::move(*trace);
  s.params.window = detail::load_double(rd.field("window"), "window");
  auto mode = mode_from_string(rd.field("mode"));
  if (!mode) throw LoadError("unknown threshold mode");
  s.params.mode = *mode;
  for (auto [key, slot] : {std::pair{"phi_a", &s.params.phi_arousal}, std::pair{"phi_v", &s.params.phi_valence}}) {
    const auto v = rd.field(key);
    if (v != "-") *slot = detail::load_double(v, key);
  }
  const std::size_t n_events = detail::load_count(rd.field("events"), "events");
  for (std::size_t i = 0; i < n_events; ++i) {
    std::string why;
    auto e = glados::parse_event_line(rd.next("event"), why);
    if (!e) throw LoadError("event at line " + std::to_string(rd.line()) + ": " + why);
    s.events.push_back(std::move(*e));
  }
  const std::size_t n_resp = detail::load_count(rd.field("responses"), "responses");
  for (std::size_t i = 0; i < n_resp; ++i) {
    const auto f = text::split(rd.next("response"), '\t');
    if (f.size() != 6) throw LoadError("response at line " + std::to_string(rd.line()) + ": expected 6 fields");
    EmotionalResponse r;
    r.event_index = detail::load_count(f[0], "event index");
    if (r.event_index >= s.events.size()) throw LoadError("response refers to an unknown event");
    r.event_ts = detail::load_double(f[1], "event timestamp");
    r.event_kind = std::string(f[2]);
    if (f[3] == "Arousal") r.dimension = Dimension::Arousal;
    else if (f[3] == "Valence") r.dimension = Dimension::Valence;
    else throw LoadError("unknown dimension '" + std::string(f[3]) + "'");
    r.phi = detail::load_double(f[4], "phi");
    for (auto item : text::split(f[5], ';')) {
      const auto p = text::split(item, ',');
      if (p.size() != 4 || (p[3] != "max" && p[3] != "min")) throw LoadError("malformed extremum");
      r.extrema.push_back({detail::load_double(p[0], "extremum time"), detail::load_double(p[1], "extremum value"),
                           detail::load_double(p[2], "initial state"), p[3] == "max"});
    }
    s.responses.push_back(std::move(r));
  }
  return s;
}

} // namespace affectloop::eet
