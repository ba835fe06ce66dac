// affectloop command-line front end.
//
//   simulate     run closed-loop sessions and write session directories
//   calibrate    fit a PIERS model from a calibration csv
//   classify     turn a physio csv into an AV csv with a fitted model
//   triangulate  find emotional responses to logged events in an AV trace
//   report       summarise a session directory
//
// Exit codes: 0 ok, 1 usage, 2 unreadable/unparseable input, 3 runtime failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "affectloop/affectloop.hpp"

namespace fs = std::filesystem;
using namespace affectloop;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

// Thrown for input-side failures that are not already an InputError.
struct InputFailure : Error {
  using Error::Error;
};

std::string slurp(const fs::path& p) {
  try {
    return sim::read_file(p);
  } catch (const InputError& e) {
    throw InputFailure(e.what());
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("AFFECTLOOP_SEED");
  if (!s || !*s) return std::nullopt;
  auto v = text::parse_int<std::uint64_t>(s);
  if (!v) throw ConfigError(std::string("AFFECTLOOP_SEED is not an unsigned integer: '") + s + "'");
  return v;
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string condition;
  std::string out;
  int runs = 1;
  int jobs = 1;
  std::optional<double> duration;
  std::string policy;
};

int do_simulate(const SimulateOpts& o) {
  sim::ScenarioConfig base;
  if (!o.config.empty()) base = config::parse(slurp(o.config));
  if (o.seed) base.seed = *o.seed;
  if (auto s = env_seed()) base.seed = *s;
  if (!o.condition.empty()) base.condition = *clears::condition_from_string(o.condition);
  if (o.duration) base.duration = *o.duration;
  if (!o.policy.empty()) base.player.policy = *sim::policy_from_string(o.policy);
  base.validate();

  if (o.runs == 1) {
    const auto rec = sim::run(base);
    sim::write_session(rec, o.out);
    std::cout << "seed " << base.seed << ": " << gameplay::to_string(rec.outcome) << " at "
              << text::format_seconds(rec.end_time) << " s, " << rec.events.size() << " events -> " << o.out << '\n';
    return 0;
  }

  // Seeds base.seed .. base.seed+runs-1, one subdirectory each.
  std::mutex mu;
  std::vector<std::string> lines(static_cast<std::size_t>(o.runs));
  std::optional<std::string> failure;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= lines.size() || failure) return;
        i = next++;
      }
      auto cfg = base;
      cfg.seed = base.seed + i;
      try {
        const auto rec = sim::run(cfg);
        const fs::path dir = fs::path(o.out) / ("seed_" + std::to_string(cfg.seed));
        sim::write_session(rec, dir);
        lines[i] = "seed " + std::to_string(cfg.seed) + ": " + std::string(gameplay::to_string(rec.outcome)) + " at " +
                   text::format_seconds(rec.end_time) + " s, " + std::to_string(rec.events.size()) + " events";
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failure) failure = "seed " + std::to_string(cfg.seed) + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int jobs = std::max(1, std::min(o.jobs, o.runs));
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) throw Error(*failure);
  for (const auto& l : lines) std::cout << l << '\n';
  return 0;
}

int do_calibrate(const std::string& in, const std::string& out, int smoothing) {
  const auto records = piers::parse_calibration(slurp(in));
  const auto model = piers::fit_calibration(records, smoothing);
  const auto text = piers::format_model(model);
  if (out.empty() || out == "-") std::cout << text;
  else sim::write_file(out, text);
  for (const auto& m : model.channel_models)
    if (m.degenerate) std::cerr << "warning: channel " << to_string(m.channel) << " is degenerate\n";
  return 0;
}

int do_classify(const std::string& model_path, const std::string& physio_path, const std::string& out, int window) {
  const auto model = piers::parse_model(slurp(model_path));
  const auto physio = piers::parse_physio(slurp(physio_path));
  piers::Classifier clf(model);
  std::string csv = "t,arousal,valence\n";
  for (std::size_t i = 0; i < physio.size(); ++i) {
    const std::size_t w = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    const auto es = clf.classify(std::span<const PhysiologicalSample>(physio).subspan(i + 1 - w, w));
    csv += text::format_seconds(physio[i].timestamp) + ',' + text::format_fixed(es.arousal(), 6) + ',' +
           text::format_fixed(es.valence(), 6) + '\n';
  }
  if (out.empty() || out == "-") std::cout << csv;
  else sim::write_file(out, csv);
  return 0;
}

struct TriangulateOpts {
  std::string trace;
  std::string events;
  std::string mode = "deviation";
  double window = eet::kDefaultWindow;
  std::string out;
  double offset = 0.0;
  std::string save;
  std::vector<std::string> exclude;
};

int do_triangulate(const TriangulateOpts& o) {
  AvTrace trace = eet::parse_av_csv(slurp(o.trace));
  if (o.offset != 0.0) trace = align_trace(trace, o.offset);
  auto imported = eet::import_events(slurp(o.events));
  for (const auto& e : imported.errors)
    std::cerr << o.events << ":" << e.line << ": skipped: " << e.reason << '\n';
  std::vector<glados::EventRecord> events;
  for (auto& e : imported.events) {
    const auto label = e.kind_label();
    const std::string bare(glados::to_string(e.kind));
    if (std::find(o.exclude.begin(), o.exclude.end(), label) != o.exclude.end() ||
        std::find(o.exclude.begin(), o.exclude.end(), bare) != o.exclude.end())
      continue;
    events.push_back(std::move(e));
  }
  eet::DetectParams params;
  params.window = o.window;
  params.mode = *eet::mode_from_string(o.mode);
  const auto responses = eet::detect_responses(trace, events, params);
  const auto csv = eet::export_responses(responses);
  if (o.out.empty() || o.out == "-") std::cout << csv;
  else sim::write_file(o.out, csv);
  if (!o.save.empty()) sim::write_file(o.save, eet::save_session({o.trace, events, params, responses}));

  auto& log = (o.out.empty() || o.out == "-") ? std::cerr : std::cout;
  if (events.empty()) {
    log << "events: 0\n";
    return 0;
  }
  const auto st = eet::response_stats(events, responses);
  log << "events: " << st.events << "\nanswered: " << st.answered
      << "\nevent_response_ratio: " << text::format_fixed(st.event_response_ratio, 4) << "\nresponses: " << st.responses
      << "\nsimple_fraction: " << text::format_fixed(st.simple_fraction, 4) << '\n';
  return 0;
}

int do_report(const std::string& dir_s) {
  const fs::path dir(dir_s);
  if (!fs::is_directory(dir)) throw InputFailure("not a session directory: " + dir_s);
  const std::string outcome_text = slurp(dir / "outcome.txt");
  const auto outcome_lines = text::lines(outcome_text);
  if (outcome_lines.empty()) throw InputFailure("outcome.txt is empty");
  const auto outcome = text::trim(outcome_lines.front());
  if (outcome != "Win" && outcome != "Lose" && outcome != "Ongoing")
    throw InputFailure("outcome.txt: unknown outcome '" + std::string(outcome) + "'");

  const std::string events_text = slurp(dir / "events.tsv");
  std::map<std::string, std::size_t> by_kind;
  const auto ev_lines = text::lines(events_text);
  for (std::size_t i = 0; i < ev_lines.size(); ++i) {
    if (text::trim(ev_lines[i]).empty()) continue;
    std::string why;
    auto e = glados::parse_event_line(ev_lines[i], why);
    if (!e) throw InputFailure("events.tsv line " + std::to_string(i + 1) + ": " + why);
    ++by_kind[e->kind_label()];
  }

  const AvTrace av = eet::parse_av_csv(slurp(dir / "av.csv"));
  std::vector<double> a, v;
  for (const auto& s : av.samples()) {
    a.push_back(s.state.arousal());
    v.push_back(s.state.valence());
  }
  const auto sa = eet::population_stats(a);
  const auto sv = eet::population_stats(v);

  std::map<std::string, std::size_t> by_directive;
  std::size_t n_directives = 0;
  const std::string directives_text = slurp(dir / "directives.tsv");
  const auto d_lines = text::lines(directives_text);
  for (std::size_t i = 0; i < d_lines.size(); ++i) {
    if (text::trim(d_lines[i]).empty()) continue;
    const auto f = text::split(d_lines[i], '\t');
    if (f.size() != 3 || !text::parse_double(f[0]))
      throw InputFailure("directives.tsv line " + std::to_string(i + 1) + ": malformed");
    ++by_directive[std::string(f[1])];
    ++n_directives;
  }

  std::cout << "outcome: " << outcome << '\n';
  for (std::size_t i = 1; i < outcome_lines.size(); ++i)
    if (!text::trim(outcome_lines[i]).empty()) std::cout << text::trim(outcome_lines[i]) << '\n';
  std::size_t n_events = 0;
  for (const auto& [k, n] : by_kind) n_events += n;
  std::cout << "events: " << n_events << '\n';
  for (const auto& [k, n] : by_kind) std::cout << "  " << k << ": " << n << '\n';
  std::cout << "samples: " << av.size() << '\n';
  std::cout << "arousal_mean: " << text::format_fixed(sa.mean, 4) << "\narousal_sd: " << text::format_fixed(sa.sigma, 4)
            << "\nvalence_mean: " << text::format_fixed(sv.mean, 4) << "\nvalence_sd: " << text::format_fixed(sv.sigma, 4)
            << '\n';
  std::cout << "directives: " << n_directives << '\n';
  for (const auto& [k, n] : by_directive) std::cout << "  " << k << ": " << n << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"affectloop: closed-loop affective horror game simulator and emotion-event triangulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "affectloop 1.0");

  SimulateOpts so;
  auto* sim_cmd = app.add_subcommand("simulate", "run sessions and write session directories");
  sim_cmd->add_option("--config", so.config, "scenario file (key = value)")->check(CLI::ExistingFile);
  sim_cmd->add_option("--seed", so.seed, "seed (AFFECTLOOP_SEED overrides)");
  sim_cmd->add_option("--condition", so.condition, "nbf, vibf or nvibf")
      ->check(CLI::IsMember({"nbf", "vibf", "nvibf"}));
  sim_cmd->add_option("--out", so.out, "output directory")->required();
  sim_cmd->add_option("--runs", so.runs, "number of consecutive seeds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--jobs", so.jobs, "parallel sessions")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--duration", so.duration, "session length in seconds")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--policy", so.policy, "explorer, objective or fleer")
      ->check(CLI::IsMember({"explorer", "objective", "fleer"}));

  std::string cal_in, cal_out;
  int cal_smoothing = piers::kDefaultSmoothingWindow;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit a PIERS model from calibration phases");
  cal_cmd->add_option("--input", cal_in, "calibration csv")->required();
  cal_cmd->add_option("--out", cal_out, "model file (default stdout)");
  cal_cmd->add_option("--smoothing", cal_smoothing, "moving-average window")->check(CLI::PositiveNumber);

  std::string cls_model, cls_physio, cls_out;
  int cls_window = 10;
  auto* cls_cmd = app.add_subcommand("classify", "classify a physio csv into an AV csv");
  cls_cmd->add_option("--model", cls_model, "model file from calibrate")->required();
  cls_cmd->add_option("--physio", cls_physio, "physio csv (t,sc,hr,emg_zyg,emg_corr)")->required();
  cls_cmd->add_option("--out", cls_out, "AV csv (default stdout)");
  cls_cmd->add_option("--window", cls_window, "samples per classification window")->check(CLI::PositiveNumber);

  TriangulateOpts to;
  auto* tri_cmd = app.add_subcommand("triangulate", "find emotional responses to events");
  tri_cmd->add_option("--trace", to.trace, "AV csv (t,arousal,valence)")->required();
  tri_cmd->add_option("--events", to.events, "event log (tsv)")->required();
  tri_cmd->add_option("--mode", to.mode, "threshold mode")->check(CLI::IsMember({"literal", "deviation"}));
  tri_cmd->add_option("--window", to.window, "response window in seconds")->check(CLI::PositiveNumber);
  tri_cmd->add_option("--out", to.out, "response csv (default stdout)");
  tri_cmd->add_option("--offset", to.offset, "seconds added to trace timestamps");
  tri_cmd->add_option("--save", to.save, "also write an .eet session file");
  tri_cmd->add_option("--exclude-kind", to.exclude, "skip events of this kind (repeatable)");

  std::string rep_dir;
  auto* rep_cmd = app.add_subcommand("report", "summarise a session directory");
  rep_cmd->add_option("dir", rep_dir, "session directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim_cmd) return do_simulate(so);
    if (*cal_cmd) return do_calibrate(cal_in, cal_out, cal_smoothing);
    if (*cls_cmd) return do_classify(cls_model, cls_physio, cls_out, cls_window);
    if (*tri_cmd) return do_triangulate(to);
    if (*rep_cmd) return do_report(rep_dir);
  } catch (const InputFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
