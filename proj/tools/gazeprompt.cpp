// gazeprompt: synth, analyze, prompt, replay, serve.
//
// Exit codes: 0 success, 1 data or runtime error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

#include "gazeprompt/gazeprompt.hpp"

namespace gp = gazeprompt;
using gp::json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream ss;
  ss << std::setprecision(10) << *v;
  return ss.str();
}

gp::GazeRecording load(const std::string& path, const std::string& format) {
  return format.empty() ? gp::read_recording(path) : gp::read_recording(path, gp::parse_recording_format(format));
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string profile = "novice";
  std::uint64_t seed = 42;
  double duration_ms = 30000.0;
  std::string out;
  std::string format;
  std::string config;
  std::string plan_out;
  bool json_output = false;
};

int cmd_synth(const SynthArgs& a) {
  auto config = gp::resolve_service_config(a.config);
  auto profile = gp::ScanpathProfile::of(gp::parse_profile_kind(a.profile), a.seed);
  auto trace = gp::synth_trace_with_plan(profile, config.geometry, a.duration_ms);
  if (a.format.empty()) {
    gp::write_recording(trace.recording, a.out);
  } else {
    gp::write_recording(trace.recording, a.out, gp::parse_recording_format(a.format));
  }
  if (!a.plan_out.empty()) {
    json plan = json::array();
    for (const auto& d : trace.plan)
      plan.push_back({{"start_us", d.start_us},
                      {"planned_duration_ms", d.planned_duration_ms},
                      {"target_x_px", d.target_x_px},
                      {"target_y_px", d.target_y_px},
                      {"sample_count", d.sample_count}});
    std::ofstream(a.plan_out) << plan.dump(2) << '\n';
  }
  if (a.json_output) {
    std::cout << json{{"samples", trace.recording.samples.size()}, {"dwells", trace.plan.size()}, {"out", a.out}}.dump()
              << '\n';
  } else {
    std::cout << "samples: " << trace.recording.samples.size() << "\ndwells: " << trace.plan.size() << '\n';
  }
  return 0;
}

// --- analyze / prompt ------------------------------------------------------

struct AnalyzeArgs {
  std::string recording;
  std::string format;
  std::string config;
  bool json_output = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  auto config = gp::resolve_service_config(a.config);
  auto rec = load(a.recording, a.format);
  auto analysis = gp::analyze(rec, config.fixation);
  const auto& m = analysis.metrics;
  if (a.json_output) {
    std::cout << json(m).dump() << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(32) << "mean_fixation_duration_ms" << fmt_opt(m.mean_fixation_duration_ms) << '\n'
            << std::setw(32) << "fixation_count_per_s" << fmt_opt(m.fixation_count_per_s) << '\n'
            << std::setw(32) << "mean_saccade_length_px" << fmt_opt(m.mean_saccade_length_px) << '\n'
            << std::setw(32) << "mean_pupil_dilation_mm" << fmt_opt(m.mean_pupil_dilation_mm) << '\n'
            << std::setw(32) << "n_fixations (N)" << m.n_fixations << '\n'
            << std::setw(32) << "n_pupil_samples (M)" << m.n_pupil_samples << '\n'
            << std::setw(32) << "baseline_pupil_mm" << fmt_opt(m.baseline_pupil_mm) << '\n'
            << std::setw(32) << "total_time_ms" << fmt_opt(m.total_time_ms) << '\n';
  return 0;
}

struct PromptArgs {
  std::string recording;
  std::string format;
  std::string mode = "realtime";
  std::string config;
  std::string thresholds;
  bool json_output = false;
};

int cmd_prompt(const PromptArgs& a) {
  auto config = gp::resolve_service_config(a.config);
  if (!a.thresholds.empty()) {
    std::ifstream in(a.thresholds);
    if (!in) throw gp::IoError("cannot read thresholds file " + a.thresholds);
    auto j = json::parse(in);
    config.thresholds = (j.contains("thresholds") ? j["thresholds"] : j).get<gp::ThresholdConfig>();
  }
  const auto mode = gp::parse_prompt_mode(a.mode);
  if (mode == gp::PromptMode::fallback) throw UsageError("--mode must be realtime or preset");
  auto rec = load(a.recording, a.format);
  auto analysis = gp::analyze(rec, config.fixation);
  auto [flags, prompt] = gp::prompt_for_session(analysis.metrics, config.thresholds, mode);
  if (a.json_output) {
    std::cout << json{{"flags", flags}, {"prompt", prompt}}.dump() << '\n';
    return 0;
  }
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::cout << "long_fixation_duration=" << b(flags.long_fixation_duration) << '\n'
            << "high_fixation_count=" << b(flags.high_fixation_count) << '\n'
            << "short_saccades=" << b(flags.short_saccades) << '\n'
            << "high_pupil_dilation=" << b(flags.high_pupil_dilation) << '\n'
            << prompt.text << '\n';
  return 0;
}

// --- replay ----------------------------------------------------------------

struct ReplayArgs {
  std::string recording;
  std::string format;
  std::string target = "127.0.0.1:8765";
  double speed = 1.0;
  std::string session_id;
  std::string snippet;
  std::string mode = "realtime";
  std::size_t batch = 6;
  bool trigger = false;
  bool confirm = false;
  bool close = false;
  bool json_output = false;
};

std::string base_url(const std::string& target) {
  if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) return target;
  return "http://" + target;
}

json post(httplib::Client& client, const std::string& path, const json& body) {
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw gp::TransportError("cannot reach service: " + httplib::to_string(res.error()), 1);
  auto reply = res->body.empty() ? json::object() : json::parse(res->body);
  if (res->status >= 300) {
    std::string msg = reply.contains("error") ? reply["error"].value("message", res->body) : res->body;
    throw gp::Error("service returned HTTP " + std::to_string(res->status) + " for " + path + ": " + msg);
  }
  return reply;
}

int cmd_replay(const ReplayArgs& a) {
  if (a.confirm && !a.trigger) throw UsageError("--confirm requires --trigger");
  if (a.batch == 0) throw UsageError("--batch must be positive");
  auto rec = load(a.recording, a.format);
  std::ifstream snippet(a.snippet, std::ios::binary);
  if (!snippet) throw gp::IoError("cannot read snippet " + a.snippet);
  std::ostringstream code;
  code << snippet.rdbuf();

  httplib::Client client(base_url(a.target));
  client.set_connection_timeout(std::chrono::seconds(5));
  client.set_read_timeout(std::chrono::seconds(120));

  json create{{"mode", a.mode},
              {"source_code", code.str()},
              {"geometry", {{"screen_width_px", rec.screen_width_px}, {"screen_height_px", rec.screen_height_px}}}};
  if (!a.session_id.empty()) create["session_id"] = a.session_id;
  const auto id = post(client, "/sessions", create).at("session_id").get<std::string>();
  const std::string prefix = "/sessions/" + id;

  std::vector<gp::GazeSample> pending;
  std::size_t sent = 0;
  auto flush = [&] {
    if (pending.empty()) return;
    post(client, prefix + "/samples", json{{"samples", pending}});
    sent += pending.size();
    pending.clear();
  };
  gp::replay(rec, a.speed, [&](const gp::GazeSample& s) {
    pending.push_back(s);
    if (pending.size() >= a.batch) flush();
  });
  flush();

  json result{{"session_id", id}, {"samples_sent", sent}};
  if (a.trigger) {
    auto t = post(client, prefix + "/trigger", json::object());
    result["prompt"] = t["prompt"];
    result["flags"] = t["flags"];
  }
  if (a.confirm) result["response"] = post(client, prefix + "/confirm", json::object())["response"];
  if (a.close) post(client, prefix + "/close", json::object());

  if (a.json_output) {
    std::cout << result.dump() << '\n';
  } else {
    std::cout << "session: " << id << "\nsamples sent: " << sent << '\n';
    if (result.contains("prompt")) std::cout << "prompt: " << result["prompt"]["text"].get<std::string>() << '\n';
    if (result.contains("response"))
      std::cout << "refactored code:\n" << result["response"]["refactored_code"].get<std::string>() << '\n';
  }
  return 0;
}

// --- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string bind;
  std::string config;
  std::string journal_dir;
};

int cmd_serve(const ServeArgs& a) {
  auto config = gp::resolve_service_config(a.config);
  if (!a.journal_dir.empty()) config.journal_dir = a.journal_dir;
  auto addr = gp::parse_bind(a.bind.empty() ? config.bind : a.bind);

  // route SIGINT/SIGTERM to a waiter thread instead of an async handler
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  gp::Service service(config);
  int port = 0;
  try {
    port = service.bind(addr);
  } catch (const gp::IoError& e) {
    std::cerr << "gazeprompt serve: " << e.what() << '\n';
    return kExitData;
  }
  std::cout << "listening on " << addr.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  // run() also returns if the server fails; make sure the waiter exits
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaze metrics, cognitive-load triggers and gaze-informed refactoring prompts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gp::kVersion));

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic reading trace");
  s->add_option("--profile", synth.profile, "novice or expert")->check(CLI::IsMember({"novice", "expert"}));
  s->add_option("--seed", synth.seed, "RNG seed");
  s->add_option("--duration-ms", synth.duration_ms, "Trace length in milliseconds")->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "Output recording path")->required();
  s->add_option("--format", synth.format, "jsonl or csv (default: by extension)")->check(CLI::IsMember({"jsonl", "csv"}));
  s->add_option("--config", synth.config, "Configuration file (geometry)");
  s->add_option("--plan-out", synth.plan_out, "Write the ground-truth dwell plan as JSON");
  s->add_flag("--json", synth.json_output, "Machine-readable output");

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Compute gaze metrics for a recording");
  an->add_option("recording", analyze.recording)->required();
  an->add_option("--format", analyze.format)->check(CLI::IsMember({"jsonl", "csv"}));
  an->add_option("--config", analyze.config, "Configuration file (fixation settings)");
  an->add_flag("--json", analyze.json_output, "Machine-readable output");

  PromptArgs prompt;
  auto* pr = app.add_subcommand("prompt", "Evaluate thresholds and print the prompt");
  pr->add_option("recording", prompt.recording)->required();
  pr->add_option("--format", prompt.format)->check(CLI::IsMember({"jsonl", "csv"}));
  pr->add_option("--mode", prompt.mode)->check(CLI::IsMember({"realtime", "preset"}));
  pr->add_option("--config", prompt.config, "Configuration file");
  pr->add_option("--thresholds", prompt.thresholds, "JSON file with threshold overrides");
  pr->add_flag("--json", prompt.json_output, "Machine-readable output");

  ReplayArgs replay;
  auto* rp = app.add_subcommand("replay", "Stream a recording into a running service");
  rp->add_option("recording", replay.recording)->required();
  rp->add_option("--format", replay.format)->check(CLI::IsMember({"jsonl", "csv"}));
  rp->add_option("--target", replay.target, "Service address host:port or URL");
  rp->add_option("--speed", replay.speed, "Playback speed multiplier, 0 = unthrottled")->check(CLI::NonNegativeNumber);
  rp->add_option("--session-id", replay.session_id);
  rp->add_option("--snippet", replay.snippet, "Source file under review")->required();
  rp->add_option("--mode", replay.mode)->check(CLI::IsMember({"realtime", "preset"}));
  rp->add_option("--batch", replay.batch, "Samples per request")->check(CLI::PositiveNumber);
  rp->add_flag("--trigger", replay.trigger, "Trigger the prompt after the last sample");
  rp->add_flag("--confirm", replay.confirm, "Confirm the refactoring after triggering");
  rp->add_flag("--close", replay.close, "Close the session at the end");
  rp->add_flag("--json", replay.json_output, "Machine-readable output");

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Run the session service");
  sv->add_option("--bind", serve.bind, "host:port (port 0 picks a free port)");
  sv->add_option("--config", serve.config, "Configuration file");
  sv->add_option("--journal-dir", serve.journal_dir, "Directory for session journals (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*an) return cmd_analyze(analyze);
    if (*pr) return cmd_prompt(prompt);
    if (*rp) return cmd_replay(replay);
    if (*sv) return cmd_serve(serve);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gp::InsufficientData& e) {
    std::cerr << "gazeprompt: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "gazeprompt: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
