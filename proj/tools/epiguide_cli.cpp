#include "epiguide/analysis.hpp"
#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"
#include "epiguide/mesh_io.hpp"
#include "epiguide/planner.hpp"
#include "epiguide/service.hpp"
#include "epiguide/session.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace epiguide;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

/// Config file (or {}) with --set overrides applied, parsed as a session config.
SessionConfig load_session_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) {
    apply_override(doc, o);
  }
  return session_config_from_json(doc, path.empty() ? fs::path{} : fs::path(path).parent_path());
}

/// Without a script the trial is the default radial approach on the phantom:
/// from 30 mm outside the pericardium straight toward the center, stopping
/// 1 mm inside it.
ScriptedTrajectory default_script(const SessionConfig& config) {
  const PhantomConfig p = config.anatomy.phantom.value_or(PhantomConfig{});
  const Vec3 start = p.center + Vec3(0.0, 0.0, p.pericardium_radius + 30.0);
  return ScriptedTrajectory::straight_advance(start, -Vec3::UnitZ(), 31.0, 10.0, 0.5);
}

void write_wav(const fs::path& path, const std::vector<float>& audio, double rate) {
  write_file_atomically(path, encode_wav(audio, static_cast<int>(rate)));
}

int run_simulate(const std::string& config_path, const std::vector<std::string>& overrides,
                 const std::string& wav_flag, const std::string& log_flag, std::uint64_t seed,
                 const std::string& cohort_dir, int trials_per_modality) {
  SessionConfig config = load_session_config(config_path, overrides);
  if (!wav_flag.empty()) config.wav_path = wav_flag;
  if (!log_flag.empty()) config.log_path = log_flag;
  const auto anatomy = config.anatomy.build();

  if (!cohort_dir.empty()) {
    CohortOptions options;
    options.seed = seed;
    options.trials_per_modality = trials_per_modality;
    const auto logs = generate_cohort(config, *anatomy, options);
    fs::create_directories(cohort_dir);
    int i = 0;
    for (const auto& log : logs) {
      char name[64];
      std::snprintf(name, sizeof name, "trial_%03d_%s.jsonl", ++i, log.modality.c_str());
      write_trial_log(log, fs::path(cohort_dir) / name);
    }
    std::cout << json{{"cohort_dir", cohort_dir}, {"trials", logs.size()}, {"seed", seed}}.dump() << '\n';
    return 0;
  }

  if (config.audio == AudioMode::Device || config.audio == AudioMode::Both) {
    throw ConfigError("no host audio device backend in this build; use audio=wav");
  }
  const auto script = config.script ? script_from_json(*config.script) : default_script(config);
  const bool want_audio = config.audio == AudioMode::Wav && config.wav_path.has_value();
  const auto result = run_headless(config, *anatomy, script, want_audio);
  if (config.log_path) {
    write_trial_log(result.log, *config.log_path);
  }
  if (want_audio) {
    write_wav(*config.wav_path, result.audio, config.audio_rate);
  }
  json summary{{"outcome", to_string(*result.log.outcome)},
               {"samples", result.log.samples.size()},
               {"execution_time", result.log.execution_time()},
               {"final_state", result.log.samples.back().state}};
  if (config.log_path) summary["log"] = config.log_path->string();
  if (want_audio) summary["wav"] = config.wav_path->string();
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_serve(const std::string& config_path, const std::vector<std::string>& overrides, const std::string& log_flag,
              double duration) {
  SessionConfig config = load_session_config(config_path, overrides);
  if (!log_flag.empty()) config.log_path = log_flag;
  Service service(config, config.anatomy.build());
  service.start();
  std::cout << json{{"ws_port", service.ws_port()}, {"udp_port", service.udp_port()}}.dump() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) {
      break;
    }
  }
  service.stop();
  const auto s = service.stats();
  std::cout << json{{"control_ticks", s.control_ticks},
                    {"audio_blocks", s.audio_blocks},
                    {"malformed_packets", s.malformed_packets},
                    {"trials_closed", s.trials_closed}}
                   .dump()
            << std::endl;
  return 0;
}

int run_plan(const std::string& scene_path, const std::string& report_path, bool serial) {
  const auto file = load_scene(scene_path);
  const auto result = plan(file.scene, file.entries, file.targets, serial ? Execution::Serial : Execution::Parallel);
  const auto report = plan_report(file.scene, result);
  if (!report_path.empty()) {
    write_file_atomically(report_path, report.dump(2) + "\n");
  }
  std::cout << json{{"candidates", result.verdicts.size()},
                    {"accepted", result.ranked.size()},
                    {"rejected", report.at("rejected")}}
                   .dump()
            << '\n';
  return 0;
}

int run_replay(const std::string& log_path, const std::string& wav_path, const std::vector<std::string>& overrides) {
  const auto log = read_trial_log(log_path);
  std::optional<RenderSettings> settings;
  if (!overrides.empty()) {
    json doc = log.render_settings;
    for (const auto& o : overrides) {
      apply_override(doc, o);
    }
    settings = doc.get<RenderSettings>();
  }
  const auto result = replay(log, settings);
  const double rate = settings ? settings->voice.sample_rate
                               : log.render_settings.value("audio_rate", 48000.0);
  write_wav(wav_path, result.audio, rate);
  std::cout << json{{"wav", wav_path}, {"samples", result.audio.size()}, {"states", result.states.size()}}.dump()
            << '\n';
  return 0;
}

int run_gen_phantom(const std::string& config_path, const std::vector<std::string>& overrides,
                    const std::string& out_dir, const std::string& format) {
  json doc = config_path.empty() ? json::object() : read_json_file(config_path);
  for (const auto& o : overrides) {
    apply_override(doc, o);
  }
  const auto pc = doc.get<PhantomConfig>();
  const auto anatomy = generate_phantom(pc);
  save_anatomy(anatomy, out_dir, format);
  std::cout << json{{"manifest", (fs::path(out_dir) / "anatomy.json").string()}, {"edf_index", anatomy.edf_index()}}
                   .dump()
            << '\n';
  return 0;
}

int run_analyze(const std::string& dir, const std::string& report_path, std::string markdown_path) {
  const auto logs = read_trial_directory(dir);
  const auto report = analyze_trials(logs);
  if (markdown_path.empty()) {
    markdown_path = fs::path(report_path).replace_extension(".md").string();
  }
  write_file_atomically(report_path, report.dump(2) + "\n");
  write_file_atomically(markdown_path, report_markdown(report));
  std::cout << json{{"report", report_path}, {"markdown", markdown_path}, {"trials", logs.size()}}.dump() << '\n';
  return 0;
}

int print_error(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sonified needle-navigation engine"};
  app.set_version_flag("--version", std::string("epiguide ") + EPIGUIDE_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string wav_path;
  std::string log_path;
  std::uint64_t seed = 1;

  auto* simulate = app.add_subcommand("simulate", "Run a scripted trial offline (or generate a synthetic cohort)");
  std::string cohort_dir;
  int trials_per_modality = 60;
  simulate->add_option("--config", config_path, "Session config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--set", overrides, "Config override key=value (dotted keys)");
  simulate->add_option("--wav", wav_path, "WAV output path");
  simulate->add_option("--log", log_path, "Trial log (JSONL) output path");
  simulate->add_option("--seed", seed, "Seed for cohort generation")->capture_default_str();
  simulate->add_option("--cohort-dir", cohort_dir, "Write a synthetic V/MS cohort of trial logs here");
  simulate->add_option("--trials-per-modality", trials_per_modality, "Cohort size per modality")
      ->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the live service (UDP/OSC in, WebSocket out)");
  double duration = 0.0;
  serve->add_option("--config", config_path, "Session config JSON")->check(CLI::ExistingFile);
  serve->add_option("--set", overrides, "Config override key=value");
  serve->add_option("--log", log_path, "Trial log file or directory");
  serve->add_option("--duration", duration, "Stop after this many seconds (0 = until interrupted)");
  serve->add_option("--seed", seed, "Unused; accepted for a uniform interface");

  auto* plan_cmd = app.add_subcommand("plan", "Filter and rank candidate trajectories for a scene");
  std::string scene_path;
  std::string report_path;
  bool serial = false;
  plan_cmd->add_option("--scene,--config", scene_path, "Scene JSON")->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--report", report_path, "Report JSON output path");
  plan_cmd->add_flag("--serial", serial, "Use the serial reference kernels");
  plan_cmd->add_option("--seed", seed, "Unused; planning is deterministic");

  auto* replay_cmd = app.add_subcommand("replay", "Re-render the audio of a logged trial");
  replay_cmd->add_option("--log", log_path, "Trial log (JSONL)")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--wav", wav_path, "WAV output path")->required();
  replay_cmd->add_option("--set", overrides, "Render setting override key=value, e.g. voice.mode_count=4");

  auto* gen = app.add_subcommand("gen-phantom", "Write the analytic two-shell phantom as meshes");
  std::string out_dir;
  std::string format = "stl";
  gen->add_option("--config", config_path, "Phantom config JSON")->check(CLI::ExistingFile);
  gen->add_option("--set", overrides, "Phantom override key=value");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--format", format, "stl or obj")->check(CLI::IsMember({"stl", "obj"}))->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Statistics report over a directory of trial logs");
  std::string trials_dir;
  std::string markdown_path;
  analyze->add_option("dir", trials_dir, "Directory of .jsonl trial logs")->required();
  analyze->add_option("--report", report_path, "Report JSON output path")->required();
  analyze->add_option("--markdown", markdown_path, "Markdown output path (default: report path with .md)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) {
      sub = s;
    }
    std::cerr << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (*simulate) {
      return run_simulate(config_path, overrides, wav_path, log_path, seed, cohort_dir, trials_per_modality);
    }
    if (*serve) {
      return run_serve(config_path, overrides, log_path, duration);
    }
    if (*plan_cmd) {
      return run_plan(scene_path, report_path, serial);
    }
    if (*replay_cmd) {
      return run_replay(log_path, wav_path, overrides);
    }
    if (*gen) {
      return run_gen_phantom(config_path, overrides, out_dir, format);
    }
    if (*analyze) {
      return run_analyze(trials_dir, report_path, markdown_path);
    }
  } catch (const ConfigError& e) {
    return print_error("config", e.what(), 3);
  } catch (const ParseError& e) {
    return print_error("parse", e.what(), 4);
  } catch (const DomainError& e) {
    return print_error("domain", e.what(), 5);
  } catch (const std::exception& e) {
    return print_error("runtime", e.what(), 1);
  }
  return 1;
}
