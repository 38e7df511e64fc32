#pragma once

#include "epiguide/anatomy.hpp"
#include "epiguide/membrane.hpp"
#include "epiguide/navkernel.hpp"
#include "epiguide/sonmap.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace epiguide {

/// Everything that decides the rendered audio for a given control stream.
/// Stored in each trial log header so replays do not depend on the caller's
/// configuration.
struct RenderSettings {
  double control_rate = 60.0;
  int block_size = 256;
  VoiceConfig voice;
  double force = 1.0;
  NormalizationBounds bounds;

  void validate() const;
};

void to_json(nlohmann::json& j, const RenderSettings& s);
void from_json(const nlohmann::json& j, RenderSettings& s);

enum class InputMode { Script, Udp, WebSocket };
enum class AudioMode { None, Wav, Device, Both };

struct ScriptKeyframe {
  double time = 0.0;
  NeedlePose pose;
};

/// Piecewise-linear needle motion. The axis is interpolated and renormalized.
class ScriptedTrajectory {
 public:
  /// Throws ConfigError for fewer than two keyframes or non-increasing times.
  explicit ScriptedTrajectory(std::vector<ScriptKeyframe> keyframes);

  [[nodiscard]] NeedlePose pose_at(double t) const;
  [[nodiscard]] double start_time() const { return keys_.front().time; }
  [[nodiscard]] double end_time() const { return keys_.back().time; }
  [[nodiscard]] double duration() const { return end_time() - start_time(); }
  [[nodiscard]] const std::vector<ScriptKeyframe>& keyframes() const { return keys_; }

  /// Straight advance from `start` along `axis` at `speed_mm_s` for `depth_mm`,
  /// then a hold of `hold_s` seconds.
  static ScriptedTrajectory straight_advance(const Vec3& start, const Vec3& axis, double depth_mm, double speed_mm_s,
                                             double hold_s = 0.0);

 private:
  std::vector<ScriptKeyframe> keys_;
};

[[nodiscard]] ScriptedTrajectory script_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json script_to_json(const ScriptedTrajectory& s);

struct AnatomySource {
  std::optional<PhantomConfig> phantom;
  std::optional<std::filesystem::path> manifest;

  [[nodiscard]] std::shared_ptr<const AnimatedAnatomy> build() const;
};

struct SessionConfig {
  AnatomySource anatomy;
  InputMode input = InputMode::Script;
  AudioMode audio = AudioMode::Wav;
  double audio_rate = 48000.0;
  RenderSettings render;
  std::string modality = "MS";
  std::string trajectory_id = "T1";
  std::string group;
  std::optional<Vec3> target;
  double warmup = 0.1;
  std::optional<nlohmann::json> script;
  std::string bind_address = "127.0.0.1";
  int udp_port = 9000;
  int ws_port = 8080;
  std::optional<std::filesystem::path> log_path;
  std::optional<std::filesystem::path> wav_path;

  /// Throws ConfigError for rates or modes outside their allowed sets.
  void validate() const;
};

/// Parses a config object; unknown keys are rejected. Relative paths resolve
/// against `base_dir`.
[[nodiscard]] SessionConfig session_config_from_json(const nlohmann::json& j,
                                                     const std::filesystem::path& base_dir = {});

/// Applies `a.b.c=value` overrides to a JSON document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct HeadlessResult {
  TrialLog log;
  std::vector<MembraneControl> controls; ///< one per control step
  std::vector<float> audio;             ///< empty unless rendering was requested
};

/// Offline trial: steps the control clock over the script, computes distances,
/// contacts, states and controls, renders audio in lockstep, and closes the log.
/// Deterministic for a given (config, script).
[[nodiscard]] HeadlessResult run_headless(const SessionConfig& config, const AnimatedAnatomy& anatomy,
                                          const ScriptedTrajectory& script, bool render_audio);

/// Audio for a per-control-step control stream. Step k is published at
/// k / control_rate and applied from the first block that starts at or after
/// that time.
[[nodiscard]] std::vector<float> render_control_stream(std::span<const MembraneControl> controls,
                                                       const RenderSettings& settings, std::int64_t total_samples);

struct ReplayResult {
  std::vector<float> audio;
  std::vector<SonificationState> states;
};

/// Re-renders a logged trial from its samples. Settings default to those
/// recorded in the log header.
[[nodiscard]] ReplayResult replay(const TrialLog& log, const std::optional<RenderSettings>& override_settings = {});

/// Number of samples a trial of `duration_s` renders to.
[[nodiscard]] std::int64_t trial_sample_count(double duration_s, double audio_rate);

struct CohortOptions {
  int trials_per_modality = 60;
  std::uint64_t seed = 1;
  double approach_start_radius = 80.0; ///< mm from the phantom center
  double speed_mm_s = 10.0;
};

/// Synthetic two-arm study on the configured anatomy: each trial advances
/// radially toward the center and stops at a depth drawn per modality (wider
/// spread for "V" than for "MS"). Deterministic for a given seed.
[[nodiscard]] std::vector<TrialLog> generate_cohort(const SessionConfig& config, const AnimatedAnatomy& anatomy,
                                                    const CohortOptions& options);

/// Single-writer, single-reader latest-value slot (triple buffer). The reader
/// never blocks and always sees a complete value.
template <typename T>
class LatestValue {
 public:
  explicit LatestValue(const T& initial = T{}) : slots_{initial, initial, initial} {}

  void publish(const T& value) {
    slots_[write_] = value;
    const auto prev = shared_.exchange(static_cast<std::uint8_t>(write_ | kFresh), std::memory_order_acq_rel);
    write_ = prev & kIndexMask;
  }

  /// Returns the most recent value; `fresh` reports whether it changed since
  /// the previous read.
  const T& read(bool* fresh = nullptr) {
    if (shared_.load(std::memory_order_relaxed) & kFresh) {
      const auto prev = shared_.exchange(read_, std::memory_order_acq_rel);
      read_ = prev & kIndexMask;
      if (fresh) {
        *fresh = true;
      }
    } else if (fresh) {
      *fresh = false;
    }
    return slots_[read_];
  }

 private:
  static constexpr std::uint8_t kFresh = 0x4;
  static constexpr std::uint8_t kIndexMask = 0x3;
  T slots_[3];
  std::uint8_t write_ = 0;
  std::uint8_t read_ = 1;
  std::atomic<std::uint8_t> shared_{2};
};

} // namespace epiguide
