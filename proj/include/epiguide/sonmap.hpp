#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epiguide {

enum class SonificationState : int {
  OuterPericardialZone = 1,
  PrePunctureZone = 2,
  SafePunctureZone = 3,
  Myocardium = 4,
};

[[nodiscard]] const char* to_string(SonificationState s);
[[nodiscard]] inline int state_number(SonificationState s) { return static_cast<int>(s); }

/// Thresholds on raw (non-normalized) signed distances, mm.
inline constexpr double kPrePunctureThresholdMm = 5.0;
inline constexpr double kPunctureThresholdMm = 0.0;
inline constexpr double kMyocardiumThresholdMm = 2.0;

/// Priority order 4 -> 3 -> 2 -> 1; boundaries are inclusive.
[[nodiscard]] SonificationState classify_state(double d_tp, double d_tm);

/// (clip(d, lo, hi) - lo) / (hi - lo). Throws ConfigError when hi <= lo.
[[nodiscard]] double normalize(double d, double d_min, double d_max);

struct NormalizationBounds {
  double tp_min = 1.0;
  double tp_max = 60.0;
  double tm_min = 1.0;
  double tm_max = 30.0;
};

struct NormalizedDistances {
  double tp = 1.0;
  double tm = 1.0;
};

[[nodiscard]] NormalizedDistances normalize_distances(double d_tp, double d_tm,
                                                      const NormalizationBounds& bounds = {});

/// Current synthesis parameters. `force` is never touched by the mapper.
struct MembraneControl {
  double f0 = 100.0;        ///< fundamental, Hz (stands in for the membrane radius)
  double beta = 2.0;        ///< constant loss coefficient
  double alpha = 10.0;      ///< frequency-dependent loss coefficient
  double delta_t_ms = 500.0; ///< excitation interval
  double force = 1.0;       ///< excitation amplitude
  SonificationState state = SonificationState::OuterPericardialZone;

  bool operator==(const MembraneControl&) const = default;
};

enum class Param : std::uint8_t { F0, Beta, Alpha, DeltaT };
enum class Driver : std::uint8_t { Tp, Tm };

/// One cell of the mapping table: either a constant or a linear ramp from
/// `from_value` (at normalized input `from_norm`) to `to_value` (at `to_norm`).
/// Inputs beyond the interval clamp to its edges.
struct ParamRule {
  bool ramp = false;
  double from_value = 0.0;
  double to_value = 0.0;
  Driver driver = Driver::Tp;
  double from_norm = 1.0;
  double to_norm = 0.0;

  [[nodiscard]] double evaluate(const NormalizedDistances& norm) const;

  static constexpr ParamRule constant(double v) { return ParamRule{false, v, v, Driver::Tp, 1.0, 0.0}; }
  static constexpr ParamRule interpolate(Driver d, double from_n, double to_n, double from_v, double to_v) {
    return ParamRule{true, from_v, to_v, d, from_n, to_n};
  }
};

/// Rules per state (index 0 = state 1) and parameter. An empty cell means the
/// parameter keeps its previous value while that state is active.
using MappingTable = std::array<std::array<std::optional<ParamRule>, 4>, 4>;

/// The state-dependent modulation table used by the engine.
[[nodiscard]] const MappingTable& default_mapping_table();

[[nodiscard]] MembraneControl map_params(SonificationState state, const NormalizedDistances& norm,
                                         const MembraneControl& previous,
                                         const MappingTable& table = default_mapping_table());

/// Stateful front end: raw distances in, control out, with retention.
class ControlMapper {
 public:
  explicit ControlMapper(MembraneControl initial = {}, NormalizationBounds bounds = {},
                         const MappingTable& table = default_mapping_table());

  const MembraneControl& update(double d_tp, double d_tm);
  [[nodiscard]] const MembraneControl& current() const { return current_; }

 private:
  MembraneControl current_;
  NormalizationBounds bounds_;
  const MappingTable* table_;
};

/// Echolocation-style strike clock in samples. An event fires, then the
/// interval current at that moment decides when the next one is due; interval
/// changes never shorten or stretch an interval already running.
class ExcitationScheduler {
 public:
  explicit ExcitationScheduler(double sample_rate, std::int64_t first_event = 0);

  [[nodiscard]] std::int64_t next_event() const { return next_; }
  /// Consumes the due event and schedules the next one `delta_t_ms` later.
  void fire(double delta_t_ms);
  [[nodiscard]] std::int64_t interval_samples(double delta_t_ms) const;

 private:
  double rate_;
  std::int64_t next_;
};

struct TimedInterval {
  double time_s;
  double delta_t_ms;
};

/// Event times (ms) in [0, end_s] for a piecewise-constant interval timeline.
/// With no timeline entry yet active, `initial_delta_t_ms` holds.
[[nodiscard]] std::vector<double> schedule_excitations(std::span<const TimedInterval> timeline, double end_s,
                                                       double sample_rate, double initial_delta_t_ms = 500.0);

} // namespace epiguide
