#include "epiguide/sonmap.hpp"

#include "epiguide/error.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

const char* to_string(SonificationState s) {
  switch (s) {
    case SonificationState::OuterPericardialZone:
      return "OuterPericardialZone";
    case SonificationState::PrePunctureZone:
      return "PrePunctureZone";
    case SonificationState::SafePunctureZone:
      return "SafePunctureZone";
    case SonificationState::Myocardium:
      return "Myocardium";
  }
  return "?";
}

SonificationState classify_state(double d_tp, double d_tm) {
  if (d_tm <= kMyocardiumThresholdMm) {
    return SonificationState::Myocardium;
  }
  if (d_tp <= kPunctureThresholdMm) {
    return SonificationState::SafePunctureZone;
  }
  if (d_tp <= kPrePunctureThresholdMm) {
    return SonificationState::PrePunctureZone;
  }
  return SonificationState::OuterPericardialZone;
}

double normalize(double d, double d_min, double d_max) {
  if (!(d_max > d_min)) {
    throw ConfigError("normalization bounds need d_max > d_min");
  }
  return (std::clamp(d, d_min, d_max) - d_min) / (d_max - d_min);
}

NormalizedDistances normalize_distances(double d_tp, double d_tm, const NormalizationBounds& b) {
  return {normalize(d_tp, b.tp_min, b.tp_max), normalize(d_tm, b.tm_min, b.tm_max)};
}

double ParamRule::evaluate(const NormalizedDistances& norm) const {
  if (!ramp) {
    return from_value;
  }
  const double x = driver == Driver::Tp ? norm.tp : norm.tm;
  const double frac = std::clamp((x - from_norm) / (to_norm - from_norm), 0.0, 1.0);
  if (frac == 1.0) {
    return to_value;
  }
  return from_value + frac * (to_value - from_value);
}

const MappingTable& default_mapping_table() {
  using R = ParamRule;
  static const MappingTable table = [] {
    MappingTable t{};
    auto set = [&t](int state, Param p, R rule) {
      t[static_cast<std::size_t>(state - 1)][static_cast<std::size_t>(p)] = rule;
    };
    set(1, Param::F0, R::constant(100.0));
    set(1, Param::Beta, R::constant(2.0));
    set(1, Param::Alpha, R::constant(10.0));
    set(1, Param::DeltaT, R::interpolate(Driver::Tp, 1.0, 0.5, 500.0, 271.0));

    set(2, Param::F0, R::constant(100.0));
    set(2, Param::Beta, R::interpolate(Driver::Tm, 1.0, 0.5, 2.0, 1.06));
    set(2, Param::Alpha, R::interpolate(Driver::Tm, 1.0, 0.5, 10.0, 5.075));
    set(2, Param::DeltaT, R::interpolate(Driver::Tp, 0.5, 0.0, 270.0, 40.0));

    set(3, Param::F0, R::constant(400.0));
    set(3, Param::Beta, R::interpolate(Driver::Tm, 0.5, 0.0, 1.05, 0.1));
    set(3, Param::Alpha, R::interpolate(Driver::Tm, 0.5, 0.0, 5.075, 0.15));
    set(3, Param::DeltaT, R::constant(40.0));

    set(4, Param::F0, R::constant(1000.0));
    set(4, Param::Beta, R::constant(0.1));
    set(4, Param::Alpha, R::constant(0.15));
    set(4, Param::DeltaT, R::constant(40.0));
    return t;
  }();
  return table;
}

MembraneControl map_params(SonificationState state, const NormalizedDistances& norm,
                           const MembraneControl& previous, const MappingTable& table) {
  MembraneControl out = previous;
  out.state = state;
  const auto& row = table[static_cast<std::size_t>(state_number(state) - 1)];
  auto apply = [&](Param p, double& field) {
    if (const auto& rule = row[static_cast<std::size_t>(p)]) {
      field = rule->evaluate(norm);
    }
  };
  apply(Param::F0, out.f0);
  apply(Param::Beta, out.beta);
  apply(Param::Alpha, out.alpha);
  apply(Param::DeltaT, out.delta_t_ms);
  return out;
}

ControlMapper::ControlMapper(MembraneControl initial, NormalizationBounds bounds, const MappingTable& table)
    : current_(initial), bounds_(bounds), table_(&table) {
  (void)normalize(0.0, bounds_.tp_min, bounds_.tp_max);
  (void)normalize(0.0, bounds_.tm_min, bounds_.tm_max);
}

const MembraneControl& ControlMapper::update(double d_tp, double d_tm) {
  const auto state = classify_state(d_tp, d_tm);
  current_ = map_params(state, normalize_distances(d_tp, d_tm, bounds_), current_, *table_);
  return current_;
}

ExcitationScheduler::ExcitationScheduler(double sample_rate, std::int64_t first_event)
    : rate_(sample_rate), next_(first_event) {
  if (!(sample_rate > 0.0)) {
    throw ConfigError("sample rate must be > 0");
  }
}

std::int64_t ExcitationScheduler::interval_samples(double delta_t_ms) const {
  return std::max<std::int64_t>(1, std::llround(delta_t_ms * rate_ / 1000.0));
}

void ExcitationScheduler::fire(double delta_t_ms) { next_ += interval_samples(delta_t_ms); }

std::vector<double> schedule_excitations(std::span<const TimedInterval> timeline, double end_s, double sample_rate,
                                         double initial_delta_t_ms) {
  ExcitationScheduler clock(sample_rate);
  std::vector<double> events;
  const auto end_sample = static_cast<std::int64_t>(std::floor(end_s * sample_rate + 1e-9));
  while (clock.next_event() <= end_sample) {
    const double now = static_cast<double>(clock.next_event()) / sample_rate;
    double dt = initial_delta_t_ms;
    for (const auto& entry : timeline) {
      if (entry.time_s <= now + 1e-12) {
        dt = entry.delta_t_ms;
      }
    }
    events.push_back(1000.0 * now);
    clock.fire(dt);
  }
  return events;
}

} // namespace epiguide
