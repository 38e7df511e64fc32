#include "epiguide/membrane.hpp"

#include "epiguide/bessel.hpp"
#include "epiguide/error.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

std::vector<ModeSpec> modal_frequencies(double f0, int mode_count, int m_max) {
  if (!(f0 > 0.0)) {
    throw ConfigError("fundamental frequency must be > 0");
  }
  if (mode_count < 1) {
    throw ConfigError("mode count must be >= 1");
  }
  const auto zeros = bessel_zeros(mode_count, m_max);
  const double j01 = zeros.front().value;
  std::vector<ModeSpec> modes;
  modes.reserve(zeros.size());
  for (const auto& z : zeros) {
    modes.push_back({z.m, z.n, f0 * z.value / j01});
  }
  modes.front().frequency = f0;
  return modes;
}

double damping_sigma(double beta, double alpha, double f_hz, double exponent) {
  return beta + alpha * std::pow(f_hz / 1000.0, exponent);
}

ModalVoice::ModalVoice(const VoiceConfig& config, const MembraneControl& initial)
    : config_(config), control_(initial) {
  if (!(config_.sample_rate > 0.0)) {
    throw ConfigError("sample rate must be > 0");
  }
  if (!(control_.beta >= 0.0) || !(control_.alpha >= 0.0)) {
    throw ConfigError("loss coefficients must be >= 0");
  }
  // Frequencies are rebuilt from the unit-f0 layout on every retune.
  const auto layout = modal_frequencies(1.0, config_.mode_count, config_.m_max);
  modes_.resize(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    modes_[i].m = layout[i].m;
    modes_[i].n = layout[i].n;
    modes_[i].weight = 1.0 / static_cast<double>(i + 1);
    modes_[i].phase_offset = 0.0;
  }
  retune();
}

void ModalVoice::retune() {
  const auto layout = modal_frequencies(control_.f0, config_.mode_count, config_.m_max);
  const double nyquist = 0.5 * config_.sample_rate;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    auto& mode = modes_[i];
    mode.frequency = layout[i].frequency;
    mode.audible = mode.frequency < nyquist;
    mode.sigma = damping_sigma(control_.beta, control_.alpha, mode.frequency, config_.damping_exponent);
    mode.decay_per_sample = std::exp(-mode.sigma / config_.sample_rate);
    mode.phase_step = kTwoPi * mode.frequency / config_.sample_rate;
  }
}

int ModalVoice::dropped_modes() const {
  return static_cast<int>(std::count_if(modes_.begin(), modes_.end(), [](const Mode& m) { return !m.audible; }));
}

void ModalVoice::excite(double force) {
  if (force == 0.0) {
    return;
  }
  for (auto& mode : modes_) {
    mode.amplitude += force * mode.weight;
  }
}

void ModalVoice::apply_control(const MembraneControl& control) {
  if (control == control_) {
    return;
  }
  const bool retune_needed = control.f0 != control_.f0 || control.beta != control_.beta ||
                             control.alpha != control_.alpha;
  control_ = control;
  if (retune_needed) {
    retune();
  }
}

float ModalVoice::shape(double x) const {
  x *= config_.master_gain;
  if (config_.limiter) {
    const double knee = config_.limiter_knee;
    const double mag = std::abs(x);
    if (mag > knee) {
      const double room = 1.0 - knee;
      x = std::copysign(knee + room * std::tanh((mag - knee) / room), x);
    }
  }
  return static_cast<float>(std::clamp(x, -1.0, 1.0));
}

void ModalVoice::render(std::span<float> out) {
  for (auto& sample : out) {
    double s = 0.0;
    for (auto& mode : modes_) {
      if (mode.audible) {
        s += mode.amplitude * std::cos(mode.phase + mode.phase_offset);
      }
      mode.amplitude *= mode.decay_per_sample;
      mode.phase += mode.phase_step;
      if (mode.phase >= kTwoPi) {
        mode.phase -= kTwoPi;
      }
    }
    sample = shape(s);
  }
}

MembraneSynth::MembraneSynth(const VoiceConfig& config, const MembraneControl& initial)
    : voice_(config, initial), clock_(config.sample_rate), pending_(initial) {}

void MembraneSynth::render_block(std::span<float> out) {
  voice_.apply_control(pending_);
  const auto n = static_cast<std::int64_t>(out.size());
  const std::int64_t end = position_ + n;
  std::int64_t cursor = position_;
  while (clock_.next_event() < end) {
    const std::int64_t at = std::max(clock_.next_event(), cursor);
    voice_.render(out.subspan(static_cast<std::size_t>(cursor - position_), static_cast<std::size_t>(at - cursor)));
    cursor = at;
    voice_.excite(voice_.control().force);
    strikes_.push_back(at);
    clock_.fire(voice_.control().delta_t_ms);
  }
  voice_.render(out.subspan(static_cast<std::size_t>(cursor - position_)));
  position_ = end;
}

} // namespace epiguide
