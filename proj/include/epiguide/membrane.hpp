#pragma once

#include "epiguide/sonmap.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace epiguide {

struct ModeSpec {
  int m = 0;
  int n = 1;
  double frequency = 0.0;
};

/// Ideal circular membrane: f_{m,n} = f0 * j_{m,n} / j_{0,1}, ascending, with
/// the Bessel order limited to m_max. The first entry is f0 itself.
[[nodiscard]] std::vector<ModeSpec> modal_frequencies(double f0, int mode_count, int m_max = 3);

/// sigma = beta + alpha * (f / 1 kHz)^exponent, in 1/s.
[[nodiscard]] double damping_sigma(double beta, double alpha, double f_hz, double exponent = 1.0);

struct VoiceConfig {
  double sample_rate = 48000.0;
  int mode_count = 8;
  int m_max = 3;
  double master_gain = 0.25;
  double damping_exponent = 1.0;
  bool limiter = true;
  /// Output magnitude above which the soft limiter starts bending.
  double limiter_knee = 0.8;
};

/// Damped modal bank rendering s(t) = sum A e^{-sigma t} cos(2 pi f t + phi).
///
/// Each mode keeps a running envelope and a free-running phase. Strikes add
/// to the envelope; control changes retune frequencies and damping while the
/// envelopes and phases carry over by mode rank, so nothing clicks at a state
/// change.
class ModalVoice {
 public:
  struct Mode {
    int m = 0;
    int n = 1;
    double frequency = 0.0;
    double sigma = 0.0;
    double amplitude = 0.0;
    double weight = 1.0; ///< share of each strike, 1 / rank
    double phase = 0.0;
    double phase_offset = 0.0;
    double decay_per_sample = 1.0;
    double phase_step = 0.0;
    bool audible = true; ///< false when at or above Nyquist
  };

  explicit ModalVoice(const VoiceConfig& config, const MembraneControl& initial = {});

  /// Adds force * weight to every mode envelope. Phases are untouched.
  void excite(double force);

  /// Renders out.size() samples continuing from the previous call.
  void render(std::span<float> out);

  /// Retunes to `control`. A control equal to the current one is a no-op.
  void apply_control(const MembraneControl& control);

  [[nodiscard]] const std::vector<Mode>& modes() const { return modes_; }
  [[nodiscard]] const MembraneControl& control() const { return control_; }
  [[nodiscard]] const VoiceConfig& config() const { return config_; }
  [[nodiscard]] int dropped_modes() const;

 private:
  void retune();
  [[nodiscard]] float shape(double x) const;

  VoiceConfig config_;
  MembraneControl control_;
  std::vector<Mode> modes_;
};

/// Voice plus strike clock, rendered in blocks. Controls handed in with
/// set_control() take effect at the start of the next block; strikes land on
/// exact sample positions inside a block.
class MembraneSynth {
 public:
  MembraneSynth(const VoiceConfig& config, const MembraneControl& initial);

  void set_control(const MembraneControl& control) { pending_ = control; }
  void render_block(std::span<float> out);

  [[nodiscard]] std::int64_t position() const { return position_; }
  [[nodiscard]] const ModalVoice& voice() const { return voice_; }
  /// Sample index of every strike so far.
  [[nodiscard]] const std::vector<std::int64_t>& strikes() const { return strikes_; }

 private:
  ModalVoice voice_;
  ExcitationScheduler clock_;
  MembraneControl pending_;
  std::int64_t position_ = 0;
  std::vector<std::int64_t> strikes_;
};

/// 16-bit PCM mono RIFF/WAVE.
[[nodiscard]] std::string encode_wav(std::span<const float> samples, int sample_rate);
[[nodiscard]] std::vector<std::int16_t> to_pcm16(std::span<const float> samples);

struct WavData {
  int sample_rate = 0;
  int channels = 0;
  std::vector<std::int16_t> samples;
};
[[nodiscard]] WavData decode_wav(const std::string& bytes);

} // namespace epiguide
