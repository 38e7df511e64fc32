#include "epiguide/session.hpp"

#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace epiguide {

namespace fs = std::filesystem;
using nlohmann::json;

void RenderSettings::validate() const {
  if (!(control_rate >= 10.0)) {
    throw ConfigError("control rate must be >= 10 Hz");
  }
  if (voice.sample_rate != 44100.0 && voice.sample_rate != 48000.0) {
    throw ConfigError("audio rate must be 44100 or 48000 Hz");
  }
  if (block_size < 1 || block_size > 8192) {
    throw ConfigError("block size must be in [1, 8192]");
  }
  if (voice.mode_count < 1 || voice.mode_count > 64) {
    throw ConfigError("mode count must be in [1, 64]");
  }
  if (voice.m_max < 0 || voice.m_max > 16) {
    throw ConfigError("m_max must be in [0, 16]");
  }
  if (!(voice.master_gain >= 0.0) || !(voice.limiter_knee > 0.0 && voice.limiter_knee < 1.0)) {
    throw ConfigError("master gain must be >= 0 and limiter knee in (0, 1)");
  }
  if (!(force >= 0.0)) {
    throw ConfigError("force must be >= 0");
  }
  if (!(bounds.tp_max > bounds.tp_min) || !(bounds.tm_max > bounds.tm_min)) {
    throw ConfigError("normalization bounds need max > min");
  }
}

namespace {

json voice_to_json(const VoiceConfig& v) {
  return {{"mode_count", v.mode_count},   {"m_max", v.m_max},     {"master_gain", v.master_gain},
          {"damping_exponent", v.damping_exponent}, {"limiter", v.limiter}, {"limiter_knee", v.limiter_knee}};
}

void voice_from_json(const json& j, VoiceConfig& v) {
  JsonReader r(j, "voice");
  v.mode_count = r.get_or("mode_count", v.mode_count);
  v.m_max = r.get_or("m_max", v.m_max);
  v.master_gain = r.get_or("master_gain", v.master_gain);
  v.damping_exponent = r.get_or("damping_exponent", v.damping_exponent);
  v.limiter = r.get_or("limiter", v.limiter);
  v.limiter_knee = r.get_or("limiter_knee", v.limiter_knee);
  r.reject_unknown();
}

json bounds_to_json(const NormalizationBounds& b) {
  return {{"tp_min", b.tp_min}, {"tp_max", b.tp_max}, {"tm_min", b.tm_min}, {"tm_max", b.tm_max}};
}

void bounds_from_json(const json& j, NormalizationBounds& b) {
  JsonReader r(j, "normalization");
  b.tp_min = r.get_or("tp_min", b.tp_min);
  b.tp_max = r.get_or("tp_max", b.tp_max);
  b.tm_min = r.get_or("tm_min", b.tm_min);
  b.tm_max = r.get_or("tm_max", b.tm_max);
  r.reject_unknown();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

} // namespace

void to_json(json& j, const RenderSettings& s) {
  j = {{"control_rate", s.control_rate},
       {"audio_rate", s.voice.sample_rate},
       {"block_size", s.block_size},
       {"voice", voice_to_json(s.voice)},
       {"force", s.force},
       {"normalization", bounds_to_json(s.bounds)}};
}

void from_json(const json& j, RenderSettings& s) {
  JsonReader r(j, "render");
  s.control_rate = r.get_or("control_rate", s.control_rate);
  s.voice.sample_rate = r.get_or("audio_rate", s.voice.sample_rate);
  s.block_size = r.get_or("block_size", s.block_size);
  if (auto v = r.optional<json>("voice")) {
    voice_from_json(*v, s.voice);
  }
  s.force = r.get_or("force", s.force);
  if (auto b = r.optional<json>("normalization")) {
    bounds_from_json(*b, s.bounds);
  }
  r.reject_unknown();
}

ScriptedTrajectory::ScriptedTrajectory(std::vector<ScriptKeyframe> keyframes) : keys_(std::move(keyframes)) {
  if (keys_.size() < 2) {
    throw ConfigError("scripted trajectory needs at least two keyframes");
  }
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (!std::isfinite(keys_[i].time)) {
      throw ConfigError("scripted trajectory: keyframe times must be finite");
    }
    if (i > 0 && !(keys_[i].time > keys_[i - 1].time)) {
      throw ConfigError("scripted trajectory: keyframe times must be strictly increasing");
    }
    keys_[i].pose = make_pose(keys_[i].pose.tip, keys_[i].pose.axis);
  }
}

NeedlePose ScriptedTrajectory::pose_at(double t) const {
  if (t <= keys_.front().time) {
    return keys_.front().pose;
  }
  if (t >= keys_.back().time) {
    return keys_.back().pose;
  }
  const auto it = std::upper_bound(keys_.begin(), keys_.end(), t,
                                   [](double v, const ScriptKeyframe& k) { return v < k.time; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double f = (t - a.time) / (b.time - a.time);
  NeedlePose p;
  p.tip = a.pose.tip + f * (b.pose.tip - a.pose.tip);
  if (a.pose.axis == b.pose.axis) {
    p.axis = a.pose.axis;
  } else {
    const Vec3 ax = a.pose.axis + f * (b.pose.axis - a.pose.axis);
    p.axis = ax.norm() > 0.0 ? Vec3(ax.normalized()) : a.pose.axis;
  }
  return p;
}

ScriptedTrajectory ScriptedTrajectory::straight_advance(const Vec3& start, const Vec3& axis, double depth_mm,
                                                        double speed_mm_s, double hold_s) {
  if (!(depth_mm > 0.0) || !(speed_mm_s > 0.0) || hold_s < 0.0) {
    throw ConfigError("straight advance needs depth > 0, speed > 0 and hold >= 0");
  }
  const Vec3 u = axis.normalized();
  const double t1 = depth_mm / speed_mm_s;
  std::vector<ScriptKeyframe> keys{{0.0, {start, u}}, {t1, {start + depth_mm * u, u}}};
  if (hold_s > 0.0) {
    keys.push_back({t1 + hold_s, {start + depth_mm * u, u}});
  }
  return ScriptedTrajectory(std::move(keys));
}

ScriptedTrajectory script_from_json(const json& j) {
  JsonReader r(j, "script");
  if (auto adv = r.optional<json>("advance")) {
    r.reject_unknown();
    JsonReader ar(*adv, "script.advance");
    const Vec3 start = vec3_from_json(ar.required<json>("start"), "script.advance.start");
    const Vec3 axis = vec3_from_json(ar.required<json>("axis"), "script.advance.axis");
    const double depth = ar.required<double>("depth");
    const double speed = ar.required<double>("speed");
    const double hold = ar.get_or("hold", 0.0);
    ar.reject_unknown();
    return ScriptedTrajectory::straight_advance(start, axis, depth, speed, hold);
  }
  const auto frames = r.required<json>("keyframes");
  r.reject_unknown();
  if (!frames.is_array()) {
    throw ConfigError("script.keyframes must be an array");
  }
  std::vector<ScriptKeyframe> keys;
  for (const auto& k : frames) {
    JsonReader kr(k, "script.keyframes[]");
    ScriptKeyframe kf;
    kf.time = kr.required<double>("t");
    kf.pose.tip = vec3_from_json(kr.required<json>("tip"), "keyframe.tip");
    kf.pose.axis = vec3_from_json(kr.required<json>("axis"), "keyframe.axis");
    kr.reject_unknown();
    keys.push_back(kf);
  }
  return ScriptedTrajectory(std::move(keys));
}

json script_to_json(const ScriptedTrajectory& s) {
  json frames = json::array();
  for (const auto& k : s.keyframes()) {
    frames.push_back({{"t", k.time}, {"tip", vec3_to_json(k.pose.tip)}, {"axis", vec3_to_json(k.pose.axis)}});
  }
  return {{"keyframes", frames}};
}

std::shared_ptr<const AnimatedAnatomy> AnatomySource::build() const {
  if (manifest) {
    return std::make_shared<const AnimatedAnatomy>(load_anatomy(*manifest));
  }
  return std::make_shared<const AnimatedAnatomy>(generate_phantom(phantom.value_or(PhantomConfig{})));
}

void SessionConfig::validate() const {
  render.validate();
  if (render.voice.sample_rate != audio_rate) {
    throw ConfigError("render audio rate does not match session audio rate");
  }
  if (modality != "V" && modality != "MS") {
    throw ConfigError("modality must be 'V' or 'MS'");
  }
  if (!(warmup >= 0.0)) {
    throw ConfigError("warmup must be >= 0");
  }
  if (udp_port < 0 || udp_port > 65535 || ws_port < 0 || ws_port > 65535) {
    throw ConfigError("ports must be in [0, 65535]");
  }
  if (anatomy.phantom) {
    anatomy.phantom->validate();
  }
}

namespace {

InputMode input_from_string(const std::string& s) {
  if (s == "script") return InputMode::Script;
  if (s == "udp") return InputMode::Udp;
  if (s == "websocket") return InputMode::WebSocket;
  throw ConfigError("input must be one of script, udp, websocket");
}

AudioMode audio_from_string(const std::string& s) {
  if (s == "none") return AudioMode::None;
  if (s == "wav") return AudioMode::Wav;
  if (s == "device") return AudioMode::Device;
  if (s == "both") return AudioMode::Both;
  throw ConfigError("audio must be one of none, wav, device, both");
}

} // namespace

SessionConfig session_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  SessionConfig c;
  JsonReader r(j, "config");
  if (auto a = r.optional<json>("anatomy")) {
    JsonReader ar(*a, "config.anatomy");
    if (auto m = ar.optional<std::string>("manifest")) {
      c.anatomy.manifest = resolve(base_dir, *m);
    }
    if (auto p = ar.optional<json>("phantom")) {
      c.anatomy.phantom = p->get<PhantomConfig>();
    }
    ar.reject_unknown();
    if (c.anatomy.manifest && c.anatomy.phantom) {
      throw ConfigError("config.anatomy: give either 'manifest' or 'phantom', not both");
    }
  }
  if (auto s = r.optional<std::string>("input")) {
    c.input = input_from_string(*s);
  }
  if (auto s = r.optional<std::string>("audio")) {
    c.audio = audio_from_string(*s);
  }
  c.audio_rate = r.get_or("audio_rate", c.audio_rate);
  c.render.voice.sample_rate = c.audio_rate;
  c.render.control_rate = r.get_or("control_rate", c.render.control_rate);
  c.render.block_size = r.get_or("block_size", c.render.block_size);
  if (auto v = r.optional<json>("voice")) {
    voice_from_json(*v, c.render.voice);
  }
  c.render.force = r.get_or("force", c.render.force);
  if (auto b = r.optional<json>("normalization")) {
    bounds_from_json(*b, c.render.bounds);
  }
  c.modality = r.get_or("modality", c.modality);
  c.trajectory_id = r.get_or("trajectory_id", c.trajectory_id);
  c.group = r.get_or("group", c.group);
  c.target = r.optional_vec3("target");
  c.warmup = r.get_or("warmup", c.warmup);
  if (auto s = r.optional<json>("script")) {
    c.script = *s;
  }
  if (auto f = r.optional<std::string>("script_file")) {
    if (c.script) {
      throw ConfigError("config: give either 'script' or 'script_file', not both");
    }
    c.script = read_json_file(resolve(base_dir, *f));
  }
  c.bind_address = r.get_or("bind", c.bind_address);
  c.udp_port = r.get_or("udp_port", c.udp_port);
  c.ws_port = r.get_or("ws_port", c.ws_port);
  if (auto p = r.optional<std::string>("log")) {
    c.log_path = resolve(base_dir, *p);
  }
  if (auto p = r.optional<std::string>("wav")) {
    c.wav_path = resolve(base_dir, *p);
  }
  r.reject_unknown();
  c.validate();
  return c;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) {
      throw ConfigError("override key '" + key + "' has an empty component");
    }
    if (!node->is_object()) {
      if (!node->is_null()) {
        throw ConfigError("override key '" + key + "' descends into a non-object");
      }
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::int64_t trial_sample_count(double duration_s, double audio_rate) {
  if (!(duration_s >= 0.0)) {
    throw DomainError("trial duration must be >= 0");
  }
  return static_cast<std::int64_t>(std::llround(duration_s * audio_rate));
}

std::vector<float> render_control_stream(std::span<const MembraneControl> controls, const RenderSettings& settings,
                                         std::int64_t total_samples) {
  if (controls.empty()) {
    throw DomainError("no controls to render");
  }
  settings.validate();
  std::vector<float> audio(static_cast<std::size_t>(std::max<std::int64_t>(total_samples, 0)));
  MembraneSynth synth(settings.voice, controls.front());
  const auto block = static_cast<std::int64_t>(settings.block_size);
  const double steps_per_sample = settings.control_rate / settings.voice.sample_rate;
  for (std::int64_t s0 = 0; s0 < total_samples; s0 += block) {
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(s0) * steps_per_sample + 1e-9));
    synth.set_control(controls[std::min(k, controls.size() - 1)]);
    const auto n = static_cast<std::size_t>(std::min(block, total_samples - s0));
    synth.render_block(std::span<float>(audio.data() + s0, n));
  }
  return audio;
}

HeadlessResult run_headless(const SessionConfig& config, const AnimatedAnatomy& anatomy,
                            const ScriptedTrajectory& script, bool render_audio) {
  config.validate();
  if (script.duration() < config.warmup) {
    throw ConfigError("script is shorter than the warm-up period");
  }
  HeadlessResult out;
  TrialLog& log = out.log;
  log.trajectory_id = config.trajectory_id;
  log.modality = config.modality;
  log.group = config.group;
  log.target = config.target;
  log.start_time = script.start_time();
  log.render_settings = config.render;

  MembraneControl initial;
  initial.force = config.render.force;
  ControlMapper mapper(initial, config.render.bounds);
  const double rate = config.render.control_rate;
  const auto steps = static_cast<std::int64_t>(std::floor(script.duration() * rate + 1e-9));
  double t = script.start_time();
  for (std::int64_t k = 0; k <= steps; ++k) {
    t = script.start_time() + static_cast<double>(k) / rate;
    const NeedlePose pose = script.pose_at(t);
    TrialSample sample;
    sample.pose = pose;
    sample.nav = nav_sample(pose, anatomy, t);
    update_contacts(log, pose.tip, anatomy);
    const auto& control = mapper.update(sample.nav.d_tp, sample.nav.d_tm);
    sample.state = state_number(control.state);
    log.append(sample);
    out.controls.push_back(control);
  }
  close_trial(log, anatomy, t);
  if (render_audio) {
    out.audio = render_control_stream(out.controls, config.render,
                                      trial_sample_count(log.execution_time(), config.render.voice.sample_rate));
  }
  return out;
}

ReplayResult replay(const TrialLog& log, const std::optional<RenderSettings>& override_settings) {
  if (log.samples.empty()) {
    throw DomainError("cannot replay an empty trial log");
  }
  RenderSettings settings;
  if (override_settings) {
    settings = *override_settings;
  } else {
    if (!log.render_settings.is_object() || log.render_settings.empty()) {
      throw ParseError("trial log carries no render settings");
    }
    try {
      settings = log.render_settings.get<RenderSettings>();
    } catch (const ConfigError& e) {
      throw ParseError(std::string("trial log render settings: ") + e.what());
    }
  }
  settings.validate();
  MembraneControl initial;
  initial.force = settings.force;
  ControlMapper mapper(initial, settings.bounds);
  std::vector<MembraneControl> controls;
  ReplayResult out;
  controls.reserve(log.samples.size());
  for (const auto& s : log.samples) {
    controls.push_back(mapper.update(s.nav.d_tp, s.nav.d_tm));
    out.states.push_back(controls.back().state);
  }
  out.audio = render_control_stream(controls, settings,
                                    trial_sample_count(log.execution_time(), settings.voice.sample_rate));
  return out;
}

std::vector<TrialLog> generate_cohort(const SessionConfig& config, const AnimatedAnatomy& anatomy,
                                      const CohortOptions& options) {
  if (options.trials_per_modality < 1) {
    throw ConfigError("cohort needs at least one trial per modality");
  }
  const PhantomConfig phantom = config.anatomy.phantom.value_or(PhantomConfig{});
  const Vec3 center = phantom.center;
  const double peri = phantom.pericardium_radius;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Stop radius relative to the pericardium: positive = short of it.
  std::normal_distribution<double> visual(-1.0, 3.0);
  std::normal_distribution<double> multisensory(-1.5, 1.5);
  std::vector<TrialLog> logs;
  int index = 0;
  for (const std::string modality : {"V", "MS"}) {
    for (int i = 0; i < options.trials_per_modality; ++i, ++index) {
      // Directions on the upper cap keep the approach subxiphoid-like.
      const double phi = 2.0 * M_PI * unit(rng);
      const double cos_theta = 0.6 + 0.4 * unit(rng);
      const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
      const Vec3 outward(sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta);
      const double offset = modality == "V" ? visual(rng) : multisensory(rng);
      const double stop_radius = std::clamp(peri + offset, phantom.myocardium_min_radius - 6.0, peri + 8.0);
      const double speed = options.speed_mm_s * (0.7 + 0.6 * unit(rng));
      const double hold = 0.2 + 0.8 * unit(rng);
      const Vec3 start = center + options.approach_start_radius * outward;
      const auto script = ScriptedTrajectory::straight_advance(start, -outward,
                                                               options.approach_start_radius - stop_radius, speed, hold);
      SessionConfig trial = config;
      trial.modality = modality;
      trial.group = i % 2 == 0 ? "novice" : "expert";
      trial.trajectory_id = "T" + std::to_string(i % 6 + 1);
      trial.target = center + peri * outward;
      trial.warmup = 0.0;
      auto result = run_headless(trial, anatomy, script, false);
      logs.push_back(std::move(result.log));
    }
  }
  return logs;
}

} // namespace epiguide
