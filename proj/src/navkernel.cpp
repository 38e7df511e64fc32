#include "epiguide/navkernel.hpp"

#include "epiguide/error.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

namespace {
// Hits this far behind the origin still count; absorbs rounding for tips that
// sit exactly on the surface.
constexpr double kOriginSlack = 1e-9;
} // namespace

NeedlePose make_pose(const Vec3& tip, const Vec3& axis) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("needle axis must be a non-zero finite vector");
  }
  return NeedlePose{tip, axis / n};
}

AxialDistance axial_distance(const NeedlePose& pose, const IndexedMesh& surface) {
  if (!surface.watertight()) {
    const auto hit = surface.raycast(pose.tip, pose.axis, -kOriginSlack);
    return {hit ? std::max(hit->t, 0.0) : kInfinity, false};
  }
  if (surface.contains(pose.tip)) {
    const auto back = surface.raycast(pose.tip, -pose.axis, -kOriginSlack);
    if (!back) {
      return {kInfinity, true};
    }
    const double t = std::max(back->t, 0.0);
    return {t == 0.0 ? 0.0 : -t, true};
  }
  const auto hit = surface.raycast(pose.tip, pose.axis, -kOriginSlack);
  return {hit ? std::max(hit->t, 0.0) : kInfinity, true};
}

NavigationSample nav_sample(const NeedlePose& pose, const AnimatedAnatomy& anatomy, double time_s) {
  NavigationSample s;
  s.time = time_s;
  s.frame = frame_at(anatomy, time_s);
  const auto& f = anatomy.frame(s.frame);
  s.d_tp = axial_distance(pose, f.pericardium).mm;
  s.d_tm = axial_distance(pose, f.myocardium).mm;
  return s;
}

bool in_contact(const IndexedMesh& surface, const Vec3& p, double tolerance_mm) {
  if (surface.empty() || surface.box().squared_distance(p) > tolerance_mm * tolerance_mm) {
    return false;
  }
  return surface.contains(p) || surface.closest_point(p).distance <= tolerance_mm;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::SuccessfulCompletion:
      return "SuccessfulCompletion";
    case Outcome::MissedTarget:
      return "MissedTarget";
    case Outcome::CriticalFailure:
      return "CriticalFailure";
  }
  return "?";
}

Outcome outcome_from_string(const std::string& s) {
  if (s == "SuccessfulCompletion") {
    return Outcome::SuccessfulCompletion;
  }
  if (s == "MissedTarget") {
    return Outcome::MissedTarget;
  }
  if (s == "CriticalFailure") {
    return Outcome::CriticalFailure;
  }
  throw ParseError("unknown outcome '" + s + "'");
}

void TrialLog::append(const TrialSample& sample) {
  if (!samples.empty() && !(sample.nav.time > samples.back().nav.time)) {
    throw DomainError("trial samples must be strictly increasing in time");
  }
  samples.push_back(sample);
  final_tip = sample.pose.tip;
}

void update_contacts(TrialLog& log, const Vec3& tip, const AnimatedAnatomy& anatomy) {
  for (int k = 0; k < kFrameCount; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const auto& f = anatomy.frame(k);
    if (!log.contact_pericardium[idx]) {
      log.contact_pericardium[idx] = in_contact(f.pericardium, tip);
    }
    if (!log.contact_myocardium[idx]) {
      log.contact_myocardium[idx] = in_contact(f.myocardium, tip);
    }
  }
}

Outcome classify_outcome(const TrialLog& log) {
  if (log.samples.empty()) {
    throw DomainError("cannot classify an empty trial log");
  }
  auto any = [](const FrameFlags& f) { return std::any_of(f.begin(), f.end(), [](bool b) { return b; }); };
  if (any(log.contact_myocardium)) {
    return Outcome::CriticalFailure;
  }
  if (!any(log.contact_pericardium)) {
    return Outcome::MissedTarget;
  }
  return Outcome::SuccessfulCompletion;
}

double min_distance_to_pericardium(const Vec3& tip, const AnimatedAnatomy& anatomy) {
  double best = kInfinity;
  for (const auto& f : anatomy.frames()) {
    best = std::min(best, f.pericardium.closest_point(tip).distance);
  }
  return best;
}

void close_trial(TrialLog& log, const AnimatedAnatomy& anatomy, double stop_time) {
  log.outcome = classify_outcome(log);
  log.stop_time = stop_time;
  log.closed = true;
  log.min_distance_pericardium = min_distance_to_pericardium(log.final_tip, anatomy);
  if (log.target) {
    log.distance_to_target = distance_to_target(log.final_tip, *log.target);
  }
}

} // namespace epiguide
