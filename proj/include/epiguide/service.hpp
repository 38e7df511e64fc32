#pragma once

#include "epiguide/session.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace epiguide {

using SteadyClock = std::chrono::steady_clock;

/// One inbound item for the control loop. Every field is optional so a UDP
/// `/nav/dtp` datagram and a full pose command share a type.
struct InputEvent {
  enum class Kind { Distances, Pose, Start, Stop };
  Kind kind = Kind::Distances;
  std::optional<double> d_tp;
  std::optional<double> d_tm;
  std::optional<NeedlePose> pose;
  nlohmann::json command = nlohmann::json::object(); ///< start options
  SteadyClock::time_point arrival = SteadyClock::now();
};

struct ServiceStats {
  std::uint64_t malformed_packets = 0;
  std::uint64_t events = 0;
  std::uint64_t control_ticks = 0;
  std::uint64_t audio_blocks = 0;
  /// Largest arrival-to-publication delay seen so far, seconds.
  double max_latency_s = 0.0;
  std::uint64_t trials_closed = 0;
};

/// Live engine: input ingestion (UDP + WebSocket), a single-threaded control
/// loop that owns all session state, and a paced audio thread that reads the
/// latest control without blocking.
///
/// WebSocket routes on `ws_port`:
///   /state    JSON snapshot per control tick; the current one on connect
///   /audio    binary int16 LE mono PCM, one message per audio block
///   /control  JSON commands {"cmd": "start" | "stop" | "pose", ...}
class Service {
 public:
  Service(SessionConfig config, std::shared_ptr<const AnimatedAnatomy> anatomy);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds both ports (0 picks an ephemeral one) and starts all threads.
  /// Throws ConfigError when a port cannot be bound.
  void start();
  void stop();

  [[nodiscard]] int udp_port() const;
  [[nodiscard]] int ws_port() const;

  /// Queues an event as if it had arrived from the network.
  void submit(InputEvent event);

  /// Most recent published snapshot.
  [[nodiscard]] nlohmann::json snapshot() const;
  [[nodiscard]] ServiceStats stats() const;
  /// The last trial closed by a stop command, if any.
  [[nodiscard]] std::optional<TrialLog> last_trial() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses a `/control` command; throws ParseError for unknown commands or
/// malformed fields.
[[nodiscard]] InputEvent parse_control_command(const nlohmann::json& command);

} // namespace epiguide
