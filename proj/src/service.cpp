#include "epiguide/service.hpp"

#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"
#include "epiguide/osc.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

namespace epiguide {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using udp = net::ip::udp;
using nlohmann::json;

InputEvent parse_control_command(const json& command) {
  if (!command.is_object() || !command.contains("cmd") || !command.at("cmd").is_string()) {
    throw ParseError("control command needs a string 'cmd'");
  }
  const auto cmd = command.at("cmd").get<std::string>();
  InputEvent e;
  try {
    if (cmd == "start") {
      e.kind = InputEvent::Kind::Start;
      e.command = command;
    } else if (cmd == "stop") {
      e.kind = InputEvent::Kind::Stop;
    } else if (cmd == "pose") {
      e.kind = InputEvent::Kind::Pose;
      const Vec3 tip = vec3_from_json(command.at("tip"), "pose.tip");
      const Vec3 axis = vec3_from_json(command.at("axis"), "pose.axis");
      e.pose = make_pose(tip, axis);
    } else if (cmd == "nav") {
      e.kind = InputEvent::Kind::Distances;
      if (command.contains("d_tp")) {
        e.d_tp = distance_from_json(command.at("d_tp"));
      }
      if (command.contains("d_tm")) {
        e.d_tm = distance_from_json(command.at("d_tm"));
      }
    } else {
      throw ParseError("unknown control command '" + cmd + "'");
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("control command: ") + ex.what());
  } catch (const ConfigError& ex) {
    throw ParseError(std::string("control command: ") + ex.what());
  } catch (const DomainError& ex) {
    throw ParseError(std::string("control command: ") + ex.what());
  }
  return e;
}

namespace {

enum class Channel { State, Audio, Control };

class Core;

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Core& core, Channel channel)
      : ws_(std::move(socket)), core_(core), channel_(channel) {}

  void start(http::request<http::string_body> req);
  void send(std::shared_ptr<const std::string> message);

 private:
  void on_accept(beast::error_code ec);
  void do_read();
  void on_read(beast::error_code ec, std::size_t);
  void do_write();
  void on_write(beast::error_code ec, std::size_t);

  websocket::stream<beast::tcp_stream> ws_;
  Core& core_;
  Channel channel_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Core& core) : stream_(std::move(socket)), core_(core) {}
  void run();

 private:
  void on_read(beast::error_code ec, std::size_t);

  beast::tcp_stream stream_;
  Core& core_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<http::response<http::string_body>> res_;
};

class Core {
 public:
  Core(SessionConfig config, std::shared_ptr<const AnimatedAnatomy> anatomy)
      : config_(std::move(config)),
        anatomy_(std::move(anatomy)),
        acceptor_(ioc_),
        udp_(ioc_),
        handoff_(initial_control()) {
    config_.validate();
    if (!anatomy_) {
      throw ConfigError("service needs an anatomy");
    }
    snapshot_ = std::make_shared<const std::string>(build_snapshot(0.0).dump());
  }

  ~Core() { stop(); }

  void start() {
    if (running_) {
      return;
    }
    if (config_.audio == AudioMode::Device || config_.audio == AudioMode::Both) {
      std::cerr << "epiguide: no host audio device backend; audio is streamed on /audio only\n";
    }
    beast::error_code ec;
    const auto address = net::ip::make_address(config_.bind_address, ec);
    if (ec) {
      throw ConfigError("invalid bind address '" + config_.bind_address + "'");
    }
    const tcp::endpoint ws_ep(address, static_cast<unsigned short>(config_.ws_port));
    acceptor_.open(ws_ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ws_ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      acceptor_.close();
      throw ConfigError("cannot bind WebSocket port " + std::to_string(config_.ws_port) + ": " + ec.message());
    }
    const udp::endpoint udp_ep(address, static_cast<unsigned short>(config_.udp_port));
    udp_.open(udp_ep.protocol(), ec);
    if (!ec) udp_.bind(udp_ep, ec);
    if (ec) {
      acceptor_.close();
      udp_.close();
      throw ConfigError("cannot bind UDP port " + std::to_string(config_.udp_port) + ": " + ec.message());
    }
    epoch_ = SteadyClock::now();
    running_ = true;
    do_accept();
    do_udp();
    net_thread_ = std::thread([this] { ioc_.run(); });
    control_thread_ = std::thread([this] { control_loop(); });
    audio_thread_ = std::thread([this] { audio_loop(); });
  }

  void stop() {
    if (!running_.exchange(false)) {
      return;
    }
    if (control_thread_.joinable()) control_thread_.join();
    if (audio_thread_.joinable()) audio_thread_.join();
    net::post(ioc_, [this] {
      beast::error_code ec;
      acceptor_.close(ec);
      udp_.close(ec);
      ioc_.stop();
    });
    if (net_thread_.joinable()) net_thread_.join();
  }

  int ws_port() const { return acceptor_.is_open() ? acceptor_.local_endpoint().port() : config_.ws_port; }
  int udp_port() const { return udp_.is_open() ? udp_.local_endpoint().port() : config_.udp_port; }

  void submit(InputEvent event) {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(event));
  }

  void count_malformed() { malformed_.fetch_add(1, std::memory_order_relaxed); }

  json snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return json::parse(*snapshot_);
  }

  std::shared_ptr<const std::string> snapshot_text() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  ServiceStats stats() const {
    std::lock_guard lock(stats_mutex_);
    ServiceStats s = stats_;
    s.malformed_packets = malformed_.load();
    s.audio_blocks = audio_blocks_.load();
    return s;
  }

  std::optional<TrialLog> last_trial() const {
    std::lock_guard lock(snapshot_mutex_);
    return last_trial_;
  }

  void subscribe(Channel channel, const std::shared_ptr<WsSession>& s) {
    (channel == Channel::State ? state_subs_ : audio_subs_).push_back(s);
  }

 private:
  MembraneControl initial_control() const {
    MembraneControl c;
    c.force = config_.render.force;
    return c;
  }

  void do_accept() {
    acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted && acceptor_.is_open()) {
          do_accept();
        }
        return;
      }
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
      do_accept();
    });
  }

  void do_udp() {
    udp_.async_receive_from(net::buffer(udp_buffer_), udp_sender_, [this](beast::error_code ec, std::size_t n) {
      if (ec == net::error::operation_aborted || !udp_.is_open()) {
        return;
      }
      if (!ec) {
        on_datagram(std::span<const std::uint8_t>(udp_buffer_.data(), n));
      }
      do_udp();
    });
  }

  void on_datagram(std::span<const std::uint8_t> packet) {
    const auto arrival = SteadyClock::now();
    const auto msg = osc::decode(packet);
    if (!msg) {
      count_malformed();
      return;
    }
    InputEvent e;
    e.arrival = arrival;
    if (msg->address == "/nav/dtp" && msg->args.size() == 1) {
      e.d_tp = msg->args[0];
    } else if (msg->address == "/nav/dtm" && msg->args.size() == 1) {
      e.d_tm = msg->args[0];
    } else if (msg->address == "/nav/pose" && msg->args.size() == 6) {
      const auto& a = msg->args;
      const Vec3 axis(a[3], a[4], a[5]);
      if (!(axis.norm() > 0.0) || !axis.allFinite() || !Vec3(a[0], a[1], a[2]).allFinite()) {
        count_malformed();
        return;
      }
      e.kind = InputEvent::Kind::Pose;
      e.pose = make_pose(Vec3(a[0], a[1], a[2]), axis);
    } else {
      count_malformed();
      return;
    }
    submit(std::move(e));
  }

  void broadcast(Channel channel, std::shared_ptr<const std::string> message) {
    net::post(ioc_, [this, channel, message = std::move(message)] {
      auto& subs = channel == Channel::State ? state_subs_ : audio_subs_;
      std::erase_if(subs, [&](const std::weak_ptr<WsSession>& w) {
        auto s = w.lock();
        if (!s) {
          return true;
        }
        s->send(message);
        return false;
      });
    });
  }

  double session_time(SteadyClock::time_point t) const {
    return std::chrono::duration<double>(t - epoch_).count();
  }

  json build_snapshot(double t) const {
    json j;
    j["type"] = "snapshot";
    j["seq"] = seq_;
    j["time"] = t;
    j["frame"] = frame_at(*anatomy_, t);
    if (pose_) {
      j["pose"] = {{"tip", vec3_to_json(pose_->tip)}, {"axis", vec3_to_json(pose_->axis)}};
    } else {
      j["pose"] = nullptr;
    }
    j["d_tp"] = distance_to_json(nav_.d_tp);
    j["d_tm"] = distance_to_json(nav_.d_tm);
    const auto& c = control_;
    j["state"] = state_number(c.state);
    j["state_name"] = to_string(c.state);
    j["control"] = {{"f0", c.f0},
                    {"beta", c.beta},
                    {"alpha", c.alpha},
                    {"delta_t_ms", c.delta_t_ms},
                    {"force", c.force}};
    const TrialLog* log = trial_ ? &*trial_ : (last_trial_ ? &*last_trial_ : nullptr);
    const auto any = [](const FrameFlags& f) { return std::find(f.begin(), f.end(), true) != f.end(); };
    j["contacts"] = {{"pericardium", log ? any(log->contact_pericardium) : false},
                     {"myocardium", log ? any(log->contact_myocardium) : false}};
    json trial = {{"active", trial_.has_value()}};
    if (log) {
      trial["trajectory_id"] = log->trajectory_id;
      trial["modality"] = log->modality;
      trial["samples"] = log->samples.size();
      trial["elapsed"] = trial_ ? t - log->start_time : log->execution_time();
      trial["outcome"] = log->outcome ? json(to_string(*log->outcome)) : json(nullptr);
    }
    j["trial"] = trial;
    j["malformed_packets"] = malformed_.load();
    return j;
  }

  void open_trial(const json& options, double t) {
    TrialLog log;
    log.trajectory_id = options.value("trajectory_id", config_.trajectory_id);
    log.modality = options.value("modality", config_.modality);
    log.group = options.value("group", config_.group);
    log.target = config_.target;
    if (options.contains("target")) {
      log.target = vec3_from_json(options.at("target"), "start.target");
    }
    log.start_time = t;
    log.render_settings = config_.render;
    trial_ = std::move(log);
  }

  void close_current_trial(double t) {
    if (!trial_) {
      return;
    }
    TrialLog log = std::move(*trial_);
    trial_.reset();
    if (log.samples.empty()) {
      log.closed = true;
      log.stop_time = t;
    } else {
      close_trial(log, *anatomy_, log.samples.back().nav.time);
    }
    ++trial_counter_;
    if (config_.log_path) {
      auto path = *config_.log_path;
      if (std::filesystem::is_directory(path) || !path.has_extension()) {
        std::filesystem::create_directories(path);
        path /= "trial_" + std::to_string(trial_counter_) + ".jsonl";
      }
      try {
        write_trial_log(log, path);
      } catch (const std::exception& ex) {
        std::cerr << "epiguide: could not write trial log: " << ex.what() << '\n';
      }
    }
    std::lock_guard lock(snapshot_mutex_);
    last_trial_ = std::move(log);
  }

  void control_loop() {
    ControlMapper mapper(initial_control(), config_.render.bounds);
    control_ = mapper.current();
    const auto period = std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double>(1.0 / config_.render.control_rate));
    bool pose_driven = false;
    std::optional<double> d_tp;
    std::optional<double> d_tm;
    double last_t = -1.0;
    auto next = SteadyClock::now();
    std::vector<InputEvent> events;
    while (running_) {
      events.clear();
      {
        std::lock_guard lock(queue_mutex_);
        events.swap(queue_);
      }
      const auto now = SteadyClock::now();
      double t = session_time(now);
      if (t <= last_t) {
        t = std::nextafter(last_t, kInfinity);
      }
      last_t = t;

      bool stop_requested = false;
      for (const auto& e : events) {
        switch (e.kind) {
          case InputEvent::Kind::Distances:
            if (e.d_tp) d_tp = e.d_tp;
            if (e.d_tm) d_tm = e.d_tm;
            pose_driven = false;
            break;
          case InputEvent::Kind::Pose:
            pose_ = e.pose;
            pose_driven = true;
            break;
          case InputEvent::Kind::Start:
            close_current_trial(t);
            try {
              open_trial(e.command, t);
            } catch (const std::exception&) {
              count_malformed();
            }
            break;
          case InputEvent::Kind::Stop:
            stop_requested = true;
            break;
        }
      }

      bool have_nav = false;
      if (pose_driven && pose_) {
        nav_ = nav_sample(*pose_, *anatomy_, t);
        have_nav = true;
      } else if (d_tp || d_tm) {
        nav_.time = t;
        nav_.d_tp = d_tp.value_or(kInfinity);
        nav_.d_tm = d_tm.value_or(kInfinity);
        nav_.frame = frame_at(*anatomy_, t);
        have_nav = true;
      }
      if (have_nav) {
        control_ = mapper.update(nav_.d_tp, nav_.d_tm);
      }
      handoff_.publish(control_);
      const auto published = SteadyClock::now();

      if (trial_ && have_nav) {
        if (pose_driven && pose_) {
          update_contacts(*trial_, pose_->tip, *anatomy_);
        }
        TrialSample s;
        s.nav = nav_;
        s.pose = pose_.value_or(NeedlePose{});
        s.state = state_number(control_.state);
        trial_->append(s);
      }
      if (stop_requested) {
        close_current_trial(t);
      }

      ++seq_;
      auto text = std::make_shared<const std::string>(build_snapshot(t).dump());
      {
        std::lock_guard lock(snapshot_mutex_);
        snapshot_ = text;
      }
      {
        std::lock_guard lock(stats_mutex_);
        stats_.control_ticks += 1;
        stats_.events += events.size();
        stats_.trials_closed = static_cast<std::uint64_t>(trial_counter_);
        for (const auto& e : events) {
          stats_.max_latency_s =
              std::max(stats_.max_latency_s, std::chrono::duration<double>(published - e.arrival).count());
        }
      }
      broadcast(Channel::State, std::move(text));

      next += period;
      const auto after = SteadyClock::now();
      if (after > next + 4 * period) {
        next = after;
      }
      std::this_thread::sleep_until(next);
    }
    close_current_trial(session_time(SteadyClock::now()));
  }

  void audio_loop() {
    MembraneSynth synth(config_.render.voice, initial_control());
    const auto block = static_cast<std::size_t>(config_.render.block_size);
    std::vector<float> buf(block);
    const auto period = std::chrono::duration_cast<SteadyClock::duration>(
        std::chrono::duration<double>(static_cast<double>(block) / config_.render.voice.sample_rate));
    auto next = SteadyClock::now();
    while (running_) {
      synth.set_control(handoff_.read());
      synth.render_block(buf);
      const auto pcm = to_pcm16(buf);
      auto bytes = std::make_shared<std::string>(pcm.size() * 2, '\0');
      for (std::size_t i = 0; i < pcm.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(pcm[i]);
        (*bytes)[2 * i] = static_cast<char>(u & 0xff);
        (*bytes)[2 * i + 1] = static_cast<char>(u >> 8);
      }
      audio_blocks_.fetch_add(1, std::memory_order_relaxed);
      broadcast(Channel::Audio, std::move(bytes));
      next += period;
      const auto after = SteadyClock::now();
      if (after > next + 8 * period) {
        next = after;
      }
      std::this_thread::sleep_until(next);
    }
  }

  SessionConfig config_;
  std::shared_ptr<const AnimatedAnatomy> anatomy_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  udp::socket udp_;
  std::array<std::uint8_t, 2048> udp_buffer_{};
  udp::endpoint udp_sender_;
  std::thread net_thread_;
  std::thread control_thread_;
  std::thread audio_thread_;
  std::atomic<bool> running_{false};
  SteadyClock::time_point epoch_ = SteadyClock::now();

  std::mutex queue_mutex_;
  std::vector<InputEvent> queue_;

  LatestValue<MembraneControl> handoff_;

  // Control-loop state; build_snapshot also reads it from the constructor.
  std::optional<NeedlePose> pose_;
  NavigationSample nav_;
  MembraneControl control_;
  std::optional<TrialLog> trial_;
  int trial_counter_ = 0;
  std::uint64_t seq_ = 0;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const std::string> snapshot_;
  std::optional<TrialLog> last_trial_;

  mutable std::mutex stats_mutex_;
  ServiceStats stats_;
  std::atomic<std::uint64_t> malformed_{0};
  std::atomic<std::uint64_t> audio_blocks_{0};

  // Network thread only.
  std::vector<std::weak_ptr<WsSession>> state_subs_;
  std::vector<std::weak_ptr<WsSession>> audio_subs_;

  friend class WsSession;
};

void WsSession::start(http::request<http::string_body> req) {
  ws_.binary(channel_ == Channel::Audio);
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
}

void WsSession::on_accept(beast::error_code ec) {
  if (ec) {
    return;
  }
  if (channel_ != Channel::Control) {
    core_.subscribe(channel_, shared_from_this());
  }
  if (channel_ == Channel::State) {
    send(core_.snapshot_text());
  }
  do_read();
}

void WsSession::do_read() {
  ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
}

void WsSession::on_read(beast::error_code ec, std::size_t) {
  if (ec) {
    closed_ = true;
    return;
  }
  if (channel_ == Channel::Control) {
    const std::string text = beast::buffers_to_string(buffer_.data());
    json reply;
    try {
      auto event = parse_control_command(json::parse(text));
      event.arrival = SteadyClock::now();
      reply = {{"ok", true}, {"cmd", json::parse(text).at("cmd")}};
      core_.submit(std::move(event));
    } catch (const std::exception& ex) {
      core_.count_malformed();
      reply = {{"ok", false}, {"error", ex.what()}};
    }
    send(std::make_shared<const std::string>(reply.dump()));
  }
  buffer_.consume(buffer_.size());
  do_read();
}

void WsSession::send(std::shared_ptr<const std::string> message) {
  if (closed_) {
    return;
  }
  if (channel_ == Channel::State && queue_.size() > 1) {
    queue_.back() = std::move(message); // latest value only, no backlog
    return;
  }
  if (channel_ == Channel::Audio && queue_.size() > 32) {
    queue_.erase(queue_.begin() + 1);
  }
  queue_.push_back(std::move(message));
  if (queue_.size() == 1) {
    do_write();
  }
}

void WsSession::do_write() {
  ws_.async_write(net::buffer(*queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
}

void WsSession::on_write(beast::error_code ec, std::size_t) {
  if (ec) {
    closed_ = true;
    queue_.clear();
    return;
  }
  queue_.pop_front();
  if (!queue_.empty()) {
    do_write();
  }
}

void HttpSession::run() {
  stream_.expires_after(std::chrono::seconds(10));
  http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
}

void HttpSession::on_read(beast::error_code ec, std::size_t) {
  if (ec) {
    return;
  }
  std::string target(req_.target());
  if (const auto q = target.find('?'); q != std::string::npos) {
    target.resize(q);
  }
  if (websocket::is_upgrade(req_)) {
    std::optional<Channel> channel;
    if (target == "/state") channel = Channel::State;
    if (target == "/audio") channel = Channel::Audio;
    if (target == "/control") channel = Channel::Control;
    if (channel) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), core_, *channel)->start(std::move(req_));
      return;
    }
  }
  res_ = std::make_shared<http::response<http::string_body>>(http::status::not_found, req_.version());
  res_->set(http::field::content_type, "application/json");
  res_->body() = R"({"error":"use a WebSocket upgrade on /state, /audio or /control"})";
  res_->prepare_payload();
  res_->keep_alive(false);
  http::async_write(stream_, *res_, [self = shared_from_this()](beast::error_code, std::size_t) {
    beast::error_code ignored;
    self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
  });
}

} // namespace

struct Service::Impl {
  std::unique_ptr<Core> core;
};

Service::Service(SessionConfig config, std::shared_ptr<const AnimatedAnatomy> anatomy)
    : impl_(std::make_unique<Impl>(Impl{std::make_unique<Core>(std::move(config), std::move(anatomy))})) {}

Service::~Service() = default;

void Service::start() { impl_->core->start(); }
void Service::stop() { impl_->core->stop(); }
int Service::udp_port() const { return impl_->core->udp_port(); }
int Service::ws_port() const { return impl_->core->ws_port(); }
void Service::submit(InputEvent event) { impl_->core->submit(std::move(event)); }
json Service::snapshot() const { return impl_->core->snapshot(); }
ServiceStats Service::stats() const { return impl_->core->stats(); }
std::optional<TrialLog> Service::last_trial() const { return impl_->core->last_trial(); }

} // namespace epiguide
