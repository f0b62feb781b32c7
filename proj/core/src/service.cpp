#include "armforge/service.hpp"

#include <cmath>
#include <list>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "armforge/config.hpp"
#include "armforge/kinematics.hpp"

namespace armforge::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kHistory = 512;

json vec(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json joints_json(const JointState& q) {
  return {{"theta", q.theta}, {"grip_opening", q.grip_opening}};
}

}  // namespace

json snapshot_json(const sim::Simulator& s, std::size_t events) {
  const sim::SimState& st = s.state();
  const ArmModel& m = s.model();

  json j;
  j["clock"] = st.clock;
  j["tick"] = st.ticks;
  j["joints"] = st.joints.theta;
  j["grip_opening"] = st.joints.grip_opening;
  j["targets"] = joints_json(st.joint_targets);
  j["active_servo"] = st.active_servo ? json(*st.active_servo) : json(nullptr);

  const SensorReading r = s.read_sensor();
  j["sensor"] = {{"distance", r.distance},
                 {"voltage", r.voltage},
                 {"in_valid_range", r.in_valid_range},
                 {"class", std::string(to_string(classify_object(m.sensor, r.distance)))},
                 {"at_measuring_pose", s.at_measuring_pose()}};

  json objects = json::array();
  for (const auto& o : st.scene) {
    objects.push_back({{"id", o.id},
                       {"height", o.height},
                       {"location", std::string(sim::to_string(o.location))}});
  }
  j["objects"] = std::move(objects);

  if (st.program) {
    j["program"] = {{"name", std::string(sim::to_string(st.program->program))},
                    {"phase", std::string(sim::to_string(st.program->phase))},
                    {"running", st.program->running()},
                    {"started_at", st.program->started_at}};
  } else {
    j["program"] = nullptr;
  }

  json ev = json::array();
  const std::size_t n = st.event_log.size();
  for (std::size_t i = n > events ? n - events : 0; i < n; ++i) {
    const auto& e = st.event_log[i];
    ev.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  }
  j["events"] = std::move(ev);
  j["event_count"] = n;

  const auto frames = link_frames(m, st.joints);
  json pts = json::array();
  for (const auto& f : frames) pts.push_back(vec(f.translation));
  j["frames"] = std::move(pts);
  j["tip"] = vec(frames.back().translation);
  return j;
}

bool stream_selects(std::uint64_t tick, double dt, double interval_s) {
  if (tick == 0) return true;
  const auto window = [&](std::uint64_t t) {
    return std::floor(static_cast<double>(t) * dt / interval_s + 1e-9);
  };
  return window(tick) > window(tick - 1);
}

// ---- core -----------------------------------------------------------------

ServiceCore::ServiceCore(sim::Simulator sim, double dt)
    : sim_(std::move(sim)), dt_(dt), model_json_(serialize_arm_model(sim_.model())) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("dt must be > 0");
  publish();
}

ServiceCore::~ServiceCore() { stop(); }

void ServiceCore::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void ServiceCore::stop() {
  if (running_.exchange(false) && thread_.joinable()) thread_.join();
  std::deque<Pending> orphaned;
  {
    std::lock_guard lk(queue_mu_);
    accepting_ = false;
    orphaned.swap(queue_);
  }
  for (auto& p : orphaned) {
    p.verdict.set_exception(
        std::make_exception_ptr(std::runtime_error("service stopped")));
  }
}

void ServiceCore::loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(dt_));
  auto next = clock::now() + period;
  while (running_) {
    std::this_thread::sleep_until(next);
    tick();
    next += period;
    // Fell far behind (debugger, suspended host): resync instead of bursting.
    if (clock::now() - next > 10 * period) next = clock::now() + period;
  }
}

void ServiceCore::tick() {
  std::lock_guard tl(tick_mu_);
  std::deque<Pending> batch;
  {
    std::lock_guard lk(queue_mu_);
    batch.swap(queue_);
  }
  for (auto& p : batch) p.verdict.set_value(sim_.submit(p.command));
  sim_.step(dt_);
  publish();
}

std::future<sim::CommandResult> ServiceCore::post(sim::Command c) {
  Pending p{std::move(c), {}};
  auto f = p.verdict.get_future();
  std::lock_guard lk(queue_mu_);
  if (!accepting_) {
    p.verdict.set_exception(
        std::make_exception_ptr(std::runtime_error("service stopped")));
  } else {
    queue_.push_back(std::move(p));
  }
  return f;
}

void ServiceCore::publish() {
  auto snap = std::make_shared<Snapshot>();
  snap->tick = sim_.state().ticks;
  snap->clock = sim_.state().clock;
  snap->json = snapshot_json(sim_).dump();
  {
    std::lock_guard lk(snap_mu_);
    history_.push_back(std::move(snap));
    if (history_.size() > kHistory) history_.pop_front();
  }
  snap_cv_.notify_all();
}

std::shared_ptr<const Snapshot> ServiceCore::latest() const {
  std::lock_guard lk(snap_mu_);
  return history_.back();
}

std::vector<std::shared_ptr<const Snapshot>> ServiceCore::since(std::uint64_t after) const {
  std::lock_guard lk(snap_mu_);
  std::vector<std::shared_ptr<const Snapshot>> out;
  for (const auto& s : history_) {
    if (s->tick > after) out.push_back(s);
  }
  return out;
}

bool ServiceCore::wait_newer(std::uint64_t after,
                             std::chrono::steady_clock::time_point deadline) const {
  std::unique_lock lk(snap_mu_);
  return snap_cv_.wait_until(lk, deadline, [&] { return history_.back()->tick > after; });
}

// ---- server ---------------------------------------------------------------

struct Server::Impl {
  ServiceCore& core;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::atomic<bool> stopping{false};
  std::thread accept_thread;

  struct Session {
    std::shared_ptr<tcp::socket> socket;
    std::thread thread;
    std::atomic<bool> done{false};
  };
  std::mutex sessions_mu;
  std::list<Session> sessions;

  explicit Impl(ServiceCore& c) : core(c) {}

  void accept_loop();
  void reap();
  void serve(tcp::socket& socket);
  http::response<http::string_body> handle(const http::request<http::string_body>& req);
  void stream(websocket::stream<tcp::socket&>& ws, double interval_s);
};

namespace {

using Response = http::response<http::string_body>;

Response json_response(const http::request<http::string_body>& req, http::status status,
                       std::string body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response error_response(const http::request<http::string_body>& req, http::status status,
                        const std::string& message, const std::string& path = {}) {
  json j{{"status", "error"}, {"error", message}};
  if (!path.empty()) j["path"] = path;
  return json_response(req, status, j.dump());
}

struct Target {
  std::string path;
  std::string query;
};

Target split_target(std::string_view t) {
  const auto q = t.find('?');
  if (q == std::string_view::npos) return {std::string(t), {}};
  return {std::string(t.substr(0, q)), std::string(t.substr(q + 1))};
}

std::optional<std::string> query_param(const std::string& query, std::string_view key) {
  std::string_view rest = query;
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view kv = rest.substr(0, amp);
    const auto eq = kv.find('=');
    if (kv.substr(0, eq) == key) {
      return eq == std::string_view::npos ? std::string{} : std::string(kv.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return std::nullopt;
}

// Interval in ms, or an error message.
std::variant<int, std::string> stream_interval(const std::string& query) {
  const auto v = query_param(query, "interval");
  if (!v) return 50;
  try {
    std::size_t used = 0;
    const int ms = std::stoi(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    if (ms < kMinStreamIntervalMs) {
      return fmt::format("interval must be >= {} ms", kMinStreamIntervalMs);
    }
    return ms;
  } catch (const std::exception&) {
    return std::string("interval must be an integer (ms)");
  }
}

}  // namespace

Response Server::Impl::handle(const http::request<http::string_body>& req) {
  const Target t = split_target(std::string_view(req.target().data(), req.target().size()));

  if (req.method() == http::verb::options) {
    Response res{http::status::no_content, req.version()};
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.keep_alive(req.keep_alive());
    res.prepare_payload();
    return res;
  }

  if (t.path == "/api/state") {
    if (req.method() != http::verb::get) {
      return error_response(req, http::status::method_not_allowed, "use GET");
    }
    return json_response(req, http::status::ok, core.latest()->json);
  }
  if (t.path == "/api/model") {
    if (req.method() != http::verb::get) {
      return error_response(req, http::status::method_not_allowed, "use GET");
    }
    return json_response(req, http::status::ok, core.model_json());
  }
  if (t.path == "/api/command") {
    if (req.method() != http::verb::post) {
      return error_response(req, http::status::method_not_allowed, "use POST");
    }
    json body;
    try {
      body = json::parse(req.body());
    } catch (const json::parse_error& e) {
      return error_response(req, http::status::bad_request,
                            fmt::format("malformed JSON at {}",
                                        describe_offset(req.body(), e.byte ? e.byte - 1 : 0)),
                            "/");
    }
    sim::Command cmd;
    try {
      cmd = sim::command_from_json(body);
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      const auto colon = msg.find(':');
      return error_response(req, http::status::bad_request, msg,
                            colon == std::string::npos ? "/" : msg.substr(0, colon));
    }
    auto verdict = core.post(std::move(cmd));
    if (verdict.wait_for(std::chrono::seconds(5)) != std::future_status::ready) {
      return error_response(req, http::status::service_unavailable, "sim loop not running");
    }
    sim::CommandResult r;
    try {
      r = verdict.get();
    } catch (const std::exception& e) {
      return error_response(req, http::status::service_unavailable, e.what());
    }
    json out = r.accepted ? json{{"status", "accepted"}}
                          : json{{"status", "rejected"}, {"reason", r.reason}};
    return json_response(req, http::status::ok, out.dump());
  }
  if (t.path == "/api/stream") {
    return error_response(req, http::status::upgrade_required,
                          "/api/stream requires a WebSocket upgrade");
  }
  return error_response(req, http::status::not_found, fmt::format("no route {}", t.path));
}

void Server::Impl::stream(websocket::stream<tcp::socket&>& ws, double interval_s) {
  ws.text(true);
  const double dt = core.dt();
  // Start from the most recent selected frame still in history.
  std::uint64_t last = 0;  // highest tick examined
  bool sent_any = false;
  {
    auto all = core.since(0);
    for (auto it = all.rbegin(); it != all.rend(); ++it) {
      if (stream_selects((*it)->tick, dt, interval_s)) {
        last = (*it)->tick;
        ws.write(asio::buffer((*it)->json));
        sent_any = true;
        break;
      }
    }
  }
  if (!sent_any) {
    auto s = core.latest();
    last = s->tick;
    ws.write(asio::buffer(s->json));
  }
  while (!stopping) {
    core.wait_newer(last, std::chrono::steady_clock::now() + std::chrono::milliseconds(200));
    for (const auto& s : core.since(last)) {
      if (stream_selects(s->tick, dt, interval_s)) ws.write(asio::buffer(s->json));
      last = s->tick;
    }
  }
  beast::error_code ec;
  ws.close(websocket::close_code::going_away, ec);
}

void Server::Impl::serve(tcp::socket& socket) {
  beast::flat_buffer buffer;
  beast::error_code ec;
  for (;;) {
    http::request<http::string_body> req;
    http::read(socket, buffer, req, ec);
    if (ec) break;

    if (websocket::is_upgrade(req)) {
      const Target t = split_target(std::string_view(req.target().data(), req.target().size()));
      if (t.path != "/api/stream") {
        http::write(socket, error_response(req, http::status::not_found,
                                           fmt::format("no socket route {}", t.path)),
                    ec);
        break;
      }
      const auto interval = stream_interval(t.query);
      if (const auto* err = std::get_if<std::string>(&interval)) {
        http::write(socket, error_response(req, http::status::bad_request, *err, "interval"),
                    ec);
        break;
      }
      websocket::stream<tcp::socket&> ws(socket);
      ws.accept(req, ec);
      if (ec) break;
      try {
        stream(ws, std::get<int>(interval) / 1000.0);
      } catch (const std::exception&) {
        // Peer went away.
      }
      break;
    }

    Response res = handle(req);
    const bool keep = res.keep_alive();
    http::write(socket, res, ec);
    if (ec || !keep) break;
  }
  socket.shutdown(tcp::socket::shutdown_both, ec);
}

void Server::Impl::reap() {
  std::lock_guard lk(sessions_mu);
  for (auto it = sessions.begin(); it != sessions.end();) {
    if (it->done) {
      it->thread.join();
      it = sessions.erase(it);
    } else {
      ++it;
    }
  }
}

void Server::Impl::accept_loop() {
  while (!stopping) {
    auto socket = std::make_shared<tcp::socket>(ioc);
    beast::error_code ec;
    acceptor.accept(*socket, ec);
    if (stopping) break;
    if (ec) continue;
    reap();
    std::lock_guard lk(sessions_mu);
    Session& s = sessions.emplace_back();
    s.socket = socket;
    s.thread = std::thread([this, &s] {
      serve(*s.socket);
      s.done = true;
    });
  }
}

Server::Server(ServiceCore& core, std::uint16_t port, std::string address)
    : impl_(std::make_unique<Impl>(core)) {
  const tcp::endpoint ep{asio::ip::make_address(address), port};
  auto& a = impl_->acceptor;
  a.open(ep.protocol());
  a.set_option(asio::socket_base::reuse_address(true));
  a.bind(ep);
  a.listen();
  port_ = a.local_endpoint().port();
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

Server::~Server() { stop(); }

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  // Wake the blocking accept with a throwaway connection.
  {
    beast::error_code ec;
    tcp::socket poke(impl_->ioc);
    poke.connect({impl_->acceptor.local_endpoint().address(), port_}, ec);
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  {
    std::lock_guard lk(impl_->sessions_mu);
    for (auto& s : impl_->sessions) {
      beast::error_code ec;
      s.socket->shutdown(tcp::socket::shutdown_both, ec);
    }
  }
  for (auto& s : impl_->sessions) s.thread.join();
  impl_->sessions.clear();
  beast::error_code ec;
  impl_->acceptor.close(ec);
}

}  // namespace armforge::service
