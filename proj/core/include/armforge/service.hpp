#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "armforge/sim.hpp"

namespace armforge::service {

// One serialized sim tick.
struct Snapshot {
  std::uint64_t tick = 0;
  double clock = 0.0;
  std::string json;
};

// StateSnapshot document for the current simulator state. `events` caps the
// tail of the event log.
nlohmann::json snapshot_json(const sim::Simulator& s, std::size_t events = 50);

// Owns the simulator. Handlers only enqueue commands and read snapshots; the
// loop drains commands in arrival order, steps, then publishes.
class ServiceCore {
 public:
  ServiceCore(sim::Simulator sim, double dt = 0.02);
  ~ServiceCore();
  ServiceCore(const ServiceCore&) = delete;
  ServiceCore& operator=(const ServiceCore&) = delete;

  // Real-time loop at dt wall-clock seconds per tick.
  void start();
  void stop();
  bool running() const { return running_; }

  // One loop iteration, for driving the core without the real-time thread.
  void tick();

  // Resolved on the tick that applies the command. Fails with
  // std::runtime_error if the core stops first.
  std::future<sim::CommandResult> post(sim::Command c);

  std::shared_ptr<const Snapshot> latest() const;
  // Published snapshots with tick > after, oldest first (bounded history).
  std::vector<std::shared_ptr<const Snapshot>> since(std::uint64_t after) const;
  // Blocks until a snapshot newer than `after` exists or the deadline passes.
  bool wait_newer(std::uint64_t after, std::chrono::steady_clock::time_point deadline) const;

  const std::string& model_json() const { return model_json_; }
  double dt() const { return dt_; }

 private:
  struct Pending {
    sim::Command command;
    std::promise<sim::CommandResult> verdict;
  };
  void publish();
  void loop();

  sim::Simulator sim_;
  double dt_;
  std::string model_json_;

  std::mutex queue_mu_;
  std::deque<Pending> queue_;
  bool accepting_ = true;

  mutable std::mutex snap_mu_;
  mutable std::condition_variable snap_cv_;
  std::deque<std::shared_ptr<const Snapshot>> history_;

  std::mutex tick_mu_;  // serializes tick() callers
  std::atomic<bool> running_{false};
  std::thread thread_;
};

// Stream frame selection: tick t is sent iff it starts a new interval window
// of sim time, so every subscriber sees the same clock sequence.
bool stream_selects(std::uint64_t tick, double dt, double interval_s);

// HTTP + WebSocket front end:
//   GET  /api/state                 StateSnapshot
//   POST /api/command               {"status":"accepted"} | {"status":"rejected","reason"}
//   GET  /api/model                 ArmModel
//   GET  /api/stream?interval=ms    WebSocket, StateSnapshot text frames
class Server {
 public:
  // Port 0 binds an ephemeral port. Throws std::system_error on bind failure.
  Server(ServiceCore& core, std::uint16_t port, std::string address = "127.0.0.1");
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

inline constexpr std::uint16_t kDefaultPort = 8930;
inline constexpr int kMinStreamIntervalMs = 10;

}  // namespace armforge::service
