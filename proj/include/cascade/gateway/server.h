#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cascade/gateway/events.h"
#include "cascade/interactive/session.h"

namespace cascade::gateway {

enum class Status { running, draining, done, failed };
const char* to_string(Status status);

struct SessionOptions {
  scheduler::Seeds seeds;
  std::chrono::milliseconds pace{0};  // sleep between iterations
  std::size_t tail_capacity = 4096;   // live events kept for slow readers
};

struct SessionStatus {
  std::string id;
  Status status = Status::running;
  std::string prompt;
  int iteration = 0;
  int emitted = 0;
  int blocks = 0;
  int pool_blocks = 0;
  int switches = 0;
  std::string error;
};

nlohmann::json to_json(const SessionStatus& s);

// One generation loop on its own thread plus an append-only event log.
// Block events are kept for the whole session so late subscribers can
// replay them; other events only live in a bounded tail.
class Session {
 public:
  Session(std::string id, core::CascadeConfig config, std::string prompt, SessionOptions options);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const core::CascadeConfig& config() const { return config_; }
  SessionStatus status() const;

  // Blocks until the switch is applied. Throws interactive::SessionClosed
  // once the session is finished.
  core::SwitchEvent switch_prompt(const std::string& prompt, core::SwitchMode mode);

  class Subscription {
   public:
    // Next batch of serialized events, waiting up to `timeout`. Returns
    // nullopt once the terminal event has been delivered.
    std::optional<std::vector<std::string>> next(std::chrono::milliseconds timeout);

   private:
    friend class Session;
    explicit Subscription(std::shared_ptr<Session> session) : session_(std::move(session)) {}
    std::shared_ptr<Session> session_;
    int cursor_ = -1;  // highest seq handed out
    bool started_ = false;
    bool finished_ = false;
  };

  static Subscription subscribe(const std::shared_ptr<Session>& session);

  // Events still held in the live tail, in order.
  std::vector<std::string> tail() const;
  void wait_done() const;
  metrics::Trace trace() const;  // only once done

 private:
  struct Logged {
    int seq;
    std::string text;
    bool terminal;
  };

  void loop();
  void append(const nlohmann::json& event);

  std::string id_;
  core::CascadeConfig config_;
  SessionOptions options_;
  interactive::InteractiveSession session_;
  EventProjector projector_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  SessionStatus status_;
  std::vector<Logged> blocks_;
  std::deque<Logged> tail_;
  std::optional<Logged> terminal_;
  int last_seq_ = -1;

  std::atomic<bool> stop_{false};
  std::thread thread_;
};

class SessionManager {
 public:
  SessionManager() = default;
  ~SessionManager();

  // Throws core::ConfigError with field diagnostics on an invalid config.
  std::shared_ptr<Session> create(core::CascadeConfig config, std::string prompt, SessionOptions options);
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::string> ids() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  int next_id_ = 1;
};

// HTTP front end:
//   POST /sessions                 {"prompt", "config"?, "seed"?, "weights_seed"?, "pace_ms"?}
//   GET  /sessions/{id}            status
//   POST /sessions/{id}/prompt     {"prompt", "mode"?}
//   GET  /sessions/{id}/events     text/event-stream
class Server {
 public:
  explicit Server(core::CascadeConfig defaults = {});
  ~Server();

  int bind(const std::string& host, int port);  // port 0 picks a free one
  void listen();                                // blocks until stop()
  void stop();

  SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cascade::gateway
