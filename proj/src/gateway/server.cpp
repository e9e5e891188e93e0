#include "cascade/gateway/server.h"

#include <httplib.h>

#include "cascade/core/errors.h"

namespace cascade::gateway {

using nlohmann::json;

const char* to_string(Status status) {
  switch (status) {
    case Status::running: return "running";
    case Status::draining: return "draining";
    case Status::done: return "done";
    case Status::failed: return "failed";
  }
  return "?";
}

json to_json(const SessionStatus& s) {
  json j{{"id", s.id},         {"status", to_string(s.status)}, {"prompt", s.prompt},
         {"iteration", s.iteration}, {"emitted", s.emitted},   {"blocks", s.blocks},
         {"pool_blocks", s.pool_blocks}, {"switches", s.switches}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

Session::Session(std::string id, core::CascadeConfig config, std::string prompt, SessionOptions options)
    : id_(std::move(id)),
      config_(std::move(config)),
      options_(options),
      session_(config_, prompt, options.seeds),
      projector_(config_) {
  status_.id = id_;
  status_.prompt = prompt;
  status_.blocks = config_.blocks();
  thread_ = std::thread([this] { loop(); });
}

Session::~Session() {
  stop_ = true;
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  return status_;
}

void Session::loop() {
  try {
    while (!stop_ && !session_.done()) {
      const auto& ev = session_.step();
      const auto events = projector_.project(ev);
      {
        std::lock_guard lock(mu_);
        status_.iteration = ev.iteration + 1;
        status_.emitted += ev.emitted ? 1 : 0;
        status_.pool_blocks = ev.pool_blocks;
        status_.switches += static_cast<int>(ev.switch_events.size());
        status_.prompt = session_.prompt();
        if (session_.engine().state().phase() == scheduler::Phase::drain) status_.status = Status::draining;
      }
      for (const auto& e : events) append(e);
      if (options_.pace.count() > 0) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, options_.pace, [this] { return stop_.load(); });
      }
    }
    session_.close();
    const bool finished = session_.done();
    {
      std::lock_guard lock(mu_);
      status_.status = finished ? Status::done : Status::failed;
      if (!finished) status_.error = "stopped";
    }
    append(projector_.finish(finished ? "done" : "failed", finished ? "" : "stopped"));
  } catch (const std::exception& e) {
    session_.close();
    {
      std::lock_guard lock(mu_);
      status_.status = Status::failed;
      status_.error = e.what();
    }
    append(projector_.finish("failed", e.what()));
  }
}

void Session::append(const json& event) {
  const std::string type = event.at("type").get<std::string>();
  Logged item{event.at("seq").get<int>(), event.dump(), type == "session_done"};
  std::lock_guard lock(mu_);
  if (type == "block_emitted") blocks_.push_back(item);
  if (item.terminal) terminal_ = item;
  tail_.push_back(std::move(item));
  while (tail_.size() > options_.tail_capacity) tail_.pop_front();
  last_seq_ = tail_.back().seq;
  cv_.notify_all();
}

core::SwitchEvent Session::switch_prompt(const std::string& prompt, core::SwitchMode mode) {
  return session_.request_switch(prompt, mode).get();
}

Session::Subscription Session::subscribe(const std::shared_ptr<Session>& session) { return Subscription(session); }

std::optional<std::vector<std::string>> Session::Subscription::next(std::chrono::milliseconds timeout) {
  if (finished_) return std::nullopt;
  auto& s = *session_;
  std::vector<std::string> out;
  std::unique_lock lock(s.mu_);

  auto deliver = [&](const Logged& item) {
    out.push_back(item.text);
    cursor_ = std::max(cursor_, item.seq);
    if (item.terminal) finished_ = true;
  };

  if (!started_) {
    started_ = true;
    for (const auto& b : s.blocks_) deliver(b);
    if (s.terminal_) deliver(*s.terminal_);
    cursor_ = std::max(cursor_, s.last_seq_);
    if (!out.empty()) return out;
  }

  s.cv_.wait_for(lock, timeout, [&] { return s.last_seq_ > cursor_ || s.stop_; });
  if (s.last_seq_ <= cursor_) return out;

  // Fill from the block log anything that already fell out of the tail.
  const int tail_front = s.tail_.empty() ? s.last_seq_ + 1 : s.tail_.front().seq;
  for (const auto& b : s.blocks_) {
    if (b.seq > cursor_ && b.seq < tail_front) deliver(b);
  }
  for (const auto& item : s.tail_) {
    if (item.seq > cursor_) deliver(item);
  }
  return out;
}

std::vector<std::string> Session::tail() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& item : tail_) out.push_back(item.text);
  return out;
}

void Session::wait_done() const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return terminal_.has_value(); });
}

metrics::Trace Session::trace() const {
  wait_done();
  return session_.trace();
}

SessionManager::~SessionManager() {
  std::lock_guard lock(mu_);
  sessions_.clear();
}

std::shared_ptr<Session> SessionManager::create(core::CascadeConfig config, std::string prompt, SessionOptions options) {
  config.validate();
  if (prompt.empty()) throw core::ConfigError({"prompt: must not be empty"});
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = std::make_shared<Session>(id, std::move(config), std::move(prompt), options);
  std::lock_guard lock(mu_);
  sessions_.emplace(id, session);
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 const std::vector<std::string>& fields = {}) {
  json body{{"error", message}};
  if (!fields.empty()) body["fields"] = fields;
  reply(res, status, body);
}

}  // namespace

struct Server::Impl {
  core::CascadeConfig defaults;
  SessionManager sessions;
  httplib::Server http;

  void routes();
};

void Server::Impl::routes() {
  http.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return reply_error(res, 400, std::string("malformed json: ") + e.what());
    }
    if (!body.is_object()) return reply_error(res, 400, "expected a json object");
    try {
      const auto prompt = body.value("prompt", std::string{});
      auto config = body.contains("config") ? core::config_from_json(body.at("config"), defaults) : defaults;
      SessionOptions options;
      options.seeds.noise = body.value("seed", std::uint64_t{0});
      options.seeds.weights = body.value("weights_seed", std::uint64_t{0});
      options.pace = std::chrono::milliseconds(body.value("pace_ms", 0));
      auto session = sessions.create(std::move(config), prompt, options);
      reply(res, 201, to_json(session->status()));
    } catch (const core::ConfigError& e) {
      reply_error(res, 400, e.what(), e.fields());
    } catch (const json::exception& e) {
      reply_error(res, 400, e.what());
    }
  });

  http.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto session = sessions.find(req.matches[1]);
    if (!session) return reply_error(res, 404, "unknown session");
    reply(res, 200, to_json(session->status()));
  });

  http.Post(R"(/sessions/([^/]+)/prompt)", [this](const httplib::Request& req, httplib::Response& res) {
    auto session = sessions.find(req.matches[1]);
    if (!session) return reply_error(res, 404, "unknown session");
    try {
      const auto body = json::parse(req.body);
      const auto prompt = body.at("prompt").get<std::string>();
      const auto mode = core::parse_switch_mode(body.value("mode", std::string("cascade")));
      reply(res, 200, metrics::to_json(session->switch_prompt(prompt, mode)));
    } catch (const interactive::SessionClosed& e) {
      reply_error(res, 409, e.what());
    } catch (const core::InvalidInput& e) {
      reply_error(res, 400, e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, e.what());
    }
  });

  http.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    auto session = sessions.find(req.matches[1]);
    if (!session) return reply_error(res, 404, "unknown session");
    auto sub = std::make_shared<Session::Subscription>(Session::subscribe(session));
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [sub](std::size_t, httplib::DataSink& sink) {
      auto batch = sub->next(std::chrono::milliseconds(250));
      if (!batch) {
        sink.done();
        return true;
      }
      for (const auto& text : *batch) {
        const std::string frame = "data: " + text + "\n\n";
        if (!sink.write(frame.data(), frame.size())) return false;
      }
      return sink.is_writable();
    });
  });

  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    } catch (...) {
      reply_error(res, 500, "internal error");
    }
  });
}

Server::Server(core::CascadeConfig defaults) : impl_(std::make_unique<Impl>()) {
  impl_->defaults = std::move(defaults);
  impl_->routes();
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

SessionManager& Server::sessions() { return impl_->sessions; }

}  // namespace cascade::gateway
