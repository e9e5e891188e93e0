#pragma once

#include <deque>
#include <future>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/core/errors.h"
#include "cascade/core/types.h"
#include "cascade/metrics/trace.h"
#include "cascade/scheduler/engine.h"

namespace cascade::interactive {

class SessionClosed : public core::Error {
 public:
  SessionClosed() : core::Error("session has finished; switch rejected") {}
};

// An engine plus a command queue of prompt switches. One thread drives
// step(); any thread may call request_switch(). Queued requests are applied
// at iteration boundaries, at most one per boundary, in arrival order.
class InteractiveSession {
 public:
  InteractiveSession(core::CascadeConfig config, std::string_view prompt, scheduler::Seeds seeds);
  ~InteractiveSession();

  InteractiveSession(const InteractiveSession&) = delete;
  InteractiveSession& operator=(const InteractiveSession&) = delete;

  // Thread-safe. The future resolves once the switch is applied, or holds
  // SessionClosed if the session ends first. Throws SessionClosed when the
  // session is already finished.
  std::future<core::SwitchEvent> request_switch(std::string prompt, core::SwitchMode mode);

  // Applies a switch at the current boundary. Driving thread only; throws
  // ContractViolation if a switch was already applied at this boundary.
  core::SwitchEvent switch_prompt(std::string_view prompt, core::SwitchMode mode);

  bool done() const { return engine_.done(); }
  const metrics::TraceEvent& step();
  void run();
  // Rejects every queued request; further requests throw SessionClosed.
  void close();

  const scheduler::CascadeEngine& engine() const { return engine_; }
  const metrics::Trace& trace() const { return engine_.trace(); }
  std::string prompt() const;
  std::size_t queued() const;

 private:
  struct Request {
    std::string prompt;
    core::SwitchMode mode;
    std::promise<core::SwitchEvent> done;
  };

  core::SwitchEvent apply(std::string_view prompt, core::SwitchMode mode);

  scheduler::CascadeEngine engine_;
  mutable std::mutex mu_;
  std::deque<Request> queue_;
  bool closed_ = false;
  int switched_at_ = -1;  // iteration boundary of the last applied switch
};

struct ScheduledSwitch {
  int at_block = 0;  // fires at the first boundary with at_block blocks emitted
  std::string prompt;
  core::SwitchMode mode = core::SwitchMode::cascade;
};

struct InteractiveResult {
  std::vector<core::Matrix> outputs;
  metrics::Trace trace;
  std::vector<core::SwitchEvent> switches;
};

InteractiveResult run_interactive(const core::CascadeConfig& config, std::string_view prompt, scheduler::Seeds seeds,
                                  std::vector<ScheduledSwitch> switches);

// Modeled stall charged for `event`; throws InvalidInput if the trace does
// not contain it.
double switch_latency(const metrics::Trace& trace, const core::SwitchEvent& event);

}  // namespace cascade::interactive
