#include "cascade/interactive/session.h"

#include <algorithm>

#include "cascade/core/conditioning.h"
#include "cascade/executor/executor.h"

namespace cascade::interactive {

InteractiveSession::InteractiveSession(core::CascadeConfig config, std::string_view prompt, scheduler::Seeds seeds)
    : engine_(std::move(config), prompt, seeds) {}

InteractiveSession::~InteractiveSession() { close(); }

std::future<core::SwitchEvent> InteractiveSession::request_switch(std::string prompt, core::SwitchMode mode) {
  if (prompt.empty()) throw core::InvalidInput("prompt must not be empty");
  std::lock_guard lock(mu_);
  if (closed_) throw SessionClosed();
  queue_.push_back(Request{std::move(prompt), mode, {}});
  return queue_.back().done.get_future();
}

core::SwitchEvent InteractiveSession::switch_prompt(std::string_view prompt, core::SwitchMode mode) {
  {
    std::lock_guard lock(mu_);
    if (closed_ || engine_.done()) throw SessionClosed();
  }
  if (switched_at_ == engine_.state().iteration) {
    throw core::ContractViolation("a switch was already applied at iteration " + std::to_string(switched_at_));
  }
  return apply(prompt, mode);
}

core::SwitchEvent InteractiveSession::apply(std::string_view prompt, core::SwitchMode mode) {
  const auto& config = engine_.config();
  auto cond = core::embed_prompt(prompt, config.Dc);
  const executor::CostModel& cost = engine_.executor().cost();

  core::SwitchEvent ev;
  ev.request_iteration = engine_.state().iteration;
  ev.effective_block = engine_.state().lead();
  ev.mode = mode;
  ev.prompt = cond.prompt;
  ev.conditioning_id = cond.id;

  std::optional<kvpool::RecacheReport> report;
  if (mode == core::SwitchMode::recache) {
    report = kvpool::recache(engine_.pool(), cond, engine_.weights(), engine_.outputs());
  } else if (config.refresh_sink_on_switch && !engine_.pool().sink_set().empty()) {
    report = kvpool::recache(engine_.pool(), cond, engine_.weights(), engine_.outputs(), engine_.pool().sink_set());
  }
  if (report) {
    ev.extra_passes = report->passes;
    for (int frames : report->visible_frames) ev.stall_time += cost.pass_cost(frames);
  }

  engine_.set_conditioning(std::move(cond));
  engine_.add_boundary_stall(ev.stall_time, ev);
  switched_at_ = ev.request_iteration;
  return ev;
}

const metrics::TraceEvent& InteractiveSession::step() {
  if (switched_at_ != engine_.state().iteration) {
    std::unique_lock lock(mu_);
    if (!queue_.empty()) {
      Request req = std::move(queue_.front());
      queue_.pop_front();
      lock.unlock();
      try {
        req.done.set_value(apply(req.prompt, req.mode));
      } catch (...) {
        req.done.set_exception(std::current_exception());
      }
    }
  }
  const auto& ev = engine_.step();
  if (engine_.done()) close();
  return ev;
}

void InteractiveSession::run() {
  while (!done()) step();
}

void InteractiveSession::close() {
  std::deque<Request> rejected;
  {
    std::lock_guard lock(mu_);
    closed_ = true;
    rejected.swap(queue_);
  }
  for (auto& r : rejected) r.done.set_exception(std::make_exception_ptr(SessionClosed()));
}

std::string InteractiveSession::prompt() const { return engine_.conditioning().prompt; }

std::size_t InteractiveSession::queued() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

InteractiveResult run_interactive(const core::CascadeConfig& config, std::string_view prompt, scheduler::Seeds seeds,
                                  std::vector<ScheduledSwitch> switches) {
  std::stable_sort(switches.begin(), switches.end(),
                   [](const ScheduledSwitch& a, const ScheduledSwitch& b) { return a.at_block < b.at_block; });
  InteractiveSession session(config, prompt, seeds);
  InteractiveResult result;
  std::size_t next = 0;
  while (!session.done()) {
    const auto emitted = static_cast<int>(session.engine().outputs().size());
    if (next < switches.size() && emitted >= switches[next].at_block) {
      result.switches.push_back(session.switch_prompt(switches[next].prompt, switches[next].mode));
      ++next;
    }
    session.step();
  }
  result.outputs = session.engine().output_blocks();
  result.trace = session.trace();
  return result;
}

double switch_latency(const metrics::Trace& trace, const core::SwitchEvent& event) {
  for (const auto& ev : trace.events) {
    for (const auto& s : ev.switch_events) {
      if (s == event) return s.stall_time;
    }
  }
  throw core::InvalidInput("switch event not found in trace");
}

}  // namespace cascade::interactive
