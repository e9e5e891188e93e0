#include "cascade/executor/bench.h"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "cascade/core/errors.h"

namespace cascade::executor {

namespace {

constexpr const char* kBenchPrompt = "benchmark";

struct Timed {
  scheduler::RunResult run;
  double wall = 0.0;
};

Timed timed_run(const core::CascadeConfig& config, scheduler::Seeds seeds) {
  const auto start = std::chrono::steady_clock::now();
  auto run = scheduler::run_cascade(config, kBenchPrompt, seeds);
  return {std::move(run), std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

}  // namespace

double modeled_makespan(const metrics::Trace& trace) {
  double end = 0.0;
  for (const auto& ev : trace.events) {
    end = std::max(end, ev.modeled_end);
    if (ev.emitted) end = std::max(end, ev.emitted->emit_time);
  }
  return end;
}

SpeedupReport speedup_report(core::CascadeConfig config, int blocks, const std::vector<int>& worker_counts,
                             scheduler::Seeds seeds) {
  if (blocks < config.passes()) {
    throw core::InvalidInput("speedup report needs at least " + std::to_string(config.passes()) + " blocks");
  }
  config.total_frames = blocks * config.S;

  auto baseline_cfg = config;
  baseline_cfg.offset = config.passes();
  baseline_cfg.workers = 1;
  baseline_cfg.decode_overlap = false;
  const auto baseline = timed_run(baseline_cfg, seeds);

  SpeedupReport report;
  report.blocks = blocks;
  report.baseline_iterations = static_cast<int>(baseline.run.trace.iterations());
  report.baseline_modeled = modeled_makespan(baseline.run.trace);
  report.baseline_wall = baseline.wall;

  const bool overhead = config.cost.comm_base > 0 || config.cost.comm_per_frame > 0 || config.cost.decode > 0;
  for (int g : worker_counts) {
    auto cfg = config;
    cfg.workers = g;
    const auto t = timed_run(cfg, seeds);
    SpeedupRow row;
    row.workers = g;
    row.iterations = static_cast<int>(t.run.trace.iterations());
    row.modeled_time = modeled_makespan(t.run.trace);
    row.modeled_speedup = report.baseline_modeled / row.modeled_time;
    row.wall_seconds = t.wall;
    row.wall_speedup = report.baseline_wall / t.wall;
    if (overhead && g > 1 && !(row.modeled_speedup < g)) {
      throw core::ContractViolation("speedup with G=" + std::to_string(g) + " is not sub-linear");
    }
    report.rows.push_back(row);
  }
  return report;
}

std::string speedup_csv(const SpeedupReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "workers,iterations,modeled_time,modeled_speedup,wall_seconds,wall_speedup\n";
  out << "baseline," << report.baseline_iterations << ',' << report.baseline_modeled << ",1," << report.baseline_wall
      << ",1\n";
  for (const auto& r : report.rows) {
    out << r.workers << ',' << r.iterations << ',' << r.modeled_time << ',' << r.modeled_speedup << ','
        << r.wall_seconds << ',' << r.wall_speedup << '\n';
  }
  return out.str();
}

std::vector<AblationRow> ablation_grid(const core::CascadeConfig& config, const std::vector<int>& worker_counts,
                                       scheduler::Seeds seeds) {
  std::vector<AblationRow> rows;
  for (int o = 1; o <= config.passes(); ++o) {
    for (auto mode : {core::AttentionMode::causal, core::AttentionMode::bidirectional}) {
      for (int g : worker_counts) {
        auto cfg = config;
        cfg.offset = o;
        cfg.attention_mode = mode;
        cfg.workers = g;
        const auto run = scheduler::run_cascade(cfg, kBenchPrompt, seeds);
        AblationRow row;
        row.offset = o;
        row.mode = mode;
        row.workers = g;
        row.iterations = static_cast<int>(run.trace.iterations());
        row.modeled_time = modeled_makespan(run.trace);
        row.fps = metrics::instantaneous_fps(run.trace);
        if (static_cast<int>(row.fps.size()) >= metrics::kStreamingFpsMinBlocks) {
          row.streaming_fps = metrics::streaming_fps(row.fps);
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "offset,attention_mode,workers,iterations,modeled_time,streaming_fps\n";
  for (const auto& r : rows) {
    out << r.offset << ',' << core::to_string(r.mode) << ',' << r.workers << ',' << r.iterations << ','
        << r.modeled_time << ',' << r.streaming_fps << '\n';
  }
  return out.str();
}

metrics::Trace run_with_overlap(const core::CascadeConfig& config, std::string_view prompt, scheduler::Seeds seeds) {
  return scheduler::run_cascade(config, prompt, seeds).trace;
}

}  // namespace cascade::executor
