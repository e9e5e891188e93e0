#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cascade/core/errors.h"
#include "cascade/metrics/fps.h"
#include "cascade/metrics/trace.h"
#include "cascade/scheduler/engine.h"
#include "support.h"

using namespace cascade;
using namespace cascade::metrics;

namespace {

Trace emissions(const std::vector<double>& times, int frames = 12) {
  Trace t;
  for (std::size_t i = 0; i < times.size(); ++i) {
    TraceEvent ev;
    ev.iteration = static_cast<int>(i);
    ev.modeled_end = times[i];
    ev.emitted = Emission{static_cast<int>(i), frames, times[i], times[i], core::Matrix(3, 2, 1.0)};
    t.events.push_back(ev);
  }
  return t;
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("instantaneous fps is frames over elapsed modeled time") {
  const auto series = instantaneous_fps(emissions({0.5, 0.9}));
  REQUIRE(series.size() == 2);
  CHECK(series[1].elapsed == doctest::Approx(0.4));
  CHECK(series[1].fps == doctest::Approx(30.0));
  CHECK(series[0].fps == doctest::Approx(24.0));
  CHECK_THROWS_AS(instantaneous_fps(Trace{}), core::InvalidInput);
}

TEST_CASE("streaming fps averages the 8th and 9th blocks") {
  FpsSeries s(9);
  s[7].fps = 28.0;
  s[8].fps = 32.0;
  CHECK(streaming_fps(s) == 30.0);
  s.resize(8);
  CHECK_THROWS_WITH_AS(streaming_fps(s), doctest::Contains("at least 9"), core::InvalidInput);
}

TEST_CASE("steady state fps is flat at o=1 with uniform cost") {
  const auto run = scheduler::run_cascade(testing::uniform_cost(testing::small_config(13, 1, 5), 0.1), "flat", {1, 2});
  const auto fps = instantaneous_fps(run.trace);
  REQUIRE(fps.size() == 13);
  for (std::size_t i = 1; i < 13; ++i) CHECK(fps[i].fps == doctest::Approx(120.0));
  CHECK(fps[0].fps == doctest::Approx(30.0));
}

TEST_CASE("attention cost of a single block with an empty pool") {
  auto cfg = testing::small_config(1, 1, 1);
  const auto run = scheduler::run_cascade(cfg, "cost", {3, 4});
  const auto cost = attention_cost(run.trace, cfg);
  CHECK(cost.total_pairs == 5 * 9);
  CHECK(cost.max_keys_per_query == 3);

  cfg.denoise_levels = {1000, 900, 800, 700, 600, 500, 400, 300, 200};  // ten passes
  cfg.W = 9;
  const auto longer = scheduler::run_cascade(cfg, "cost", {3, 4});
  CHECK(attention_cost(longer.trace, cfg).total_pairs == 2 * cost.total_pairs);
}

TEST_CASE("attention cost respects the window bound in steady state") {
  const auto cfg = testing::small_config(20, 1, 5);
  const auto run = scheduler::run_cascade(cfg, "bound", {5, 6});
  const auto cost = attention_cost(run.trace, cfg);
  CHECK(cost.max_allowed_keys == 39);
  CHECK(cost.max_keys_per_query <= 39);
  for (const auto& ev : run.trace.events) CHECK(ev.pool_frames <= (cfg.W + cfg.sink_blocks) * cfg.S);

  Trace forged = run.trace;
  forged.events[10].entries[0].visible_frames = 40;
  CHECK_THROWS_AS(attention_cost(forged, cfg), core::ContractViolation);
}

TEST_CASE("json-lines export round trips exactly") {
  const auto run = scheduler::run_cascade(testing::small_config(13, 1, 5), "export", {9, 9});
  const auto path = temp_file("cascade_trace_test.jsonl");
  export_trace(run.trace, path, TraceFormat::json_lines);
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 17);
  CHECK(import_trace(path) == run.trace);
  std::filesystem::remove(path);
}

TEST_CASE("csv export carries the fps columns") {
  const auto run = scheduler::run_cascade(testing::small_config(4, 1, 5), "csv", {9, 9});
  const auto path = temp_file("cascade_fps_test.csv");
  export_trace(run.trace, path, TraceFormat::csv);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "block,video_frames,elapsed,fps");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(export_trace(run.trace, "/nonexistent-dir/x.csv", TraceFormat::csv), core::InvalidInput);
}

TEST_CASE("trace events carry the schedule the engine replays") {
  const auto cfg = testing::small_config(9, 2, 3);
  const auto run = scheduler::run_cascade(cfg, "replay", {1, 1});
  scheduler::CascadeEngine engine(cfg, "replay", {1, 1});
  for (const auto& ev : run.trace.events) {
    const auto plan = scheduler::plan_iteration(engine.state(), cfg);
    REQUIRE(plan.entries.size() == ev.entries.size());
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
      CHECK(plan.entries[i].block_index == ev.entries[i].block);
      CHECK(plan.entries[i].pass_index == ev.entries[i].pass);
      CHECK(plan.entries[i].worker == ev.entries[i].worker);
    }
    CHECK(engine.step().iteration == ev.iteration);
  }
}
