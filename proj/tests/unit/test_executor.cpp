#include <doctest.h>

#include <atomic>

#include <Eigen/Dense>

#include "cascade/core/errors.h"
#include "cascade/core/noise.h"
#include "cascade/executor/bench.h"
#include "cascade/executor/executor.h"
#include "cascade/executor/worker_pool.h"
#include "cascade/metrics/fps.h"
#include "support.h"

using namespace cascade;
using namespace cascade::executor;

TEST_CASE("worker pool runs every worker each round and rethrows") {
  WorkerPool pool(4);
  std::atomic<int> mask{0};
  for (int round = 0; round < 50; ++round) {
    mask = 0;
    pool.run([&](int id) { mask |= 1 << id; });
    CHECK(mask == 0xF);
  }
  CHECK_THROWS_WITH(pool.run([](int id) {
    if (id == 2) throw std::runtime_error("boom");
  }),
                    "boom");
  pool.run([&](int id) { mask |= 1 << id; });
}

TEST_CASE("entries map to workers round robin") {
  CHECK(Executor::worker_for(0, 5) == 0);
  CHECK(Executor::worker_for(4, 5) == 4);
  CHECK(Executor::worker_for(6, 5) == 1);
  CHECK(Executor::worker_for(3, 1) == 0);
  CHECK_THROWS_AS(Executor(0, CostModel{}), core::InvalidInput);
}

TEST_CASE("modeled iteration time is one pass per iteration when width fits") {
  auto cfg = testing::uniform_cost(testing::small_config(13, 1, 5), 0.2);
  const auto run = scheduler::run_cascade(cfg, "uniform", {1, 1});
  for (const auto& ev : run.trace.events) CHECK(ev.modeled_time == doctest::Approx(0.2));
  CHECK(run.trace.events.back().modeled_end == doctest::Approx(17 * 0.2));

  cfg.workers = 2;  // width 5 over 2 workers: loads 3c and 2c
  const auto narrow = scheduler::run_cascade(cfg, "uniform", {1, 1});
  CHECK(narrow.trace.events[6].entries.size() == 5);
  CHECK(narrow.trace.events[6].modeled_time == doctest::Approx(0.6));
}

TEST_CASE("modeled time matches a hand-computed schedule with comm and decode") {
  auto cfg = testing::small_config(3, 1, 5);
  cfg.cost = core::CostParams{1.0, 0.1, 0.5, 0.01, 2.0};
  const auto run = scheduler::run_cascade(cfg, "hand", {1, 1});
  // per iteration: max over workers of (1 + 0.1 * visible) + comm if > 1 worker + decode on emission
  double expect_total = 0.0;
  for (const auto& ev : run.trace.events) {
    double worst = 0.0;
    for (const auto& e : ev.entries) worst = std::max(worst, 1.0 + 0.1 * e.visible_frames);
    const double comm = ev.entries.size() > 1 ? 0.5 + 0.01 * 3.0 * static_cast<double>(ev.entries.size()) : 0.0;
    const double decode = ev.emitted ? 2.0 : 0.0;
    CHECK(ev.modeled_time == doctest::Approx(worst + comm + decode));
    CHECK(ev.comm_time == doctest::Approx(comm));
    expect_total += worst + comm + decode;
  }
  CHECK(run.trace.events.back().modeled_end == doctest::Approx(expect_total));
  CHECK(run.trace.events[0].entries.front().visible_frames == 3);
}

TEST_CASE("decode produces four video frames per latent frame") {
  core::NoiseStream ns(2, 16);
  const auto latents = ns.draw_block(0, 0, 0, 3);
  const Decoder dec(16, 16, 4);
  const auto px = dec.decode(latents);
  CHECK(px.rows() == 12);
  CHECK(px.cols() == 16);
  CHECK(dec.decode(core::Matrix(3, 16)) == core::Matrix(12, 16));
  CHECK(decode_block(latents, core::CascadeConfig{}) == px);
  CHECK_THROWS_AS(dec.decode(core::Matrix(3, 8)), core::ContractViolation);
}

TEST_CASE("speedup report for 40 blocks at o=1") {
  const auto cfg = testing::uniform_cost(testing::small_config(13, 1, 5), 1.0);
  const auto report = speedup_report(cfg, 40, {1, 5});
  CHECK(report.baseline_iterations == 200);
  CHECK(report.baseline_modeled == doctest::Approx(200.0));
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].modeled_speedup == doctest::Approx(1.0));
  CHECK(report.rows[1].iterations == 44);
  CHECK(std::abs(report.rows[1].modeled_speedup - 200.0 / 44.0) <= 1e-9);
  CHECK(speedup_csv(report).rfind("workers,iterations,modeled_time", 0) == 0);
  CHECK_THROWS_AS(speedup_report(cfg, 4, {5}), core::InvalidInput);
}

TEST_CASE("any comm or decode cost makes speedup strictly sub-linear") {
  for (auto cost : {core::CostParams{1.0, 0.0, 0.05, 0.0, 0.0}, core::CostParams{1.0, 0.0, 0.0, 0.001, 0.0},
                    core::CostParams{1.0, 0.0, 0.0, 0.0, 0.3}}) {
    auto cfg = testing::small_config(13, 1, 5);
    cfg.cost = cost;
    const auto report = speedup_report(cfg, 40, {2, 5});
    for (const auto& row : report.rows) {
      CHECK(row.modeled_speedup < row.workers);
      CHECK(row.modeled_speedup < 200.0 / 44.0);
    }
  }
}

TEST_CASE("decode overlap helps only when decode costs something") {
  auto cfg = testing::uniform_cost(testing::small_config(13, 1, 5), 1.0);
  cfg.decode_overlap = true;
  const auto free_decode = run_with_overlap(cfg, "overlap", {1, 1});
  cfg.decode_overlap = false;
  const auto base = run_with_overlap(cfg, "overlap", {1, 1});
  CHECK(metrics::instantaneous_fps(free_decode) == metrics::instantaneous_fps(base));

  cfg.cost.decode = 1.0;
  const auto serial = run_with_overlap(cfg, "overlap", {1, 1});
  cfg.decode_overlap = true;
  const auto piped = run_with_overlap(cfg, "overlap", {1, 1});
  const double s_serial = metrics::streaming_fps(serial);
  const double s_piped = metrics::streaming_fps(piped);
  CHECK(s_piped > s_serial);
  // decode = pass cost: two units per block serial, one when pipelined
  CHECK(s_serial == doctest::Approx(6.0));
  CHECK(s_piped == doctest::Approx(12.0));
  for (std::size_t i = 0; i < serial.events.size(); ++i) {
    CHECK(serial.events[i].emitted.has_value() == piped.events[i].emitted.has_value());
    if (serial.events[i].emitted) CHECK(serial.events[i].emitted->latents == piped.events[i].emitted->latents);
  }

  cfg.workers = 1;
  CHECK_THROWS_AS(run_with_overlap(cfg, "overlap", {1, 1}), core::ConfigError);
}

TEST_CASE("ablation grid covers offsets, modes and worker counts") {
  const auto cfg = testing::small_config(13, 1, 5);
  const auto rows = ablation_grid(cfg, {1, 5});
  REQUIRE(rows.size() == 5 * 2 * 2);
  for (const auto& r : rows) {
    CHECK(r.iterations == 12 * r.offset + 5);
    CHECK(r.streaming_fps > 0.0);
    CHECK(r.fps.size() == 13);
  }
  CHECK(ablation_csv(rows).find("offset,attention_mode,workers") == 0);
}

TEST_CASE("decode is left-invertible on random latents") {
  const int D = 16, pixel = 16, per = 4;
  const Decoder dec(D, pixel, per);
  // Stack the per-video-frame maps side by side: latent row -> all its pixels.
  Eigen::MatrixXd stacked(D, pixel * per);
  for (int k = 0; k < per; ++k) {
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < pixel; ++j) stacked(i, k * pixel + j) = dec.maps()[static_cast<std::size_t>(k)](i, j);
    }
  }
  const Eigen::MatrixXd A = stacked.transpose();  // pixels = A * latent
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  CHECK(qr.rank() == D);

  core::NoiseStream ns(123, D);
  for (int trial = 0; trial < 20; ++trial) {
    const auto latents = ns.draw_block(trial, 0, 0, 3);
    const auto px = dec.decode(latents);
    for (int f = 0; f < 3; ++f) {
      Eigen::VectorXd y(pixel * per);
      for (int k = 0; k < per; ++k) {
        for (int j = 0; j < pixel; ++j) y(k * pixel + j) = px(static_cast<std::size_t>(f * per + k), static_cast<std::size_t>(j));
      }
      const Eigen::VectorXd x = qr.solve(y);
      for (int i = 0; i < D; ++i) CHECK(x(i) == doctest::Approx(latents(static_cast<std::size_t>(f), static_cast<std::size_t>(i))).epsilon(1e-9));
    }
  }
}
