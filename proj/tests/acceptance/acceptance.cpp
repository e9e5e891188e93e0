// Acceptance suite: one PASS/FAIL line per headline criterion. Exit status is
// nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "cascade/core/noise.h"
#include "cascade/denoiser/forward.h"
#include "cascade/denoiser/mask.h"
#include "cascade/executor/bench.h"
#include "cascade/interactive/session.h"
#include "cascade/metrics/fps.h"
#include "cascade/scheduler/engine.h"
#include "oracles.h"
#include "support.h"

using namespace cascade;

namespace {

// Tolerances.
constexpr double kSpeedupTol = 1e-9;
constexpr double kOracleRuntimeLimitSeconds = 10.0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

const core::ModelDims kTinyModel{1, 1, 4};

Outcome oracle_equivalence() {
  Outcome o;
  core::CascadeConfig cfg;
  cfg.total_frames = 39;
  cfg.S = 3;
  cfg.D = 16;
  cfg.W = 7;
  cfg.sink_blocks = 1;
  cfg.offset = 5;
  cfg.workers = 1;
  const scheduler::Seeds seeds{2025, 7};
  const auto start = std::chrono::steady_clock::now();
  const auto run = scheduler::run_cascade(cfg, "a sailboat crossing a bay", seeds);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto ref = scheduler::run_sequential_reference(cfg, "a sailboat crossing a bay", seeds);
  double worst = 0.0;
  o.require(run.outputs.size() == 13 && ref.size() == 13, "13 blocks");
  for (std::size_t i = 0; i < std::min(run.outputs.size(), ref.size()); ++i) {
    worst = std::max(worst, core::max_abs_diff(run.outputs[i], ref[i]));
  }
  o.require(worst == 0.0, "max |delta| == 0");
  o.require(seconds < kOracleRuntimeLimitSeconds, "runtime < 10 s");
  o.detail << "max|delta|=" << worst << " runtime=" << seconds << "s";
  return o;
}

Outcome iteration_counts() {
  Outcome o;
  int checked = 0;
  for (int off = 1; off <= 5; ++off) {
    for (int B = 1; B <= 20; ++B) {
      auto cfg = testing::small_config(B, off, 5);
      cfg.model = kTinyModel;
      const auto run = scheduler::run_cascade(cfg, "count", {static_cast<std::uint64_t>(B), 1});
      const auto oracle = testing::enumerate_schedule(B, off, 5);
      const int measured = static_cast<int>(run.trace.iterations());
      o.require(measured == (B - 1) * off + 5, "formula o=" + std::to_string(off) + " B=" + std::to_string(B));
      o.require(measured == oracle.iterations, "enumerator o=" + std::to_string(off) + " B=" + std::to_string(B));
      for (std::size_t i = 0; i < oracle.batches.size() && i < run.trace.events.size(); ++i) {
        std::vector<std::pair<int, int>> got;
        for (const auto& e : run.trace.events[i].entries) got.emplace_back(e.block, e.pass);
        o.require(got == oracle.batches[i], "batch contents");
      }
      ++checked;
    }
  }
  const auto b13o1 = scheduler::run_cascade(testing::small_config(13, 1, 5), "count", {1, 1}).trace.iterations();
  const auto b13o5 = scheduler::run_cascade(testing::small_config(13, 5, 5), "count", {1, 1}).trace.iterations();
  o.require(b13o1 == 17, "B=13 o=1 -> 17");
  o.require(b13o5 == 65, "B=13 o=5 -> 65");
  o.detail << checked << " (o,B) pairs; B=13: o=1 " << b13o1 << ", o=5 " << b13o5;
  return o;
}

Outcome worker_determinism() {
  Outcome o;
  int runs = 0;
  for (auto mode : {core::AttentionMode::causal, core::AttentionMode::bidirectional}) {
    for (int off : {1, 2, 5}) {
      struct Result {
        std::vector<core::Matrix> outputs;
        std::vector<std::vector<kvpool::PoolTag>> tags;
        std::vector<int> emission_order;
        std::vector<denoiser::BlockKV> final_pool;
      };
      auto collect = [&](int g) {
        auto cfg = testing::small_config(13, off, g);
        cfg.attention_mode = mode;
        scheduler::CascadeEngine engine(cfg, "determinism", {4242, 99});
        Result r;
        while (!engine.done()) {
          const auto& ev = engine.step();
          r.tags.push_back(ev.pool);
          if (ev.emitted) r.emission_order.push_back(ev.emitted->block);
        }
        r.outputs = engine.output_blocks();
        for (const auto& kv : engine.pool().entries()) r.final_pool.push_back(*kv);
        ++runs;
        return r;
      };
      const auto base = collect(1);
      for (int g : {2, 5}) {
        const auto other = collect(g);
        o.require(other.outputs == base.outputs, "latents");
        o.require(other.tags == base.tags, "KV tags");
        o.require(other.emission_order == base.emission_order, "emission order");
        o.require(other.final_pool == base.final_pool, "pool KV values");
      }
    }
  }
  o.detail << runs << " runs over G in {1,2,5}, both attention modes, o in {1,2,5}";
  return o;
}

Outcome speedup_shape() {
  Outcome o;
  const auto cfg = testing::uniform_cost(testing::small_config(13, 1, 5), 1.0);
  const auto report = executor::speedup_report(cfg, 40, {5});
  const double s = report.rows.front().modeled_speedup;
  o.require(std::abs(s - 200.0 / 44.0) <= kSpeedupTol, "modeled speedup 200/44");
  o.require(s < 5.0, "sub-linear vs G=5");

  double with_comm = 0.0, with_decode = 0.0;
  {
    auto c = cfg;
    c.cost.comm_base = 1e-3;
    with_comm = executor::speedup_report(c, 40, {5}).rows.front().modeled_speedup;
    c = cfg;
    c.cost.decode = 1e-3;
    with_decode = executor::speedup_report(c, 40, {5}).rows.front().modeled_speedup;
  }
  o.require(with_comm < s, "comm cost reduces speedup");
  o.require(with_decode < s, "decode cost reduces speedup");

  auto seq = cfg;
  seq.offset = 5;
  seq.workers = 1;
  const double seq_fps = metrics::streaming_fps(scheduler::run_cascade(seq, "stream", {1, 1}).trace);
  const double cas_fps = metrics::streaming_fps(scheduler::run_cascade(cfg, "stream", {1, 1}).trace);
  const double ratio = cas_fps / seq_fps;
  o.require(ratio == 5.0, "streaming fps ratio == 5");
  o.detail << "modeled=" << s << " (200/44=" << 200.0 / 44.0 << ") comm=" << with_comm << " decode=" << with_decode
           << " streaming ratio=" << ratio;
  return o;
}

Outcome window_sink_invariants() {
  Outcome o;
  testing::Rng rng(777);
  long long checks = 0;
  for (int run = 0; run < 1000; ++run) {
    auto cfg = testing::small_config(testing::uniform_int(rng, 1, 30), testing::uniform_int(rng, 1, 5),
                                     testing::uniform_int(rng, 1, 5));
    cfg.model = kTinyModel;
    cfg.D = 4;
    cfg.Dc = 4;
    cfg.sink_blocks = testing::uniform_int(rng, 0, 1);
    cfg.W = testing::uniform_int(rng, std::max(1, cfg.cascade_width() - cfg.sink_blocks), 9);
    cfg.attention_mode = run % 2 ? core::AttentionMode::causal : core::AttentionMode::bidirectional;

    scheduler::CascadeEngine engine(cfg, "pool", {static_cast<std::uint64_t>(run), 3});
    std::vector<int> retired;
    bool sink_inserted = false;
    while (!engine.done()) {
      const auto& ev = engine.step();
      for (const auto& e : ev.entries) {
        if (e.pass == engine.schedule().cache_pass()) retired.push_back(e.block);
      }
      const auto& pool = engine.pool();
      o.require(pool.non_sink_count() <= cfg.W, "non-sink count <= W");

      // Oldest-first eviction: the pool holds the sink plus the W newest retired blocks.
      std::vector<int> expected;
      const bool sink = cfg.sink_blocks == 1 && !retired.empty() && retired.front() == 0;
      if (sink) expected.push_back(0);
      std::vector<int> rest(retired.begin() + (sink ? 1 : 0), retired.end());
      const std::size_t keep = std::min(rest.size(), static_cast<std::size_t>(cfg.W));
      expected.insert(expected.end(), rest.end() - static_cast<std::ptrdiff_t>(keep), rest.end());
      o.require(pool.blocks() == expected, "eviction order");

      sink_inserted = sink_inserted || sink;
      if (sink_inserted) {
        for (const auto& b : engine.state().in_flight) {
          const auto vis = pool.visible_set(b.block_index);
          o.require(!vis.empty() && vis.front()->block_index == 0, "sink visible");
          ++checks;
        }
        for (const auto& tag : ev.pool) o.require(tag.block_index != 0 || tag.sink, "sink tagged");
      }
      ++checks;
    }
  }
  o.detail << "1000 runs, " << checks << " pool checks";
  return o;
}

Outcome recache_spike() {
  Outcome o;
  const auto cfg = testing::small_config(13, 1, 5);  // W=7, sink=1, default affine costs
  const scheduler::Seeds seeds{31, 32};
  const auto plain = scheduler::run_cascade(cfg, "a quiet lake", seeds);
  const auto recache =
      interactive::run_interactive(cfg, "a quiet lake", seeds, {{8, "a thunderstorm", core::SwitchMode::recache}});
  const auto cascade =
      interactive::run_interactive(cfg, "a quiet lake", seeds, {{8, "a thunderstorm", core::SwitchMode::cascade}});

  o.require(recache.switches.size() == 1 && recache.switches[0].extra_passes == 7, "recache extra passes == 7");
  o.require(cascade.switches.size() == 1 && cascade.switches[0].extra_passes == 0, "cascade extra passes == 0");

  const auto fps = metrics::instantaneous_fps(recache.trace);
  auto lowest = std::min_element(fps.begin(), fps.end(), [](const auto& a, const auto& b) { return a.fps < b.fps; });
  const auto ties = std::count_if(fps.begin(), fps.end(), [&](const auto& p) { return p.fps == lowest->fps; });
  o.require(lowest->block == 8 && ties == 1, "unique FPS minimum at block 8");
  o.require(metrics::instantaneous_fps(cascade.trace) == metrics::instantaneous_fps(plain.trace),
            "cascade FPS series equals no-switch");
  o.detail << "recache extra=" << (recache.switches.empty() ? -1 : recache.switches[0].extra_passes)
           << " min fps block=" << lowest->block << " (" << lowest->fps << ") cascade extra="
           << (cascade.switches.empty() ? -1 : cascade.switches[0].extra_passes);
  return o;
}

Outcome causal_information() {
  Outcome o;
  testing::Rng rng(4711);
  int bidirectional_changes = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const scheduler::Seeds seeds{rng(), rng()};
    const int j = testing::uniform_int(rng, 0, 8);
    for (auto mode : {core::AttentionMode::causal, core::AttentionMode::bidirectional}) {
      auto cfg = testing::small_config(10, 1, 5);
      cfg.attention_mode = mode;
      const auto full = scheduler::run_cascade(cfg, "truncation", seeds);
      auto cut = cfg;
      cut.total_frames = (j + 1) * cfg.S;
      const auto part = scheduler::run_cascade(cut, "truncation", seeds);
      bool same = true;
      for (int b = 0; b <= j; ++b) same = same && part.outputs[static_cast<std::size_t>(b)] == full.outputs[static_cast<std::size_t>(b)];
      if (mode == core::AttentionMode::causal) {
        o.require(same, "causal blocks <= j unchanged");
      } else {
        o.require(!same, "bidirectional earlier block changes");
        bidirectional_changes += same ? 0 : 1;
      }
    }
  }
  o.detail << "50 seeds; bidirectional truncations that changed an earlier block: " << bidirectional_changes << "/50";
  return o;
}

Outcome unit_properties() {
  Outcome o;
  testing::Rng rng(99);
  core::NoiseStream ns(rng(), 16);
  for (int i = 0; i < 200; ++i) {
    const auto x0 = ns.draw_block(i, 0, 0, 3);
    const auto eps = ns.draw_block(i, 1, 0, 3);
    o.require(denoiser::renoise(x0, eps, 0.0) == x0, "renoise t=0 identity");
    o.require(denoiser::renoise(x0, eps, 1000.0) == eps, "renoise t=1000 identity");
  }

  for (int trial = 0; trial < 500; ++trial) {
    const int S = testing::uniform_int(rng, 1, 4);
    const auto mode = trial % 2 ? core::AttentionMode::causal : core::AttentionMode::bidirectional;
    std::set<int> pool_set, batch_set;
    const int pool_n = testing::uniform_int(rng, 0, 8);
    while (static_cast<int>(pool_set.size()) < pool_n) pool_set.insert(testing::uniform_int(rng, 0, 40));
    const int width = testing::uniform_int(rng, 1, 5);
    while (static_cast<int>(batch_set.size()) < width) {
      const int b = testing::uniform_int(rng, 0, 45);
      if (!pool_set.count(b)) batch_set.insert(b);
    }
    std::vector<denoiser::MaskBlock> batch;
    for (int b : batch_set) batch.push_back({b, 0.0});
    const std::vector<int> pool(pool_set.begin(), pool_set.end());
    const auto m = denoiser::build_mask(batch, pool, mode, S);
    std::vector<int> cols = pool;
    cols.insert(cols.end(), batch_set.begin(), batch_set.end());
    bool sound = m.key_blocks() == cols;
    for (std::size_t q = 0; sound && q < m.rows(); ++q) {
      for (std::size_t k = 0; k < m.cols(); ++k) {
        const int qb = batch[q / static_cast<std::size_t>(S)].block_index;
        const int kb = cols[k / static_cast<std::size_t>(S)];
        sound = sound && m.visible(q, k) == (mode == core::AttentionMode::bidirectional || kb <= qb);
      }
    }
    o.require(sound, "mask soundness");
  }

  struct Key {
    int b, p, f;
  };
  std::vector<Key> keys;
  for (int i = 0; i < 2000; ++i) {
    keys.push_back({testing::uniform_int(rng, 0, 40), testing::uniform_int(rng, 0, 4), testing::uniform_int(rng, 0, 120)});
  }
  const std::uint64_t seed = rng();
  core::NoiseStream forward_stream(seed, 16);
  std::vector<std::vector<double>> first;
  for (const auto& k : keys) first.push_back(forward_stream.draw(k.b, k.p, k.f));
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  core::NoiseStream shuffled(seed, 16);
  bool stable = true;
  for (auto i : order) stable = stable && shuffled.draw(keys[i].b, keys[i].p, keys[i].f) == first[i];
  o.require(stable, "noise order independence");

  o.detail << "200 renoise pairs, 500 masks, 2000 shuffled noise draws";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence (o=P vs sequential reference)", oracle_equivalence},
      {"iteration counts vs schedule enumerator", iteration_counts},
      {"worker determinism G in {1,2,5}", worker_determinism},
      {"modeled speedup shape and streaming FPS ratio", speedup_shape},
      {"window/sink pool invariants (1000 runs)", window_sink_invariants},
      {"recache spike at switch block 8", recache_spike},
      {"causal-information truncation property", causal_information},
      {"renoise/mask/noise-stream properties", unit_properties},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome result;
    try {
      result = check();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail << "exception: " << e.what();
    }
    failed += result.pass ? 0 : 1;
    std::printf("%s  %s  [%s]\n", result.pass ? "PASS" : "FAIL", name.c_str(), result.detail.str().c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
