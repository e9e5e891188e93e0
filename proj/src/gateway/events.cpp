#include "cascade/gateway/events.h"

#include <bit>
#include <cstring>

#include <httplib.h>

#include "cascade/core/errors.h"
#include "cascade/executor/executor.h"

namespace cascade::gateway {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "pixel payloads assume a little-endian host");

EventProjector::EventProjector(core::CascadeConfig config) : config_(std::move(config)) {}

json EventProjector::stamp(json event) {
  event["seq"] = seq_++;
  return event;
}

std::vector<json> EventProjector::project(const metrics::TraceEvent& ev) {
  std::vector<json> out;
  for (const auto& s : ev.switch_events) {
    json j = metrics::to_json(s);
    j["type"] = "switch";
    j["iteration"] = ev.iteration;
    out.push_back(stamp(std::move(j)));
  }

  json entries = json::array();
  for (const auto& e : ev.entries) {
    entries.push_back({{"block", e.block}, {"pass", e.pass}, {"noise_level", e.noise_level}, {"worker", e.worker},
                       {"conditioning_id", e.conditioning_id}});
  }
  out.push_back(stamp({{"type", "iteration"},
                       {"iteration", ev.iteration},
                       {"entries", entries},
                       {"modeled_time", ev.modeled_time},
                       {"modeled_end", ev.modeled_end},
                       {"stall_time", ev.stall_time},
                       {"pool_blocks", ev.pool_blocks},
                       {"pool_frames", ev.pool_frames}}));
  ++iterations_;

  if (ev.emitted) {
    const auto& em = *ev.emitted;
    const auto pixels = executor::decode_block(em.latents, config_);
    const double elapsed = em.emit_time - last_emit_;
    last_emit_ = em.emit_time;
    out.push_back(stamp({{"type", "block_emitted"},
                         {"index", em.block},
                         {"video_frames", em.video_frames},
                         {"pixel_dim", pixels.cols()},
                         {"pixels", encode_pixels(pixels)},
                         {"emit_time", em.emit_time},
                         {"fps", em.video_frames / elapsed}}));
    ++emitted_;
  }
  return out;
}

json EventProjector::finish(const std::string& status, const std::string& error) {
  json j{{"type", "session_done"}, {"status", status}, {"blocks", emitted_}, {"iterations", iterations_}};
  if (!error.empty()) j["error"] = error;
  return stamp(std::move(j));
}

std::vector<json> project_trace(const core::CascadeConfig& config, const metrics::Trace& trace) {
  EventProjector p(config);
  std::vector<json> out;
  for (const auto& ev : trace.events) {
    for (auto& j : p.project(ev)) out.push_back(std::move(j));
  }
  out.push_back(p.finish("done"));
  return out;
}

std::string encode_pixels(const core::Matrix& pixels) {
  std::string bytes(pixels.size() * sizeof(float), '\0');
  std::size_t at = 0;
  for (double v : pixels.data()) {
    const auto f = static_cast<float>(v);
    std::memcpy(bytes.data() + at, &f, sizeof f);
    at += sizeof f;
  }
  return httplib::detail::base64_encode(bytes);
}

core::Matrix decode_pixels(const std::string& base64, std::size_t rows, std::size_t cols) {
  static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string bytes;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : base64) {
    if (c == '=') break;
    const auto pos = alphabet.find(c);
    if (pos == std::string::npos) throw core::InvalidInput("bad base64 payload");
    buffer = (buffer << 6) | static_cast<unsigned>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      bytes.push_back(static_cast<char>((buffer >> bits) & 0xff));
    }
  }
  if (bytes.size() != rows * cols * sizeof(float)) throw core::InvalidInput("pixel payload has the wrong size");
  core::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof f, sizeof f);
    m.data()[i] = f;
  }
  return m;
}

}  // namespace cascade::gateway
