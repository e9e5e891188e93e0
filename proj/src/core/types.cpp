#include "cascade/core/types.h"

#include "cascade/core/errors.h"

namespace cascade::core {

LatentFrame Block::frame(int i) const {
  auto r = latents.row(static_cast<std::size_t>(i));
  return LatentFrame{first_frame() + i, {r.begin(), r.end()}, noise_level};
}

const char* to_string(AttentionMode mode) {
  return mode == AttentionMode::causal ? "causal" : "bidirectional";
}

const char* to_string(SwitchMode mode) {
  return mode == SwitchMode::cascade ? "cascade" : "recache";
}

AttentionMode parse_attention_mode(const std::string& text) {
  if (text == "causal") return AttentionMode::causal;
  if (text == "bidirectional") return AttentionMode::bidirectional;
  throw InvalidInput("unknown attention mode '" + text + "'");
}

SwitchMode parse_switch_mode(const std::string& text) {
  if (text == "cascade") return SwitchMode::cascade;
  if (text == "recache") return SwitchMode::recache;
  throw InvalidInput("unknown switch mode '" + text + "'");
}

}  // namespace cascade::core
