#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cascade::core {

// Text-prompt conditioning. The embedding is a seeded hash expansion of the
// prompt text, normalized to unit length.
struct Conditioning {
  std::string prompt;
  std::vector<double> embedding;
  std::string id;

  bool operator==(const Conditioning&) const = default;
};

Conditioning embed_prompt(std::string_view prompt, int dim);

}  // namespace cascade::core
