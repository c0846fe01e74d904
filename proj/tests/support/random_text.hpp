#pragma once

#include <random>
#include <string>
#include <vector>

namespace testing_support {

// Random token sequence over a small alphabet so overlaps are common.
inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                                              std::size_t alphabet = 6) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, alphabet - 1);
  std::vector<std::string> out(len(rng));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + sym(rng)));
  return out;
}

}  // namespace testing_support
