#ifndef SPATIALRL_MATCHING_HPP_
#define SPATIALRL_MATCHING_HPP_

#include <span>
#include <vector>

#include "spatialrl/features.hpp"

namespace spatialrl {

struct MatchPair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  int distance = 0;  // Hamming

  bool operator==(const MatchPair&) const = default;
};

struct MatchConfig {
  // Lowe ratio: accept when best < ratio * second best.
  double ratio = 0.75;
  // Keep a match only if a's best in b also has a as its best in a.
  bool cross_check = true;
};

// Brute-force Hamming matching. Output is ordered by index_a. With a single
// candidate in b the ratio test has no second neighbor and passes.
std::vector<MatchPair> match_descriptors(std::span<const Descriptor> a,
                                         std::span<const Descriptor> b,
                                         const MatchConfig& config = {});

}  // namespace spatialrl

#endif  // SPATIALRL_MATCHING_HPP_
