#include "spatialrl/matching.hpp"

#include <limits>
#include <stdexcept>

namespace spatialrl {

namespace {

struct Nearest {
  std::size_t index = 0;
  int best = std::numeric_limits<int>::max();
  int second = std::numeric_limits<int>::max();
};

// Ties on the best distance resolve to the lowest index; the tied
// candidate becomes the second best.
Nearest nearest(const Descriptor& query, std::span<const Descriptor> pool) {
  Nearest n;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const int d = hamming_distance(query, pool[j]);
    if (d < n.best) {
      n.second = n.best;
      n.best = d;
      n.index = j;
    } else if (d < n.second) {
      n.second = d;
    }
  }
  return n;
}

}  // namespace

std::vector<MatchPair> match_descriptors(std::span<const Descriptor> a,
                                         std::span<const Descriptor> b,
                                         const MatchConfig& config) {
  if (!(config.ratio > 0.0 && config.ratio <= 1.0)) {
    throw std::invalid_argument("match ratio must lie in (0, 1]");
  }
  std::vector<MatchPair> out;
  if (a.empty() || b.empty()) return out;

  std::vector<std::size_t> reverse;
  if (config.cross_check) {
    reverse.resize(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) reverse[j] = nearest(b[j], a).index;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Nearest n = nearest(a[i], b);
    if (b.size() > 1 &&
        !(static_cast<double>(n.best) < config.ratio * n.second)) {
      continue;
    }
    if (config.cross_check && reverse[n.index] != i) continue;
    out.push_back({i, n.index, n.best});
  }
  return out;
}

}  // namespace spatialrl
