#include "spatialrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

void GrpoConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("group_size must be at least 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("clip_epsilon must lie in (0, 1)");
  }
  if (!(kl_coef >= 0.0)) throw std::invalid_argument("kl_coef must be nonnegative");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be nonnegative");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (max_response_length <= 0) throw std::invalid_argument("max_response_length must be positive");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (!(advantage_delta > 0.0)) throw std::invalid_argument("advantage_delta must be positive");
  if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("max_grad_norm must be nonnegative");
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double delta) {
  if (rewards.size() < 2) throw std::invalid_argument("need at least two rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (!(std >= delta)) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std;
  return out;
}

double kl_penalty(double logp_theta, double logp_ref) {
  const double d = std::clamp(logp_ref - logp_theta, -kLogRatioClamp, kLogRatioClamp);
  // expm1 keeps precision when the log-probabilities nearly agree.
  return std::max(0.0, std::expm1(d) - d);
}

void RolloutGroup::assign_rewards(std::span<const double> rewards) {
  if (rewards.size() != members.size()) {
    throw MalformedGroup("reward count does not match member count");
  }
  for (std::size_t i = 0; i < members.size(); ++i) members[i].reward = rewards[i];
  rewarded = true;
  advantages_ready = false;
}

void RolloutGroup::compute_advantages(double delta) {
  if (!rewarded) throw MalformedGroup("advantages requested before rewards");
  std::vector<double> r;
  r.reserve(members.size());
  for (const auto& m : members) r.push_back(m.reward);
  const auto a = normalize_advantages(r, delta);
  for (std::size_t i = 0; i < members.size(); ++i) members[i].advantage = a[i];
  advantages_ready = true;
}

namespace {

double clipped_surrogate(double log_ratio, double advantage, double eps) {
  const double rho = std::exp(std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp));
  return std::min(rho * advantage, std::clamp(rho, 1.0 - eps, 1.0 + eps) * advantage);
}

}  // namespace

double grpo_objective(const RolloutGroup& group, const GrpoConfig& config) {
  if (static_cast<int>(group.members.size()) != config.group_size) {
    throw MalformedGroup("group has " + std::to_string(group.members.size()) +
                         " members, expected " + std::to_string(config.group_size));
  }
  if (!group.advantages_ready) throw MalformedGroup("group advantages are not populated");
  double total = 0.0;
  for (const auto& m : group.members) {
    if (m.steps.empty()) continue;
    const double n = static_cast<double>(m.steps.size());
    double kl = 0.0;
    for (const auto& s : m.steps) kl += kl_penalty(s.logp_theta, s.logp_ref);
    kl /= n;
    double surrogate = 0.0;
    if (config.ratio_level == RatioLevel::kSequence) {
      double log_ratio = 0.0;
      for (const auto& s : m.steps) log_ratio += s.logp_theta - s.logp_old;
      surrogate = clipped_surrogate(log_ratio, m.advantage, config.clip_epsilon);
    } else {
      for (const auto& s : m.steps) {
        surrogate += clipped_surrogate(s.logp_theta - s.logp_old, m.advantage,
                                       config.clip_epsilon);
      }
      surrogate /= n;
    }
    total += surrogate - config.kl_coef * kl;
  }
  return total / static_cast<double>(group.members.size());
}

}  // namespace spatialrl
