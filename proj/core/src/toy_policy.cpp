#include "spatialrl/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

ToyPolicy::ToyPolicy(std::size_t contexts, int vocab)
    : contexts_(contexts), vocab_(vocab),
      theta_(contexts * static_cast<std::size_t>(std::max(vocab, 0)), 0.0) {
  if (contexts == 0 || vocab <= 0) throw std::invalid_argument("empty toy policy");
}

std::vector<double> ToyPolicy::distribution(std::size_t context, int first, int count,
                                            double temperature) const {
  if (context >= contexts_ || first < 0 || count <= 0 || first + count > vocab_) {
    throw std::out_of_range("token range outside the policy table");
  }
  std::vector<double> p(static_cast<std::size_t>(count));
  double hi = -INFINITY;
  for (int k = 0; k < count; ++k) {
    p[k] = logit(context, first + k) / temperature;
    hi = std::max(hi, p[k]);
  }
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

double ToyPolicy::log_prob(std::size_t context, int token, int first, int count,
                           double temperature) const {
  if (token < first || token >= first + count) {
    throw std::out_of_range("token outside its sampling range");
  }
  double hi = -INFINITY;
  for (int k = 0; k < count; ++k) hi = std::max(hi, logit(context, first + k) / temperature);
  double sum = 0.0;
  for (int k = 0; k < count; ++k) sum += std::exp(logit(context, first + k) / temperature - hi);
  return logit(context, token) / temperature - hi - std::log(sum);
}

bool ToyPolicy::all_finite() const {
  return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t ToyPolicy::hash_context(std::initializer_list<std::uint64_t> parts,
                                    std::size_t contexts) {
  std::uint64_t h = 0x84222325CBF29CE4ULL;
  for (std::uint64_t p : parts) {
    h ^= p + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
    h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
    h ^= h >> 31;
  }
  return static_cast<std::size_t>(h % contexts);
}

void refresh_theta_log_probs(const ToyPolicy& policy, RolloutGroup& group, double temperature) {
  for (auto& m : group.members) {
    for (auto& s : m.steps) s.logp_theta = policy.log_prob(s, temperature);
  }
}

namespace {

// d/dx min(e^x A, clip(e^x) A) at x = log ratio.
double surrogate_slope(double log_ratio, double advantage, double eps) {
  if (std::abs(log_ratio) > kLogRatioClamp) return 0.0;
  const double rho = std::exp(log_ratio);
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  return rho * advantage <= clipped * advantage ? rho * advantage : 0.0;
}

// d/d(logp_theta) of kl_penalty(logp_theta, logp_ref).
double kl_slope(double logp_theta, double logp_ref) {
  const double d = logp_ref - logp_theta;
  if (std::abs(d) > kLogRatioClamp) return 0.0;
  return -std::expm1(d);
}

}  // namespace

std::vector<double> policy_gradient(const ToyPolicy& policy, const RolloutGroup& group,
                                    const GrpoConfig& config) {
  if (static_cast<int>(group.members.size()) != config.group_size) {
    throw MalformedGroup("group size does not match configuration");
  }
  if (!group.advantages_ready) throw MalformedGroup("group advantages are not populated");
  std::vector<double> grad(policy.parameters().size(), 0.0);
  const double inv_g = 1.0 / static_cast<double>(group.members.size());
  const double inv_t = 1.0 / config.temperature;
  const auto vocab = static_cast<std::size_t>(policy.vocab());

  for (const auto& m : group.members) {
    if (m.steps.empty()) continue;
    const double inv_n = 1.0 / static_cast<double>(m.steps.size());
    double sequence_slope = 0.0;
    if (config.ratio_level == RatioLevel::kSequence) {
      double log_ratio = 0.0;
      for (const auto& s : m.steps) log_ratio += s.logp_theta - s.logp_old;
      sequence_slope = surrogate_slope(log_ratio, m.advantage, config.clip_epsilon);
    }
    for (const auto& s : m.steps) {
      // Weight on d logp_theta(token) for this step.
      double w = -config.kl_coef * inv_n * kl_slope(s.logp_theta, s.logp_ref);
      if (config.ratio_level == RatioLevel::kSequence) {
        w += sequence_slope;
      } else {
        w += inv_n * surrogate_slope(s.logp_theta - s.logp_old, m.advantage, config.clip_epsilon);
      }
      w *= inv_g;
      if (w == 0.0) continue;
      const auto p = policy.distribution(s.context, s.first_token, s.token_count,
                                         config.temperature);
      double* row = grad.data() + s.context * vocab + static_cast<std::size_t>(s.first_token);
      for (int k = 0; k < s.token_count; ++k) {
        const double indicator = (s.first_token + k == s.token) ? 1.0 : 0.0;
        row[k] += w * (indicator - p[k]) * inv_t;
      }
    }
  }
  return grad;
}

}  // namespace spatialrl
