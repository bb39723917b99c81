#ifndef SPATIALRL_TOY_POLICY_HPP_
#define SPATIALRL_TOY_POLICY_HPP_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "spatialrl/grpo.hpp"

namespace spatialrl {

// Tabular autoregressive softmax policy: one row of logits per hashed
// context. Each sampling step restricts the softmax to a contiguous token
// range, so a row can serve different phases of the output.
class ToyPolicy {
 public:
  ToyPolicy(std::size_t contexts, int vocab);

  std::size_t contexts() const noexcept { return contexts_; }
  int vocab() const noexcept { return vocab_; }

  std::span<double> parameters() noexcept { return theta_; }
  std::span<const double> parameters() const noexcept { return theta_; }
  double& logit(std::size_t context, int token) {
    return theta_[context * static_cast<std::size_t>(vocab_) + static_cast<std::size_t>(token)];
  }
  double logit(std::size_t context, int token) const {
    return theta_[context * static_cast<std::size_t>(vocab_) + static_cast<std::size_t>(token)];
  }

  // softmax(logits / temperature) over [first, first + count).
  std::vector<double> distribution(std::size_t context, int first, int count,
                                   double temperature) const;
  double log_prob(std::size_t context, int token, int first, int count,
                  double temperature) const;
  double log_prob(const TokenStep& step, double temperature) const {
    return log_prob(step.context, step.token, step.first_token, step.token_count, temperature);
  }

  bool all_finite() const;

  // Row index for a tuple of context features.
  static std::size_t hash_context(std::initializer_list<std::uint64_t> parts,
                                  std::size_t contexts);

 private:
  std::size_t contexts_;
  int vocab_;
  std::vector<double> theta_;
};

// Recomputes TokenStep::logp_theta for every member under `policy`.
void refresh_theta_log_probs(const ToyPolicy& policy, RolloutGroup& group, double temperature);

// Gradient of grpo_objective(group) with respect to every logit, as a dense
// vector laid out like ToyPolicy::parameters(). Assumes the group's
// logp_theta values come from `policy`.
std::vector<double> policy_gradient(const ToyPolicy& policy, const RolloutGroup& group,
                                    const GrpoConfig& config);

}  // namespace spatialrl

#endif  // SPATIALRL_TOY_POLICY_HPP_
