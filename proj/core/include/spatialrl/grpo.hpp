#ifndef SPATIALRL_GRPO_HPP_
#define SPATIALRL_GRPO_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spatialrl {

enum class RatioLevel {
  kSequence,  // one importance ratio per output, KL averaged over its tokens
  kToken,     // per-token ratios, averaged over the output
};

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coef = 0.001;
  double learning_rate = 5e-7;
  double temperature = 1.0;
  int max_response_length = 2048;
  int input_length = 6144;  // applies only when driving a real client
  int epochs = 12;
  std::uint64_t seed = 0;
  // Groups whose reward std falls below this get zero advantages.
  double advantage_delta = 1e-8;
  RatioLevel ratio_level = RatioLevel::kSequence;
  // Global gradient-norm cap applied by the trainer; 0 disables it.
  double max_grad_norm = 0.0;

  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

// z-scores with the population standard deviation; all zeros when the std
// is below `delta`. Requires at least two rewards.
std::vector<double> normalize_advantages(std::span<const double> rewards, double delta = 1e-8);

// Bound on |log pi_ref - log pi_theta| inside the KL estimator and the
// importance ratios.
inline constexpr double kLogRatioClamp = 30.0;

// rho - log(rho) - 1 with rho = pi_ref / pi_theta; nonnegative, zero iff the
// log-probabilities agree.
double kl_penalty(double logp_theta, double logp_ref);

// One sampled token. The policy distribution at this step ranges over the
// token ids [first_token, first_token + token_count).
struct TokenStep {
  std::size_t context = 0;
  int token = 0;
  int first_token = 0;
  int token_count = 0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
  double logp_theta = 0.0;
};

struct GroupMember {
  std::string output;
  std::vector<TokenStep> steps;
  double reward = 0.0;
  double advantage = 0.0;
};

// G outputs sampled for one question under pi_old.
struct RolloutGroup {
  std::string question_id;
  std::vector<GroupMember> members;
  bool rewarded = false;
  bool advantages_ready = false;

  void assign_rewards(std::span<const double> rewards);
  void compute_advantages(double delta = 1e-8);
};

// (1/G) sum_i [min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta KL_i].
// Throws MalformedGroup when the member count differs from group_size or
// advantages are missing.
double grpo_objective(const RolloutGroup& group, const GrpoConfig& config);

}  // namespace spatialrl

#endif  // SPATIALRL_GRPO_HPP_
