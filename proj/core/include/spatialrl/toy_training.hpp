#ifndef SPATIALRL_TOY_TRAINING_HPP_
#define SPATIALRL_TOY_TRAINING_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spatialrl/grpo.hpp"
#include "spatialrl/model_client.hpp"
#include "spatialrl/question.hpp"
#include "spatialrl/rewards.hpp"
#include "spatialrl/toy_policy.hpp"

namespace spatialrl {

struct ToyTaskConfig {
  int num_options = 3;
  // Each question shows one pattern (a, b) with a, b in [0, num_options);
  // the correct option is (a + 2b) mod num_options.
  int num_questions = 120;
  int questions_per_step = 3;
  int max_think_tokens = 8;
  std::uint64_t seed = 7;
};

// Templated multiple-choice task whose answer is computable from the
// question text. Outputs are token sequences
//   cue* </think> answer
// rendered as "<think>cue-A cue-C</think> <answer>A</answer>"; a think block
// that hits max_think_tokens without closing is malformed.
class SyntheticTask {
 public:
  struct Item {
    Question question;
    int pattern = 0;
    int correct = 0;
  };

  explicit SyntheticTask(ToyTaskConfig config);

  const ToyTaskConfig& config() const noexcept { return config_; }
  const std::vector<Item>& items() const noexcept { return items_; }
  int num_patterns() const noexcept { return config_.num_options * config_.num_options; }

  int vocab() const noexcept { return 2 * config_.num_options + 1; }
  int cue_token(int option) const noexcept { return option; }
  int end_think_token() const noexcept { return config_.num_options; }
  int answer_token(int option) const noexcept { return config_.num_options + 1 + option; }

  std::size_t think_context(int pattern, int position, int previous_token,
                            std::size_t contexts) const;
  std::size_t answer_context(int pattern, std::size_t contexts) const;

  std::string render(std::span<const int> tokens) const;

  // Stand-in reference model: answers with the option whose cue appears
  // most often in the reasoning, or abstains on a tie.
  ModelClient& reference() noexcept { return *reference_; }

 private:
  ToyTaskConfig config_;
  std::vector<Item> items_;
  std::unique_ptr<ModelClient> reference_;
};

// Exact expectations under the current policy, averaged over the task's
// questions.
struct PolicyMetrics {
  double format = 0.0;
  double accuracy = 0.0;
  double consistency = 0.0;
  double response_length = 0.0;
};

PolicyMetrics evaluate_policy(const SyntheticTask& task, const ToyPolicy& policy,
                              double temperature);

struct TrainingStep {
  int step = 0;
  int epoch = 0;
  RewardWeights weights;
  // Means over the sampled rollouts of this step.
  double mean_format = 0.0;
  double mean_accuracy = 0.0;
  double mean_consistency = 0.0;
  double consistency_accuracy_ratio = 0.0;
  double mean_response_length = 0.0;
  double objective = 0.0;
  // Exact values for the policy that generated this step's rollouts.
  PolicyMetrics expected;
  // max |log pi_theta - log pi_ref| over every context the task can reach.
  double max_logp_drift = 0.0;
};

struct TrainingTrace {
  std::vector<TrainingStep> steps;
  std::size_t consistency_unavailable = 0;

  // One JSON object per step.
  std::string to_jsonl() const;
};

struct TrainOptions {
  bool staged = true;  // schedule.weights(epoch); otherwise fixed_weights
  WeightSchedule schedule = WeightSchedule::standard();
  RewardWeights fixed_weights{1.0, 7.0, 2.0, 3};
  // Overrides the task's rule-based reference for the consistency reward.
  ModelClient* reference = nullptr;
};

// GRPO on the synthetic task: per step, sample G outputs for each question
// in the batch from a snapshot of the policy, score them, normalize
// advantages per group, and take one gradient-ascent step on the mean
// objective. pi_ref is the policy as passed in. Throws TrainingDiverged if
// a parameter becomes non-finite.
TrainingTrace train_toy(SyntheticTask& task, ToyPolicy& policy, const GrpoConfig& config,
                        const TrainOptions& options = {});

// Policy sized for the task (1024 hashed contexts).
ToyPolicy make_toy_policy(const SyntheticTask& task);

}  // namespace spatialrl

#endif  // SPATIALRL_TOY_TRAINING_HPP_
