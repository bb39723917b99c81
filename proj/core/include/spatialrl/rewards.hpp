#ifndef SPATIALRL_REWARDS_HPP_
#define SPATIALRL_REWARDS_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/model_client.hpp"
#include "spatialrl/question.hpp"

namespace spatialrl {

// Labels recognized when the option set is not known.
inline constexpr std::string_view kDefaultLabels = "ABCDEFGH";

struct RolloutSample {
  std::string output;
  std::optional<std::string> think;   // reasoning text
  std::optional<std::string> answer;  // option label
  bool format_ok = false;
};

// First option label in `text`: either a standalone capital letter from
// `labels` (bounded by non-alphanumerics) or the letter in "answer is x".
// The earliest position wins.
std::optional<std::string> extract_option_label(std::string_view text,
                                                std::string_view labels = kDefaultLabels);

// Well formed means: optional whitespace, one <think>...</think> block, one
// <answer>...</answer> block, optional whitespace, no other tags, and an
// option label inside the answer block.
RolloutSample parse_output(std::string_view output, std::string_view labels = kDefaultLabels);

int format_reward(const RolloutSample& sample);
int accuracy_reward(const RolloutSample& sample, std::string_view ground_truth);

struct ConsistencyConfig {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
};

// Question with options and the reasoning only; no frames, no transcript.
std::string consistency_prompt(const Question& question, std::string_view reasoning);

// 1 iff the reference model, shown only the question and the sample's
// reasoning, arrives at the same correct label. Samples with a wrong answer
// score 0 without contacting the client. Throws ConsistencyUnavailable when
// the client fails.
int consistency_reward(const RolloutSample& sample, const Question& question,
                       std::string_view ground_truth, ModelClient& reference,
                       const ConsistencyConfig& config = {});

struct RewardWeights {
  double format = 0.0;
  double accuracy = 0.0;
  double consistency = 0.0;
  int stage = 1;

  // Throws std::invalid_argument for negative or all-zero weights or a
  // stage outside 1..3.
  void validate() const;
  bool operator==(const RewardWeights&) const = default;
};

// Epochs 1-2 → 7:3:0, epochs 3-4 → 3:7:0, later epochs → 1:7:2.
RewardWeights schedule_weights(int epoch);

// Stage table: stage i applies from first_epoch[i] until the next entry.
struct WeightSchedule {
  struct Entry {
    int first_epoch = 1;
    RewardWeights weights;
  };
  std::vector<Entry> entries;

  // The default three-stage table used by schedule_weights.
  static WeightSchedule standard();
  // Throws std::invalid_argument unless the first entry starts at epoch 1,
  // first epochs strictly increase and every weight set is valid.
  void validate() const;
  RewardWeights weights(int epoch) const;
};

double total_reward(int format, int accuracy, int consistency, const RewardWeights& weights);

struct RewardBreakdown {
  int format = 0;
  int accuracy = 0;
  int consistency = 0;
  double total = 0.0;
  RewardWeights weights;
  // The reference client failed; consistency was scored 0.
  bool consistency_unavailable = false;
  std::string note;
};

// Scores one output. Without a reference client the consistency term is 0.
// ConsistencyUnavailable is absorbed: r''' = 0 and the flag is set.
RewardBreakdown score_rollout(const RolloutSample& sample, const Question& question,
                              const RewardWeights& weights, ModelClient* reference,
                              const ConsistencyConfig& config = {});

// One JSON line for the training log.
std::string reward_log_record(std::string_view sample_id, const RewardBreakdown& breakdown);

}  // namespace spatialrl

#endif  // SPATIALRL_REWARDS_HPP_
