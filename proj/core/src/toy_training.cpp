#include "spatialrl/toy_training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <stdexcept>

#include "spatialrl/errors.hpp"

namespace spatialrl {

namespace {

constexpr std::size_t kToyContexts = 1024;
constexpr int kNoPrevious = -1;

std::string label_of(int option) { return std::string(1, static_cast<char>('A' + option)); }

// Majority cue among counts, or -1 on a tie or no cues.
int majority(std::span<const int> counts) {
  int best = -1;
  int best_count = 0;
  bool tie = false;
  for (int k = 0; k < static_cast<int>(counts.size()); ++k) {
    if (counts[k] > best_count) {
      best = k;
      best_count = counts[k];
      tie = false;
    } else if (counts[k] == best_count && best_count > 0) {
      tie = true;
    }
  }
  return tie ? -1 : best;
}

class RuleReference : public ModelClient {
 public:
  explicit RuleReference(int options) : options_(options) {}

  std::string complete(const ChatRequest& request) override {
    const std::string text = request.text();
    const std::size_t at = text.rfind("Reasoning:");
    const std::string reasoning = at == std::string::npos ? std::string() : text.substr(at);
    std::vector<int> counts(static_cast<std::size_t>(options_), 0);
    for (int k = 0; k < options_; ++k) {
      const std::string cue = "cue-" + label_of(k);
      for (std::size_t p = reasoning.find(cue); p != std::string::npos;
           p = reasoning.find(cue, p + cue.size())) {
        ++counts[k];
      }
    }
    const int pick = majority(counts);
    return pick < 0 ? "<answer>undecided</answer>" : "<answer>" + label_of(pick) + "</answer>";
  }

  std::string model_id() const override { return "rule-reference"; }

 private:
  int options_;
};

}  // namespace

SyntheticTask::SyntheticTask(ToyTaskConfig config)
    : config_(config), reference_(std::make_unique<RuleReference>(config.num_options)) {
  if (config_.num_options < 2 || config_.num_options > 8) {
    throw std::invalid_argument("synthetic task supports 2 to 8 options");
  }
  if (config_.num_questions <= 0 || config_.questions_per_step <= 0 ||
      config_.max_think_tokens <= 0) {
    throw std::invalid_argument("invalid synthetic task configuration");
  }
  std::mt19937_64 rng(config_.seed);
  const int k = config_.num_options;
  for (int i = 0; i < config_.num_questions; ++i) {
    Item item;
    item.pattern = static_cast<int>(rng() % static_cast<std::uint64_t>(num_patterns()));
    const int a = item.pattern % k;
    const int b = item.pattern / k;
    item.correct = (a + 2 * b) % k;
    Question& q = item.question;
    q.id = "toy-" + std::to_string(i);
    q.video_id = "toy";
    q.text = "Pattern " + std::to_string(a) + "-" + std::to_string(b) +
             ". Which option does the pattern select?";
    for (int o = 0; o < k; ++o) q.options.push_back({label_of(o), "option " + label_of(o)});
    q.ground_truth = label_of(item.correct);
    q.category = TaskCategory::kRelativeDirection;
    q.source = "synthetic";
    items_.push_back(std::move(item));
  }
}

std::size_t SyntheticTask::think_context(int pattern, int position, int previous_token,
                                         std::size_t contexts) const {
  return ToyPolicy::hash_context({0, static_cast<std::uint64_t>(pattern),
                                  static_cast<std::uint64_t>(position),
                                  static_cast<std::uint64_t>(previous_token + 1)},
                                 contexts);
}

std::size_t SyntheticTask::answer_context(int pattern, std::size_t contexts) const {
  return ToyPolicy::hash_context({1, static_cast<std::uint64_t>(pattern)}, contexts);
}

std::string SyntheticTask::render(std::span<const int> tokens) const {
  std::string out = "<think>";
  bool first = true;
  for (int t : tokens) {
    if (t < config_.num_options) {
      if (!first) out.push_back(' ');
      out += "cue-" + label_of(t);
      first = false;
    } else if (t == end_think_token()) {
      out += "</think>";
    } else {
      out += " <answer>" + label_of(t - config_.num_options - 1) + "</answer>";
    }
  }
  return out;
}

ToyPolicy make_toy_policy(const SyntheticTask& task) {
  return ToyPolicy(kToyContexts, task.vocab());
}

PolicyMetrics evaluate_policy(const SyntheticTask& task, const ToyPolicy& policy,
                              double temperature) {
  const int k = task.config().num_options;
  const int max_think = task.config().max_think_tokens;
  const std::size_t rows = policy.contexts();

  // Per pattern: forward pass over (previous token, cue counts) states.
  std::vector<PolicyMetrics> by_pattern(static_cast<std::size_t>(task.num_patterns()));
  for (int pattern = 0; pattern < task.num_patterns(); ++pattern) {
    const int correct = (pattern % k + 2 * (pattern / k)) % k;
    const auto answer = policy.distribution(task.answer_context(pattern, rows),
                                            task.answer_token(0), k, temperature);
    PolicyMetrics m;
    std::map<std::pair<int, std::vector<int>>, double> states;
    states[{kNoPrevious, std::vector<int>(static_cast<std::size_t>(k), 0)}] = 1.0;
    for (int t = 0; t < max_think; ++t) {
      std::map<std::pair<int, std::vector<int>>, double> next;
      for (const auto& [state, prob] : states) {
        const auto p = policy.distribution(task.think_context(pattern, t, state.first, rows),
                                           task.cue_token(0), k + 1, temperature);
        const double closed = prob * p[static_cast<std::size_t>(k)];
        m.format += closed;
        m.accuracy += closed * answer[static_cast<std::size_t>(correct)];
        if (majority(state.second) == correct) {
          m.consistency += closed * answer[static_cast<std::size_t>(correct)];
        }
        m.response_length += closed * (t + 2);
        for (int c = 0; c < k; ++c) {
          auto counts = state.second;
          ++counts[static_cast<std::size_t>(c)];
          next[{c, std::move(counts)}] += prob * p[static_cast<std::size_t>(c)];
        }
      }
      states = std::move(next);
    }
    for (const auto& [state, prob] : states) m.response_length += prob * max_think;
    by_pattern[static_cast<std::size_t>(pattern)] = m;
  }

  PolicyMetrics avg;
  for (const auto& item : task.items()) {
    const auto& m = by_pattern[static_cast<std::size_t>(item.pattern)];
    avg.format += m.format;
    avg.accuracy += m.accuracy;
    avg.consistency += m.consistency;
    avg.response_length += m.response_length;
  }
  const double n = static_cast<double>(task.items().size());
  avg.format /= n;
  avg.accuracy /= n;
  avg.consistency /= n;
  avg.response_length /= n;
  return avg;
}

namespace {

double max_drift(const SyntheticTask& task, const ToyPolicy& policy, const ToyPolicy& ref,
                 double temperature) {
  const int k = task.config().num_options;
  const std::size_t rows = policy.contexts();
  double worst = 0.0;
  auto compare = [&](std::size_t ctx, int first, int count) {
    const auto p = policy.distribution(ctx, first, count, temperature);
    const auto q = ref.distribution(ctx, first, count, temperature);
    for (int i = 0; i < count; ++i) worst = std::max(worst, std::abs(std::log(p[i]) - std::log(q[i])));
  };
  for (int pattern = 0; pattern < task.num_patterns(); ++pattern) {
    compare(task.answer_context(pattern, rows), task.answer_token(0), k);
    for (int t = 0; t < task.config().max_think_tokens; ++t) {
      for (int prev = kNoPrevious; prev < k; ++prev) {
        if ((t == 0) != (prev == kNoPrevious)) continue;
        compare(task.think_context(pattern, t, prev, rows), task.cue_token(0), k + 1);
      }
    }
  }
  return worst;
}

std::uint64_t draw(std::mt19937_64& rng, std::span<const double> p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace

std::string TrainingTrace::to_jsonl() const {
  std::string out;
  for (const auto& s : steps) {
    const nlohmann::json j = {
        {"step", s.step},
        {"epoch", s.epoch},
        {"stage", s.weights.stage},
        {"weights", {s.weights.format, s.weights.accuracy, s.weights.consistency}},
        {"mean_format_reward", s.mean_format},
        {"mean_accuracy_reward", s.mean_accuracy},
        {"mean_consistency_reward", s.mean_consistency},
        {"consistency_accuracy_ratio", s.consistency_accuracy_ratio},
        {"mean_response_length", s.mean_response_length},
        {"objective", s.objective},
        {"expected_format", s.expected.format},
        {"expected_accuracy", s.expected.accuracy},
        {"expected_consistency", s.expected.consistency},
        {"expected_response_length", s.expected.response_length},
        {"max_logp_drift", s.max_logp_drift}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

TrainingTrace train_toy(SyntheticTask& task, ToyPolicy& policy, const GrpoConfig& config,
                        const TrainOptions& options) {
  config.validate();
  if (policy.vocab() != task.vocab()) throw std::invalid_argument("policy vocabulary mismatch");
  if (options.staged) {
    options.schedule.validate();
  } else {
    options.fixed_weights.validate();
  }

  const ToyPolicy reference_policy = policy;
  ModelClient& reference = options.reference ? *options.reference : task.reference();
  const int k = task.config().num_options;
  const int max_think =
      std::min(task.config().max_think_tokens, std::max(1, config.max_response_length - 2));
  const std::size_t rows = policy.contexts();
  const double temp = config.temperature;
  const std::string labels = task.items().front().question.labels();

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(task.items().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto per_step = static_cast<std::size_t>(task.config().questions_per_step);

  TrainingTrace trace;
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const RewardWeights weights = options.staged ? options.schedule.weights(epoch) : options.fixed_weights;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += per_step) {
      ++step;
      TrainingStep rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.weights = weights;
      rec.expected = evaluate_policy(task, policy, temp);
      rec.max_logp_drift = max_drift(task, policy, reference_policy, temp);
      // Finite but enormous logits still overflow once scaled.
      if (!std::isfinite(rec.max_logp_drift) || !std::isfinite(rec.expected.accuracy)) {
        throw TrainingDiverged("non-finite log-probabilities at step " + std::to_string(step),
                               step);
      }

      std::vector<RolloutGroup> groups;
      std::size_t samples = 0;
      const std::size_t end = std::min(order.size(), begin + per_step);
      for (std::size_t q = begin; q < end; ++q) {
        const auto& item = task.items()[order[q]];
        RolloutGroup group;
        group.question_id = item.question.id;
        std::vector<double> rewards;
        for (int g = 0; g < config.group_size; ++g) {
          GroupMember member;
          std::vector<int> tokens;
          auto emit = [&](std::size_t ctx, int first, int count) {
            const auto p = policy.distribution(ctx, first, count, temp);
            TokenStep s;
            s.context = ctx;
            s.first_token = first;
            s.token_count = count;
            s.token = first + static_cast<int>(draw(rng, p));
            s.logp_old = policy.log_prob(s, temp);
            s.logp_theta = s.logp_old;
            s.logp_ref = reference_policy.log_prob(s, temp);
            member.steps.push_back(s);
            tokens.push_back(s.token);
            return s.token;
          };
          int previous = kNoPrevious;
          bool closed = false;
          for (int t = 0; t < max_think && !closed; ++t) {
            previous = emit(task.think_context(item.pattern, t, previous, rows),
                            task.cue_token(0), k + 1);
            closed = previous == task.end_think_token();
          }
          if (closed) emit(task.answer_context(item.pattern, rows), task.answer_token(0), k);
          member.output = task.render(tokens);

          const RolloutSample sample = parse_output(member.output, labels);
          const RewardBreakdown b = score_rollout(sample, item.question, weights, &reference);
          trace.consistency_unavailable += b.consistency_unavailable ? 1 : 0;
          rec.mean_format += b.format;
          rec.mean_accuracy += b.accuracy;
          rec.mean_consistency += b.consistency;
          rec.mean_response_length += static_cast<double>(member.steps.size());
          rewards.push_back(b.total);
          group.members.push_back(std::move(member));
          ++samples;
        }
        group.assign_rewards(rewards);
        group.compute_advantages(config.advantage_delta);
        groups.push_back(std::move(group));
      }

      const double n = static_cast<double>(samples);
      rec.mean_format /= n;
      rec.mean_accuracy /= n;
      rec.mean_consistency /= n;
      rec.mean_response_length /= n;
      rec.consistency_accuracy_ratio =
          rec.mean_accuracy > 0.0 ? rec.mean_consistency / rec.mean_accuracy : 0.0;

      std::vector<double> grad(policy.parameters().size(), 0.0);
      for (const auto& group : groups) {
        rec.objective += grpo_objective(group, config) / static_cast<double>(groups.size());
        const auto g = policy_gradient(policy, group, config);
        for (std::size_t i = 0; i < grad.size(); ++i) {
          grad[i] += g[i] / static_cast<double>(groups.size());
        }
      }
      double scale = config.learning_rate;
      if (config.max_grad_norm > 0.0) {
        double norm = 0.0;
        for (double v : grad) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > config.max_grad_norm) scale *= config.max_grad_norm / norm;
      }
      auto params = policy.parameters();
      for (std::size_t i = 0; i < grad.size(); ++i) params[i] += scale * grad[i];
      if (!policy.all_finite()) {
        throw TrainingDiverged("non-finite policy parameters at step " + std::to_string(step),
                               step);
      }
      trace.steps.push_back(rec);
    }
  }
  return trace;
}

}  // namespace spatialrl
