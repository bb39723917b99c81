#include "spatialrl/rewards.hpp"

#include <cctype>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/perception.hpp"

namespace spatialrl {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_tag(std::string_view s) {
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

// Position and label of the first "answer is x" (case-insensitive).
std::optional<std::pair<std::size_t, char>> answer_is_pattern(std::string_view text,
                                                              std::string_view labels) {
  static constexpr std::string_view kPhrase = "answer is";
  for (std::size_t i = 0; i + kPhrase.size() < text.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < kPhrase.size() && match; ++k) {
      match = std::tolower(static_cast<unsigned char>(text[i + k])) == kPhrase[k];
    }
    if (!match || (i > 0 && is_alnum(text[i - 1]))) continue;
    std::size_t j = i + kPhrase.size();
    while (j < text.size() && (text[j] == ' ' || text[j] == ':' || text[j] == '(' ||
                               text[j] == '*' || text[j] == '"' || text[j] == '\'')) {
      ++j;
    }
    if (j >= text.size()) continue;
    const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(text[j])));
    const bool bounded = j + 1 >= text.size() || !is_alnum(text[j + 1]);
    if (bounded && labels.find(up) != std::string_view::npos) return std::make_pair(j, up);
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_option_label(std::string_view text, std::string_view labels) {
  std::optional<std::pair<std::size_t, char>> token;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (labels.find(text[i]) == std::string_view::npos) continue;
    const bool left = i == 0 || !is_alnum(text[i - 1]);
    const bool right = i + 1 >= text.size() || !is_alnum(text[i + 1]);
    // "B's" and "A-frame" are words, not labels.
    const bool word_suffix = i + 1 < text.size() && (text[i + 1] == '\'' || text[i + 1] == '-') &&
                             i + 2 < text.size() && is_alnum(text[i + 2]);
    if (left && right && !word_suffix) {
      token = std::make_pair(i, text[i]);
      break;
    }
  }
  const auto phrase = answer_is_pattern(text, labels);
  if (token && phrase) {
    return std::string(1, token->first <= phrase->first ? token->second : phrase->second);
  }
  if (token) return std::string(1, token->second);
  if (phrase) return std::string(1, phrase->second);
  return std::nullopt;
}

RolloutSample parse_output(std::string_view output, std::string_view labels) {
  RolloutSample s;
  s.output = std::string(output);
  std::string_view rest = trim(output);
  if (!rest.starts_with(kThinkOpen)) return s;
  rest.remove_prefix(kThinkOpen.size());
  const std::size_t think_end = rest.find(kThinkClose);
  if (think_end == std::string_view::npos) return s;
  const std::string_view think = rest.substr(0, think_end);
  if (contains_tag(think)) return s;
  rest = trim(rest.substr(think_end + kThinkClose.size()));
  if (!rest.starts_with(kAnswerOpen)) return s;
  rest.remove_prefix(kAnswerOpen.size());
  const std::size_t answer_end = rest.find(kAnswerClose);
  if (answer_end == std::string_view::npos) return s;
  const std::string_view answer = rest.substr(0, answer_end);
  if (contains_tag(answer)) return s;
  if (!rest.substr(answer_end + kAnswerClose.size()).empty()) return s;
  auto label = extract_option_label(answer, labels);
  if (!label) return s;
  s.think = std::string(trim(think));
  s.answer = std::move(label);
  s.format_ok = true;
  return s;
}

int format_reward(const RolloutSample& sample) { return sample.format_ok ? 1 : 0; }

int accuracy_reward(const RolloutSample& sample, std::string_view ground_truth) {
  return sample.answer && *sample.answer == ground_truth ? 1 : 0;
}

std::string consistency_prompt(const Question& question, std::string_view reasoning) {
  return "You are given a question and a reasoning process written by another agent. "
         "Without any further observations, determine which option the reasoning leads to. "
         "Reply with the option label enclosed in <answer> </answer> tags.\nQuestion: " +
         render_question(question) + "\nReasoning: " + std::string(reasoning) + "\nAnswer:";
}

int consistency_reward(const RolloutSample& sample, const Question& question,
                       std::string_view ground_truth, ModelClient& reference,
                       const ConsistencyConfig& config) {
  if (accuracy_reward(sample, ground_truth) == 0 || !sample.think) return 0;
  ChatRequest req;
  req.model = config.model;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  req.messages.push_back({"user", {ContentPart::from_text(consistency_prompt(question, *sample.think))}});
  std::string reply;
  try {
    reply = reference.complete(req);
  } catch (const TransportError& e) {
    throw ConsistencyUnavailable(std::string("reference client failed: ") + e.what());
  }
  const std::string labels = question.labels().empty() ? std::string(kDefaultLabels)
                                                        : question.labels();
  std::string_view scope = reply;
  const std::size_t open = scope.find(kAnswerOpen);
  if (open != std::string_view::npos) {
    scope.remove_prefix(open + kAnswerOpen.size());
    const std::size_t close = scope.find(kAnswerClose);
    if (close != std::string_view::npos) scope = scope.substr(0, close);
  }
  const auto reference_answer = extract_option_label(scope, labels);
  return reference_answer && *reference_answer == *sample.answer &&
                 *sample.answer == ground_truth
             ? 1
             : 0;
}

void RewardWeights::validate() const {
  if (format < 0 || accuracy < 0 || consistency < 0) {
    throw std::invalid_argument("reward weights must be nonnegative");
  }
  if (format == 0 && accuracy == 0 && consistency == 0) {
    throw std::invalid_argument("reward weights must not all be zero");
  }
  if (stage < 1 || stage > 3) throw std::invalid_argument("reward stage must be 1, 2 or 3");
}

RewardWeights schedule_weights(int epoch) {
  if (epoch < 1) throw std::invalid_argument("epochs are numbered from 1");
  if (epoch <= 2) return {7.0, 3.0, 0.0, 1};
  if (epoch <= 4) return {3.0, 7.0, 0.0, 2};
  return {1.0, 7.0, 2.0, 3};
}

WeightSchedule WeightSchedule::standard() {
  return {{{1, schedule_weights(1)}, {3, schedule_weights(3)}, {5, schedule_weights(5)}}};
}

void WeightSchedule::validate() const {
  if (entries.empty() || entries.front().first_epoch != 1) {
    throw std::invalid_argument("weight schedule must start at epoch 1");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].weights.validate();
    if (i > 0 && entries[i].first_epoch <= entries[i - 1].first_epoch) {
      throw std::invalid_argument("weight schedule epochs must increase");
    }
  }
}

RewardWeights WeightSchedule::weights(int epoch) const {
  if (epoch < 1) throw std::invalid_argument("epochs are numbered from 1");
  validate();
  RewardWeights out = entries.front().weights;
  for (const auto& e : entries) {
    if (e.first_epoch <= epoch) out = e.weights;
  }
  return out;
}

double total_reward(int format, int accuracy, int consistency, const RewardWeights& weights) {
  return weights.format * format + weights.accuracy * accuracy +
         weights.consistency * consistency;
}

RewardBreakdown score_rollout(const RolloutSample& sample, const Question& question,
                              const RewardWeights& weights, ModelClient* reference,
                              const ConsistencyConfig& config) {
  weights.validate();
  RewardBreakdown b;
  b.weights = weights;
  b.format = format_reward(sample);
  b.accuracy = accuracy_reward(sample, question.ground_truth);
  if (reference != nullptr) {
    try {
      b.consistency = consistency_reward(sample, question, question.ground_truth, *reference,
                                         config);
    } catch (const ConsistencyUnavailable& e) {
      b.consistency = 0;
      b.consistency_unavailable = true;
      b.note = e.what();
    }
  }
  b.total = total_reward(b.format, b.accuracy, b.consistency, weights);
  return b;
}

std::string reward_log_record(std::string_view sample_id, const RewardBreakdown& b) {
  nlohmann::json j = {{"sample_id", sample_id},
                      {"stage", b.weights.stage},
                      {"format", b.format},
                      {"accuracy", b.accuracy},
                      {"consistency", b.consistency},
                      {"weights", {b.weights.format, b.weights.accuracy, b.weights.consistency}},
                      {"total", b.total}};
  if (b.consistency_unavailable) j["consistency_unavailable"] = b.note;
  return j.dump();
}

}  // namespace spatialrl
