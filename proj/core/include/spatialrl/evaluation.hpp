#ifndef SPATIALRL_EVALUATION_HPP_
#define SPATIALRL_EVALUATION_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/dataset.hpp"

namespace spatialrl {

using Predictions = std::map<std::string, std::string>;  // question id -> label

// {"id", "prediction"} per line. Throws InputError on malformed lines or
// duplicate ids.
Predictions parse_predictions(std::string_view jsonl);
std::string predictions_to_jsonl(const Predictions& predictions);

struct CategoryScore {
  std::size_t correct = 0;
  std::size_t total = 0;

  // 0 for an empty category.
  double accuracy() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

struct EvalReport {
  std::array<CategoryScore, 8> categories{};  // indexed like kAllCategories
  // Unweighted mean of the non-empty categories' accuracies.
  double category_mean = 0.0;
  // correct / total over all scored questions.
  double sample_mean = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::string> missing;     // split ids without a prediction
  std::vector<std::string> extraneous;  // predictions for ids outside the split
  std::optional<double> consistency;

  const CategoryScore& category(TaskCategory c) const;

  std::string to_json() const;
  std::string to_text() const;  // aligned table
};

// Scores `predictions` against the questions in `split` (every question
// when empty). Missing predictions count as wrong and are itemized.
EvalReport score(const Predictions& predictions, const Dataset& dataset,
                 const std::vector<std::string>& split = {});

// Consistent count over total. Throws std::invalid_argument when empty.
double consistency_proportion(const std::map<std::string, bool>& judgments);

// {"id", "consistent": bool} per line.
std::map<std::string, bool> parse_consistency(std::string_view jsonl);

// One uniformly random option label per question.
Predictions random_predictions(const Dataset& dataset, std::uint64_t seed);

}  // namespace spatialrl

#endif  // SPATIALRL_EVALUATION_HPP_
