#ifndef SPATIALRL_QUESTION_HPP_
#define SPATIALRL_QUESTION_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spatialrl {

enum class TaskCategory {
  kLandmarkPosition,
  kCounterfactual,
  kProgressEvaluation,
  kActionGeneration,
  kRelativeDistance,
  kRelativeDirection,
  kRoutePlanning,
  kAppearanceOrder,
};

inline constexpr std::array<TaskCategory, 8> kAllCategories = {
    TaskCategory::kLandmarkPosition,  TaskCategory::kCounterfactual,
    TaskCategory::kProgressEvaluation, TaskCategory::kActionGeneration,
    TaskCategory::kRelativeDistance,  TaskCategory::kRelativeDirection,
    TaskCategory::kRoutePlanning,     TaskCategory::kAppearanceOrder,
};

// Display name, e.g. "Relative Direction".
std::string_view to_string(TaskCategory category);
// Accepts the display name case-insensitively, with '_' or '-' for spaces.
std::optional<TaskCategory> parse_category(std::string_view name);

struct Option {
  std::string label;  // "A", "B", ...
  std::string text;

  bool operator==(const Option&) const = default;
};

// A multiple-choice spatial reasoning question about one video.
struct Question {
  std::string id;
  std::string video_id;
  std::string text;
  std::vector<Option> options;
  std::string ground_truth;  // an option label
  TaskCategory category = TaskCategory::kLandmarkPosition;
  std::string source;

  // Throws InputError: empty id, fewer than two options, duplicate labels,
  // or a ground truth that is not one of the labels.
  void validate() const;
  bool has_label(std::string_view label) const;
  std::string labels() const;  // concatenated single-letter labels

  bool operator==(const Question&) const = default;
};

}  // namespace spatialrl

#endif  // SPATIALRL_QUESTION_HPP_
