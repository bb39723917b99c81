#include "spatialrl/question.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "spatialrl/errors.hpp"

namespace spatialrl {

std::string_view to_string(TaskCategory category) {
  switch (category) {
    case TaskCategory::kLandmarkPosition:
      return "Landmark Position";
    case TaskCategory::kCounterfactual:
      return "Counterfactual";
    case TaskCategory::kProgressEvaluation:
      return "Progress Evaluation";
    case TaskCategory::kActionGeneration:
      return "Action Generation";
    case TaskCategory::kRelativeDistance:
      return "Relative Distance";
    case TaskCategory::kRelativeDirection:
      return "Relative Direction";
    case TaskCategory::kRoutePlanning:
      return "Route Planning";
    case TaskCategory::kAppearanceOrder:
      return "Appearance Order";
  }
  return "unknown";
}

std::optional<TaskCategory> parse_category(std::string_view name) {
  auto norm = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '_' || c == '-') c = ' ';
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
  };
  const std::string want = norm(name);
  for (TaskCategory c : kAllCategories) {
    if (norm(to_string(c)) == want) return c;
  }
  return std::nullopt;
}

void Question::validate() const {
  if (id.empty()) throw InputError("question id is empty");
  if (options.size() < 2) throw InputError("question " + id + " has fewer than 2 options");
  std::set<std::string> seen;
  for (const auto& o : options) {
    if (o.label.empty()) throw InputError("question " + id + " has an unlabeled option");
    if (!seen.insert(o.label).second) {
      throw InputError("question " + id + " repeats option label " + o.label);
    }
  }
  if (!has_label(ground_truth)) {
    throw InputError("question " + id + " answer '" + ground_truth + "' is not an option label");
  }
}

bool Question::has_label(std::string_view label) const {
  return std::any_of(options.begin(), options.end(),
                     [&](const Option& o) { return o.label == label; });
}

std::string Question::labels() const {
  std::string out;
  for (const auto& o : options) {
    if (o.label.size() == 1) out += o.label;
  }
  return out;
}

}  // namespace spatialrl
