#include "spatialrl/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <stdexcept>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

namespace {

using nlohmann::json;

std::size_t category_index(TaskCategory c) {
  const auto it = std::find(kAllCategories.begin(), kAllCategories.end(), c);
  return static_cast<std::size_t>(it - kAllCategories.begin());
}

json parse_record(const std::string& line, const char* what) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed ") + what + " record: " + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw InputError(std::string(what) + " record lacks a string 'id'");
  }
  return j;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

Predictions parse_predictions(std::string_view jsonl) {
  Predictions out;
  for (const auto& line : split_lines(jsonl)) {
    const json j = parse_record(line, "prediction");
    const auto it = j.find("prediction");
    if (it == j.end() || !it->is_string()) {
      throw InputError("prediction record lacks a string 'prediction'");
    }
    const std::string id = j["id"].get<std::string>();
    if (!out.emplace(id, it->get<std::string>()).second) {
      throw InputError("duplicate prediction for " + id);
    }
  }
  return out;
}

std::string predictions_to_jsonl(const Predictions& predictions) {
  std::string out;
  for (const auto& [id, label] : predictions) {
    out += json{{"id", id}, {"prediction", label}}.dump();
    out.push_back('\n');
  }
  return out;
}

const CategoryScore& EvalReport::category(TaskCategory c) const {
  return categories[category_index(c)];
}

EvalReport score(const Predictions& predictions, const Dataset& dataset,
                 const std::vector<std::string>& split) {
  EvalReport report;
  std::set<std::string> in_split;
  std::vector<const Question*> scored;
  if (split.empty()) {
    for (const auto& q : dataset.questions) scored.push_back(&q);
  } else {
    for (const auto& id : split) {
      const Question* q = dataset.find(id);
      if (q == nullptr) throw InputError("split references unknown question " + id);
      scored.push_back(q);
    }
  }
  for (const Question* q : scored) {
    in_split.insert(q->id);
    CategoryScore& cat = report.categories[category_index(q->category)];
    ++cat.total;
    ++report.total;
    const auto it = predictions.find(q->id);
    if (it == predictions.end()) {
      report.missing.push_back(q->id);
    } else if (it->second == q->ground_truth) {
      ++cat.correct;
      ++report.correct;
    }
  }
  for (const auto& [id, label] : predictions) {
    if (!in_split.count(id)) report.extraneous.push_back(id);
  }
  double sum = 0.0;
  int present = 0;
  for (const auto& cat : report.categories) {
    if (cat.total == 0) continue;
    sum += cat.accuracy();
    ++present;
  }
  report.category_mean = present == 0 ? 0.0 : sum / present;
  report.sample_mean = report.total == 0 ? 0.0
                                         : static_cast<double>(report.correct) /
                                               static_cast<double>(report.total);
  return report;
}

std::string EvalReport::to_json() const {
  json cats = json::array();
  for (std::size_t i = 0; i < categories.size(); ++i) {
    cats.push_back({{"category", std::string(to_string(kAllCategories[i]))},
                    {"correct", categories[i].correct},
                    {"total", categories[i].total},
                    {"accuracy", categories[i].accuracy()}});
  }
  json j = {{"categories", cats},
            {"category_mean", category_mean},
            {"sample_mean", sample_mean},
            {"correct", correct},
            {"total", total},
            {"missing", missing},
            {"extraneous", extraneous}};
  j["consistency"] = consistency ? json(*consistency) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  const std::string category_avg = "Avg. (category mean)";
  const std::string sample_avg = "Avg. (sample mean)";
  std::size_t width = category_avg.size();
  for (auto c : kAllCategories) width = std::max(width, to_string(c).size());
  std::string out;
  auto row = [&](std::string name, const std::string& c, const std::string& t,
                 const std::string& acc) {
    name.resize(width, ' ');
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %7s  %5s  %8s\n", c.c_str(), t.c_str(), acc.c_str());
    out += name + buf;
  };
  row("Category", "Correct", "Total", "Accuracy");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    row(std::string(to_string(kAllCategories[i])), std::to_string(categories[i].correct),
        std::to_string(categories[i].total), fixed(100.0 * categories[i].accuracy(), 1));
  }
  row(category_avg, "", "", fixed(100.0 * category_mean, 1));
  row(sample_avg, std::to_string(correct), std::to_string(total), fixed(100.0 * sample_mean, 1));
  if (consistency) row("Consistency", "", "", fixed(100.0 * *consistency, 1));
  if (!missing.empty()) {
    out += "Missing predictions (" + std::to_string(missing.size()) + "):";
    for (const auto& id : missing) out += " " + id;
    out += "\n";
  }
  return out;
}

double consistency_proportion(const std::map<std::string, bool>& judgments) {
  if (judgments.empty()) throw std::invalid_argument("no consistency judgments");
  const auto consistent = std::count_if(judgments.begin(), judgments.end(),
                                        [](const auto& kv) { return kv.second; });
  return static_cast<double>(consistent) / static_cast<double>(judgments.size());
}

std::map<std::string, bool> parse_consistency(std::string_view jsonl) {
  std::map<std::string, bool> out;
  for (const auto& line : split_lines(jsonl)) {
    const json j = parse_record(line, "consistency");
    const auto it = j.find("consistent");
    if (it == j.end() || !it->is_boolean()) {
      throw InputError("consistency record lacks a boolean 'consistent'");
    }
    const std::string id = j["id"].get<std::string>();
    if (!out.emplace(id, it->get<bool>()).second) {
      throw InputError("duplicate consistency judgment for " + id);
    }
  }
  return out;
}

Predictions random_predictions(const Dataset& dataset, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Predictions out;
  for (const auto& q : dataset.questions) {
    const auto pick = rng() % q.options.size();
    out[q.id] = q.options[pick].label;
  }
  return out;
}

}  // namespace spatialrl
