#include "spatialrl/dataset.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

namespace {

using nlohmann::json;

std::string required_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw InputError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

bool required_bool(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) {
    throw InputError(std::string("field '") + key + "' missing or not a boolean");
  }
  return it->get<bool>();
}

Question question_from_json(const json& j) {
  if (!j.is_object()) throw InputError("record is not an object");
  Question q;
  q.id = required_string(j, "id");
  q.video_id = required_string(j, "video_id");
  q.text = required_string(j, "question");
  q.ground_truth = required_string(j, "answer");
  q.source = j.contains("source") ? required_string(j, "source") : std::string();
  const std::string category = required_string(j, "category");
  const auto parsed = parse_category(category);
  if (!parsed) throw InputError("unknown category '" + category + "'");
  q.category = *parsed;
  const auto options = j.find("options");
  if (options == j.end() || !options->is_object()) {
    throw InputError("field 'options' missing or not a label->text map");
  }
  for (const auto& [label, text] : options->items()) {
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'Z') {
      throw InputError("option label '" + label + "' is not a single capital letter");
    }
    if (!text.is_string()) throw InputError("option " + label + " text is not a string");
    q.options.push_back({label, text.get<std::string>()});
  }
  if (q.video_id.empty()) throw InputError("video_id is empty");
  q.validate();
  return q;
}

}  // namespace

const Question* Dataset::find(std::string_view id) const {
  const auto it = std::find_if(questions.begin(), questions.end(),
                               [&](const Question& q) { return q.id == id; });
  return it == questions.end() ? nullptr : &*it;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(q.id);
  return out;
}

IngestResult ingest(std::string_view jsonl,
                    const std::optional<std::map<std::string, std::filesystem::path>>& videos) {
  IngestResult result;
  if (videos) result.dataset.videos = *videos;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = trim(jsonl.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;

    Rejection rejection;
    rejection.line = line_no;
    try {
      const json j = json::parse(line);
      if (j.is_object() && j.contains("id") && j["id"].is_string()) {
        rejection.id = j["id"].get<std::string>();
      }
      Question q = question_from_json(j);
      if (seen.count(q.id)) throw InputError("duplicate question id");
      if (videos) {
        if (!videos->count(q.video_id)) throw InputError("unknown video id '" + q.video_id + "'");
      } else {
        result.dataset.videos.emplace(q.video_id, std::filesystem::path());
      }
      seen.insert(q.id);
      result.dataset.questions.push_back(std::move(q));
    } catch (const json::exception& e) {
      rejection.reason = std::string("malformed JSON: ") + e.what();
      result.rejections.push_back(std::move(rejection));
    } catch (const InputError& e) {
      rejection.reason = e.what();
      result.rejections.push_back(std::move(rejection));
    }
  }
  return result;
}

std::string question_to_json(const Question& question) {
  json options = json::object();
  for (const auto& o : question.options) options[o.label] = o.text;
  const json j = {{"id", question.id},
                  {"video_id", question.video_id},
                  {"category", std::string(to_string(question.category))},
                  {"question", question.text},
                  {"options", options},
                  {"answer", question.ground_truth},
                  {"source", question.source}};
  return j.dump();
}

JudgmentTable parse_judgments(std::string_view jsonl) {
  JudgmentTable table;
  for (const auto& line : split_lines(jsonl)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed judgment record: ") + e.what());
    }
    if (!j.is_object()) throw InputError("judgment record is not an object");
    const std::string id = required_string(j, "id");
    Judgment judgment;
    judgment.finetuned = required_bool(j, "finetuned");
    judgment.original = required_bool(j, "original");
    if (j.contains("blind") && !j["blind"].is_null()) judgment.blind = required_bool(j, "blind");
    if (!table.emplace(id, judgment).second) throw InputError("duplicate judgment for " + id);
  }
  return table;
}

FilterResult semantic_bias_filter(const Dataset& dataset, const JudgmentTable& table) {
  FilterResult result;
  for (const auto& q : dataset.questions) {
    const auto it = table.find(q.id);
    if (it == table.end()) {
      result.warnings.push_back("no judgment for " + q.id + "; kept");
      result.kept.push_back(q.id);
    } else if (it->second.finetuned && !it->second.original) {
      result.excluded.push_back(q.id);
    } else {
      result.kept.push_back(q.id);
    }
  }
  return result;
}

std::map<std::string, bool> blind_test_flag(const Dataset& dataset, const JudgmentTable& table) {
  std::map<std::string, bool> flags;
  for (const auto& q : dataset.questions) {
    const auto it = table.find(q.id);
    flags[q.id] = it != table.end() && it->second.blind.value_or(false);
  }
  return flags;
}

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (const auto& [id, f] : fold) ++out[static_cast<std::size_t>(f)];
  return out;
}

std::vector<std::string> FoldAssignment::members(int index) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold) {
    if (f == index) out.push_back(id);
  }
  return out;
}

FoldAssignment kfold_split(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  if (static_cast<std::size_t>(k) > dataset.questions.size()) {
    throw InvalidFoldCount("fold count " + std::to_string(k) + " exceeds " +
                           std::to_string(dataset.questions.size()) + " questions");
  }
  std::vector<std::string> ids = dataset.ids();
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    folds.fold[ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return folds;
}

std::string folds_to_jsonl(const FoldAssignment& folds) {
  std::string out;
  for (const auto& [id, f] : folds.fold) {
    out += json{{"id", id}, {"fold", f}}.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace spatialrl
