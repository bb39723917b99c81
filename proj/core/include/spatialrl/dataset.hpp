#ifndef SPATIALRL_DATASET_HPP_
#define SPATIALRL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/question.hpp"

namespace spatialrl {

struct Dataset {
  std::vector<Question> questions;
  std::map<std::string, std::filesystem::path> videos;  // video id -> source

  const Question* find(std::string_view id) const;
  std::vector<std::string> ids() const;
};

struct Rejection {
  std::size_t line = 0;  // 1-based line in the input
  std::string id;        // empty when the record had no readable id
  std::string reason;
};

struct IngestResult {
  Dataset dataset;
  std::vector<Rejection> rejections;
};

// Parses QA records, one JSON object per line:
//   {"id", "video_id", "category", "question", "options": {label: text},
//    "answer", "source"}
// Malformed records, unknown categories, duplicate ids and (when `videos`
// is given) unknown video ids are rejected with a reason. Without a video
// index, every referenced video id is registered with an empty path.
IngestResult ingest(std::string_view jsonl,
                    const std::optional<std::map<std::string, std::filesystem::path>>& videos = {});

std::string question_to_json(const Question& question);

struct Judgment {
  bool finetuned = false;  // text-only fine-tuned model answered correctly
  bool original = false;   // original model answered correctly
  std::optional<bool> blind;  // untrained blind model answered correctly
};

using JudgmentTable = std::map<std::string, Judgment>;

// {"id", "finetuned": bool, "original": bool, "blind"?: bool} per line.
// Throws InputError on malformed lines or duplicate ids.
JudgmentTable parse_judgments(std::string_view jsonl);

struct FilterResult {
  std::vector<std::string> kept;
  std::vector<std::string> excluded;
  std::vector<std::string> warnings;
};

// Excludes exactly the questions the fine-tuned text-only model answers
// correctly and the original model does not. Questions absent from the
// table are kept with a warning. Output preserves dataset order.
FilterResult semantic_bias_filter(const Dataset& dataset, const JudgmentTable& table);

// True for questions the blind model answered correctly.
std::map<std::string, bool> blind_test_flag(const Dataset& dataset, const JudgmentTable& table);

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> fold;  // question id -> fold index

  std::vector<std::size_t> sizes() const;
  std::vector<std::string> members(int index) const;
};

// Shuffles question ids with `seed` and deals them round-robin into k
// folds. Throws std::invalid_argument for k < 2 and InvalidFoldCount when
// k exceeds the question count.
FoldAssignment kfold_split(const Dataset& dataset, int k, std::uint64_t seed);

std::string folds_to_jsonl(const FoldAssignment& folds);

}  // namespace spatialrl

#endif  // SPATIALRL_DATASET_HPP_
