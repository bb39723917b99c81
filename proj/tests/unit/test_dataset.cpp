#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "spatialrl/errors.hpp"
#include "spatialrl/evaluation.hpp"
#include "spatialrl/io.hpp"

using namespace spatialrl;
using nlohmann::json;

namespace {

std::string record(const std::string& id, const std::string& category = "Route Planning",
                   const std::string& video = "v1", const std::string& answer = "A",
                   int options = 4) {
  json opts = json::object();
  for (int i = 0; i < options; ++i) opts[std::string(1, static_cast<char>('A' + i))] = "text";
  return json{{"id", id},          {"video_id", video}, {"category", category},
              {"question", "q?"},  {"options", opts},   {"answer", answer},
              {"source", "test"}}
             .dump();
}

Dataset numbered(int n) {
  std::string text;
  for (int i = 0; i < n; ++i) text += record("q" + std::to_string(100 + i)) + "\n";
  return ingest(text).dataset;
}

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(SPATIALRL_TEST_DATA) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Questions whose option counts mix n and n + 1 so the expected accuracy of
// uniform guessing equals `target`.
void add_mirror_category(Dataset& d, TaskCategory c, double target, int count) {
  int n = 2;
  while (1.0 / (n + 1) > target) ++n;
  const double w = (target - 1.0 / (n + 1)) / (1.0 / n - 1.0 / (n + 1));
  const int with_n = static_cast<int>(std::lround(w * count));
  for (int i = 0; i < count; ++i) {
    Question q;
    q.id = std::string(to_string(c)) + "-" + std::to_string(i);
    q.video_id = "v";
    q.text = "q";
    q.category = c;
    const int options = i < with_n ? n : n + 1;
    for (int k = 0; k < options; ++k) q.options.push_back({std::string(1, 'A' + k), "o"});
    q.ground_truth = q.options[static_cast<std::size_t>(i % options)].label;
    d.questions.push_back(q);
  }
}

}  // namespace

TEST(Ingest, ValidRecords) {
  const auto r = ingest(record("a") + "\n" + record("b", "relative_direction", "v2") + "\n");
  EXPECT_TRUE(r.rejections.empty());
  ASSERT_EQ(r.dataset.questions.size(), 2u);
  EXPECT_EQ(r.dataset.questions[1].category, TaskCategory::kRelativeDirection);
  EXPECT_EQ(r.dataset.videos.size(), 2u);
  EXPECT_EQ(r.dataset.find("b")->video_id, "v2");
  EXPECT_EQ(r.dataset.find("zz"), nullptr);
  const auto again = ingest(question_to_json(r.dataset.questions[0]) + "\n");
  ASSERT_EQ(again.dataset.questions.size(), 1u);
  EXPECT_EQ(again.dataset.questions[0], r.dataset.questions[0]);
}

TEST(Ingest, RejectionsCarryLineAndReason) {
  const std::string text = record("a") + "\n" + "{broken\n" + record("b", "Teleportation") +
                           "\n" + record("a") + "\n" + record("c", "Counterfactual", "v1", "Z") +
                           "\n" + record("d", "Counterfactual", "v1", "A", 1) + "\n";
  const auto r = ingest(text);
  EXPECT_EQ(r.dataset.questions.size(), 1u);
  ASSERT_EQ(r.rejections.size(), 5u);
  EXPECT_EQ(r.rejections[0].line, 2u);
  EXPECT_NE(r.rejections[0].reason.find("malformed"), std::string::npos);
  EXPECT_EQ(r.rejections[1].id, "b");
  EXPECT_NE(r.rejections[1].reason.find("category"), std::string::npos);
  EXPECT_NE(r.rejections[2].reason.find("duplicate"), std::string::npos);
  EXPECT_EQ(r.rejections[3].id, "c");
  EXPECT_EQ(r.rejections[4].id, "d");
}

TEST(Ingest, UnknownVideoRejectedWhenIndexGiven) {
  const std::map<std::string, std::filesystem::path> videos = {{"v1", "/data/v1"}};
  const auto r = ingest(record("a") + "\n" + record("b", "Route Planning", "v9") + "\n", videos);
  EXPECT_EQ(r.dataset.questions.size(), 1u);
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_NE(r.rejections[0].reason.find("video"), std::string::npos);
}

TEST(Filter, BiasAndBlindCases) {
  const Dataset d = numbered(4);
  const JudgmentTable t = {{"q100", {true, false, std::nullopt}},
                           {"q101", {true, true, std::nullopt}},
                           {"q102", {false, false, std::nullopt}}};
  const auto r = semantic_bias_filter(d, t);
  EXPECT_EQ(r.excluded, (std::vector<std::string>{"q100"}));
  EXPECT_EQ(r.kept, (std::vector<std::string>{"q101", "q102", "q103"}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("q103"), std::string::npos);
}

TEST(Filter, MatchesSetAlgebraOnFuzzedTables) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const Dataset d = numbered(1 + static_cast<int>(rng() % 30));
    JudgmentTable t;
    std::set<std::string> f, o, all;
    for (const auto& q : d.questions) {
      all.insert(q.id);
      if (rng() % 5 == 0) continue;  // absent from the table
      const bool fine = rng() % 2, orig = rng() % 2;
      t[q.id] = {fine, orig, std::nullopt};
      if (fine) f.insert(q.id);
      if (orig) o.insert(q.id);
    }
    std::set<std::string> expected;
    std::set_difference(f.begin(), f.end(), o.begin(), o.end(),
                        std::inserter(expected, expected.end()));
    const auto r = semantic_bias_filter(d, t);
    const std::set<std::string> excluded(r.excluded.begin(), r.excluded.end());
    const std::set<std::string> kept(r.kept.begin(), r.kept.end());
    ASSERT_EQ(excluded, expected);
    std::set<std::string> both;
    std::set_intersection(kept.begin(), kept.end(), excluded.begin(), excluded.end(),
                          std::inserter(both, both.end()));
    ASSERT_TRUE(both.empty());
    std::set<std::string> unioned = kept;
    unioned.insert(excluded.begin(), excluded.end());
    ASSERT_EQ(unioned, all);
    ASSERT_EQ(r.kept.size() + r.excluded.size(), d.questions.size());
  }
}

TEST(Filter, BlindFlags) {
  const Dataset d = numbered(3);
  const JudgmentTable t = {{"q100", {false, false, true}},
                           {"q101", {false, false, false}},
                           {"q102", {false, false, std::nullopt}}};
  const auto flags = blind_test_flag(d, t);
  EXPECT_TRUE(flags.at("q100"));
  EXPECT_FALSE(flags.count("q101") && flags.at("q101"));
  EXPECT_FALSE(flags.count("q102") && flags.at("q102"));
  for (const auto& [id, flag] : blind_test_flag(d, {})) EXPECT_FALSE(flag) << id;
  // Flags never exclude anything.
  EXPECT_EQ(semantic_bias_filter(d, t).kept.size(), 3u);
}

TEST(Judgments, Parsing) {
  const auto t = parse_judgments(
      "{\"id\":\"a\",\"finetuned\":true,\"original\":false}\n"
      "{\"id\":\"b\",\"finetuned\":false,\"original\":true,\"blind\":true}\n");
  EXPECT_TRUE(t.at("a").finetuned);
  EXPECT_FALSE(t.at("a").blind.has_value());
  EXPECT_TRUE(*t.at("b").blind);
  EXPECT_THROW(parse_judgments("{\"id\":\"a\",\"finetuned\":1,\"original\":false}\n"),
               InputError);
  EXPECT_THROW(parse_judgments("{\"id\":\"a\",\"finetuned\":true,\"original\":false}\n"
                               "{\"id\":\"a\",\"finetuned\":true,\"original\":false}\n"),
               InputError);
}

TEST(Folds, EvenAndUnevenSizes) {
  EXPECT_EQ(kfold_split(numbered(10), 5, 0).sizes(), (std::vector<std::size_t>{2, 2, 2, 2, 2}));
  EXPECT_EQ(kfold_split(numbered(11), 5, 0).sizes(), (std::vector<std::size_t>{3, 2, 2, 2, 2}));
}

TEST(Folds, DisjointCoveringBalancedDeterministic) {
  for (int n : {5, 17, 64, 101}) {
    const Dataset d = numbered(n);
    for (int k : {2, 3, 5}) {
      const auto a = kfold_split(d, k, 42);
      std::set<std::string> seen;
      for (int f = 0; f < k; ++f) {
        for (const auto& id : a.members(f)) EXPECT_TRUE(seen.insert(id).second) << id;
      }
      EXPECT_EQ(seen.size(), static_cast<std::size_t>(n));
      const auto s = a.sizes();
      EXPECT_LE(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()), 1u);
      EXPECT_EQ(kfold_split(d, k, 42).fold, a.fold);
    }
  }
  EXPECT_NE(kfold_split(numbered(50), 5, 1).fold, kfold_split(numbered(50), 5, 2).fold);
}

TEST(Folds, InvalidCounts) {
  EXPECT_THROW(kfold_split(numbered(3), 4, 0), InvalidFoldCount);
  EXPECT_THROW(kfold_split(numbered(3), 1, 0), std::invalid_argument);
  EXPECT_EQ(split_lines(folds_to_jsonl(kfold_split(numbered(6), 3, 0))).size(), 6u);
}

TEST(Scoring, HandCheckedFortyQuestionFixture) {
  const auto ingested = ingest(slurp("scoring40_questions.jsonl"));
  ASSERT_TRUE(ingested.rejections.empty());
  const auto report = score(parse_predictions(slurp("scoring40_predictions.jsonl")),
                            ingested.dataset);
  // Sizes 8 6 5 5 4 4 4 4; correct 8 3 5 1 2 0 4 1, one Relative Direction
  // question left without a prediction.
  const std::size_t correct[8] = {8, 3, 5, 1, 2, 0, 4, 1};
  const std::size_t total[8] = {8, 6, 5, 5, 4, 4, 4, 4};
  const double accuracy[8] = {1.0, 0.5, 1.0, 0.2, 0.5, 0.0, 1.0, 0.25};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(report.categories[i].correct, correct[i]) << i;
    EXPECT_EQ(report.categories[i].total, total[i]) << i;
    EXPECT_DOUBLE_EQ(report.categories[i].accuracy(), accuracy[i]) << i;
  }
  EXPECT_DOUBLE_EQ(report.category_mean, 4.45 / 8.0);
  EXPECT_DOUBLE_EQ(report.sample_mean, 0.6);
  EXPECT_EQ(report.correct, 24u);
  EXPECT_EQ(report.total, 40u);
  EXPECT_EQ(report.missing, (std::vector<std::string>{"s32"}));
  EXPECT_EQ(report.extraneous, (std::vector<std::string>{"zz99"}));
  EXPECT_EQ(report.category(TaskCategory::kRelativeDirection).total, 4u);

  const json j = json::parse(report.to_json());
  EXPECT_EQ(j["categories"].size(), 8u);
  const std::string text = report.to_text();
  EXPECT_NE(text.find("Relative Direction"), std::string::npos);
  EXPECT_NE(text.find("Avg. (category mean)"), std::string::npos);
}

TEST(Scoring, PerfectAndEmptyPredictions) {
  const auto d = ingest(slurp("scoring40_questions.jsonl")).dataset;
  Predictions perfect;
  for (const auto& q : d.questions) perfect[q.id] = q.ground_truth;
  const auto all = score(perfect, d);
  for (const auto& c : all.categories) EXPECT_EQ(c.accuracy(), 1.0);
  EXPECT_EQ(all.category_mean, 1.0);
  const auto none = score({}, d);
  EXPECT_EQ(none.category_mean, 0.0);
  EXPECT_EQ(none.missing.size(), 40u);
}

TEST(Scoring, SplitRestrictsAndSkipsEmptyCategories) {
  const auto d = ingest(slurp("scoring40_questions.jsonl")).dataset;
  const auto preds = parse_predictions(slurp("scoring40_predictions.jsonl"));
  const auto r = score(preds, d, {"s01", "s09"});
  EXPECT_EQ(r.total, 2u);
  // Landmark Position 1/1 and Counterfactual 1/1; the other six are empty.
  EXPECT_DOUBLE_EQ(r.category_mean, 1.0);
  EXPECT_EQ(r.extraneous.size(), preds.size() - 2);
}

TEST(Scoring, PermutationInvariant) {
  const auto d = ingest(slurp("scoring40_questions.jsonl")).dataset;
  auto lines = split_lines(slurp("scoring40_predictions.jsonl"));
  const auto base = score(parse_predictions(slurp("scoring40_predictions.jsonl")), d);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string text;
    for (const auto& l : lines) text += std::string(l) + "\n";
    EXPECT_EQ(score(parse_predictions(text), d).to_json(), base.to_json());
  }
}

TEST(Scoring, SingleFlipSensitivityBound) {
  const auto d = ingest(slurp("scoring40_questions.jsonl")).dataset;
  auto preds = parse_predictions(slurp("scoring40_predictions.jsonl"));
  const auto base = score(preds, d);
  // Smallest category holds 4 questions.
  const double bound = 1.0 / (8.0 * 4.0);
  for (const auto& q : d.questions) {
    auto flipped = preds;
    flipped[q.id] = flipped.count(q.id) && flipped[q.id] == q.ground_truth ? "Z" : q.ground_truth;
    EXPECT_LE(std::abs(score(flipped, d).category_mean - base.category_mean), bound + 1e-15)
        << q.id;
  }
}

TEST(Scoring, UniformRandomWithinBinomialBound) {
  Dataset d;
  add_mirror_category(d, TaskCategory::kRoutePlanning, 0.25, 2000);
  const auto r = score(random_predictions(d, 5), d);
  // Three standard errors of a Binomial(2000, 1/4) proportion.
  const double se = std::sqrt(0.25 * 0.75 / 2000.0);
  EXPECT_NEAR(r.sample_mean, 0.25, 3.0 * se);
  EXPECT_EQ(random_predictions(d, 5), random_predictions(d, 5));
}

TEST(Scoring, RandomBaselineMirrorsTableLayout) {
  // Per-category chance levels of the published random row.
  const double chance[8] = {0.197, 0.25, 0.218, 0.164, 0.25, 0.361, 0.283, 0.25};
  Dataset d;
  for (std::size_t i = 0; i < 8; ++i) add_mirror_category(d, kAllCategories[i], chance[i], 3000);
  const auto r = score(random_predictions(d, 11), d);
  EXPECT_NEAR(100.0 * r.category_mean, 24.0, 1.0);
}

TEST(Consistency, Proportion) {
  std::map<std::string, bool> j;
  for (int i = 0; i < 100; ++i) j["s" + std::to_string(i)] = i < 46;
  EXPECT_DOUBLE_EQ(consistency_proportion(j), 0.46);
  for (auto& [id, v] : j) v = true;
  EXPECT_EQ(consistency_proportion(j), 1.0);
  for (auto& [id, v] : j) v = false;
  EXPECT_EQ(consistency_proportion(j), 0.0);
  EXPECT_THROW(consistency_proportion({}), std::invalid_argument);
  const auto parsed = parse_consistency("{\"id\":\"a\",\"consistent\":true}\n"
                                        "{\"id\":\"b\",\"consistent\":false}\n");
  EXPECT_DOUBLE_EQ(consistency_proportion(parsed), 0.5);
}

TEST(Predictions, RoundTripAndErrors) {
  const Predictions p = {{"a", "B"}, {"b", "C"}};
  EXPECT_EQ(parse_predictions(predictions_to_jsonl(p)), p);
  EXPECT_THROW(parse_predictions("{\"id\":\"a\"}\n"), InputError);
  EXPECT_THROW(parse_predictions("{\"id\":\"a\",\"prediction\":\"A\"}\n"
                                 "{\"id\":\"a\",\"prediction\":\"B\"}\n"),
               InputError);
}
