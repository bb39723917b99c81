#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/rewards.hpp"

using namespace spatialrl;
using nlohmann::json;

namespace {

Question question() {
  Question q;
  q.id = "q";
  q.text = "Where is the tower?";
  q.options = {{"A", "Left"}, {"B", "Right"}, {"C", "Ahead"}};
  q.ground_truth = "B";
  return q;
}

// Reference model that answers with a fixed label.
MockModelClient reference_answering(const std::string& label) {
  return MockModelClient("ref", [label](const ChatRequest&) {
    return "<answer>" + label + "</answer>";
  });
}

RolloutSample unformatted(const std::string& answer) {
  RolloutSample s;
  s.output = "free text";
  s.think = "some reasoning";
  s.answer = answer;
  s.format_ok = false;
  return s;
}

struct Row {
  int format, accuracy, consistency;
  RolloutSample sample;
  std::string reference_label;
};

std::vector<Row> six_triples() {
  return {
      {0, 0, 0, unformatted("A"), "A"},
      {0, 1, 0, unformatted("B"), "C"},
      {0, 1, 1, unformatted("B"), "B"},
      {1, 0, 0, parse_output("<think>r</think><answer>C</answer>"), "C"},
      {1, 1, 0, parse_output("<think>r</think><answer>B</answer>"), "A"},
      {1, 1, 1, parse_output("<think>r</think><answer>B</answer>"), "B"},
  };
}

}  // namespace

TEST(Extraction, HandLabeledFixture) {
  std::ifstream in(std::string(SPATIALRL_TEST_DATA) + "/answer_extraction.jsonl");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto lines = split_lines(ss.str());
  ASSERT_EQ(lines.size(), 24u);
  for (const auto& line : lines) {
    const json j = json::parse(line);
    const std::string text = j["text"];
    const std::string labels = j.value("labels", std::string(kDefaultLabels));
    const auto got = extract_option_label(text, labels);
    if (j["expected"].is_null()) {
      EXPECT_FALSE(got.has_value()) << text << " -> " << got.value_or("");
    } else {
      ASSERT_TRUE(got.has_value()) << text;
      EXPECT_EQ(*got, j["expected"].get<std::string>()) << text;
    }
  }
}

TEST(Format, WellFormedOutputs) {
  for (const char* text : {"<think>a</think><answer>B</answer>",
                           "  <think>\nmulti\nline\n</think>\n<answer> the answer is b </answer>\n",
                           "<think></think><answer>(C)</answer>"}) {
    const auto s = parse_output(text);
    EXPECT_TRUE(s.format_ok) << text;
    EXPECT_EQ(format_reward(s), 1);
    EXPECT_TRUE(s.think.has_value());
    EXPECT_TRUE(s.answer.has_value());
  }
  EXPECT_EQ(parse_output("<think> x </think><answer>A</answer>").think, "x");
}

TEST(Format, MalformedOutputs) {
  for (const char* text : {"", "B", "<answer>B</answer>", "<think>a</think>",
                           "<answer>B</answer><think>a</think>",
                           "<think>a</think><answer>B</answer> trailing",
                           "lead <think>a</think><answer>B</answer>",
                           "<think>a<think>b</think><answer>B</answer>",
                           "<think>a</think><answer>B<answer></answer>",
                           "<think>a</think><answer>none</answer>",
                           "<think>a</think><answer>B",
                           "<think>a</think><answer>B</answer><answer>C</answer>"}) {
    const auto s = parse_output(text);
    EXPECT_FALSE(s.format_ok) << text;
    EXPECT_FALSE(s.answer.has_value()) << text;
    EXPECT_FALSE(s.think.has_value()) << text;
    EXPECT_EQ(format_reward(s), 0);
  }
}

TEST(Accuracy, LabelComparison) {
  EXPECT_EQ(accuracy_reward(parse_output("<think>a</think><answer>B</answer>"), "B"), 1);
  EXPECT_EQ(accuracy_reward(parse_output("<think>a</think><answer>C</answer>"), "B"), 0);
  EXPECT_EQ(accuracy_reward(parse_output("B"), "B"), 0);
  EXPECT_EQ(accuracy_reward(parse_output("<think>a</think><answer>C</answer>", "AB"), "C"), 0);
}

TEST(Schedule, StageBoundaries) {
  for (int e : {1, 2}) EXPECT_EQ(schedule_weights(e), (RewardWeights{7, 3, 0, 1}));
  for (int e : {3, 4}) EXPECT_EQ(schedule_weights(e), (RewardWeights{3, 7, 0, 2}));
  for (int e : {5, 6, 12, 100}) EXPECT_EQ(schedule_weights(e), (RewardWeights{1, 7, 2, 3}));
  EXPECT_THROW(schedule_weights(0), std::invalid_argument);
  const auto standard = WeightSchedule::standard();
  for (int e = 1; e <= 12; ++e) EXPECT_EQ(standard.weights(e), schedule_weights(e));
}

TEST(Schedule, CustomTablesAreValidated) {
  WeightSchedule s{{{1, {1, 0, 0, 1}}, {2, {0, 1, 0, 2}}}};
  EXPECT_EQ(s.weights(1).stage, 1);
  EXPECT_EQ(s.weights(9).stage, 2);
  EXPECT_THROW((WeightSchedule{{{2, {1, 0, 0, 1}}}}.validate()), std::invalid_argument);
  EXPECT_THROW((WeightSchedule{{{1, {1, 0, 0, 1}}, {1, {1, 0, 0, 2}}}}.validate()),
               std::invalid_argument);
  EXPECT_THROW((WeightSchedule{{{1, {0, 0, 0, 1}}}}.validate()), std::invalid_argument);
  EXPECT_THROW((WeightSchedule{{{1, {-1, 2, 0, 1}}}}.validate()), std::invalid_argument);
  EXPECT_THROW((WeightSchedule{{{1, {1, 0, 0, 4}}}}.validate()), std::invalid_argument);
  EXPECT_THROW(WeightSchedule{}.validate(), std::invalid_argument);
}

TEST(TruthTable, SixTriplesTimesThreeStages) {
  // Hand-computed totals w_f r' + w_a r'' + w_c r''' for each stage.
  const double expected[3][6] = {{0, 3, 3, 7, 10, 10}, {0, 7, 7, 3, 10, 10}, {0, 7, 9, 1, 8, 10}};
  const int epochs[3] = {1, 3, 5};
  const auto rows = six_triples();
  for (int stage = 0; stage < 3; ++stage) {
    const RewardWeights w = schedule_weights(epochs[stage]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto ref = reference_answering(rows[i].reference_label);
      const auto b = score_rollout(rows[i].sample, question(), w, &ref);
      EXPECT_EQ(b.format, rows[i].format) << i;
      EXPECT_EQ(b.accuracy, rows[i].accuracy) << i;
      EXPECT_EQ(b.consistency, rows[i].consistency) << i;
      EXPECT_EQ(b.total, expected[stage][i]) << "stage " << stage + 1 << " row " << i;
      EXPECT_EQ(b.weights.stage, stage + 1);
    }
  }
}

TEST(Consistency, NoCallsWhenAnswerIsWrong) {
  auto ref = reference_answering("B");
  EXPECT_EQ(consistency_reward(parse_output("<think>r</think><answer>A</answer>"), question(),
                               "B", ref),
            0);
  EXPECT_EQ(consistency_reward(parse_output("garbage"), question(), "B", ref), 0);
  EXPECT_EQ(ref.call_count(), 0u);
}

TEST(Consistency, PromptCarriesReasoningNotVideo) {
  std::string seen;
  MockModelClient ref("ref", [&](const ChatRequest& r) {
    seen = r.text();
    EXPECT_EQ(r.messages[0].content.size(), 1u);
    return std::string("The answer is B");
  });
  const auto s = parse_output("<think>tower drifted right</think><answer>B</answer>");
  EXPECT_EQ(consistency_reward(s, question(), "B", ref), 1);
  EXPECT_NE(seen.find("tower drifted right"), std::string::npos);
  EXPECT_NE(seen.find("B. Right"), std::string::npos);
}

TEST(Consistency, UnavailableIsAbsorbed) {
  MockModelClient ref("ref", [](const ChatRequest&) { return std::string("B"); });
  ref.fail_on_call(1);
  const auto s = parse_output("<think>r</think><answer>B</answer>");
  EXPECT_THROW(consistency_reward(s, question(), "B", ref), ConsistencyUnavailable);
  ref.fail_on_call(2);
  const auto b = score_rollout(s, question(), schedule_weights(5), &ref);
  EXPECT_TRUE(b.consistency_unavailable);
  EXPECT_EQ(b.consistency, 0);
  EXPECT_EQ(b.total, 8.0);
  const json log = json::parse(reward_log_record("s1", b));
  EXPECT_EQ(log["stage"], 3);
  EXPECT_TRUE(log.contains("consistency_unavailable"));
}

TEST(Consistency, NoReferenceMeansZero) {
  const auto s = parse_output("<think>r</think><answer>B</answer>");
  const auto b = score_rollout(s, question(), schedule_weights(5), nullptr);
  EXPECT_EQ(b.consistency, 0);
  EXPECT_EQ(b.total, 8.0);
  EXPECT_THROW(score_rollout(s, question(), RewardWeights{}, nullptr), std::invalid_argument);
}

TEST(Consistency, FuzzedOutputsNeverExceedAccuracy) {
  const std::vector<std::string> pieces = {
      "<think>", "</think>", "<answer>", "</answer>", "A", "B", "C", " ", "\n",
      "the answer is ", "so", "left", "(B)", "<", ">", "answer"};
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 10);
  std::uniform_int_distribution<int> label(0, 2);
  std::size_t formatted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    if (i % 2 == 0) {
      // Half the cases start from a valid skeleton so every branch is hit.
      text = "<think>" + pieces[pick(rng)] + "</think><answer>" + std::string(1, "ABC"[label(rng)]) +
             "</answer>";
      if (i % 4 == 0) text.insert(rng() % text.size(), pieces[pick(rng)]);
    } else {
      for (int k = len(rng); k > 0; --k) text += pieces[pick(rng)];
    }
    const auto s = parse_output(text, "ABC");
    formatted += s.format_ok;
    auto ref = reference_answering(std::string(1, "ABC"[label(rng)]));
    const int acc = accuracy_reward(s, "B");
    const int con = consistency_reward(s, question(), "B", ref);
    ASSERT_LE(con, acc) << text;
    if (acc == 0) ASSERT_EQ(ref.call_count(), 0u) << text;
    // The format flag and extracted fields agree.
    ASSERT_EQ(s.format_ok, s.answer.has_value() && s.think.has_value()) << text;
  }
  EXPECT_GT(formatted, 2000u);
}
