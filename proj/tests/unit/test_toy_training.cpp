#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "spatialrl/config.hpp"
#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/toy_training.hpp"

using namespace spatialrl;
using nlohmann::json;

namespace {

TrainingTrace run(double lr, double kl, int epochs, double clip = 0.0) {
  SyntheticTask task(ToyTaskConfig{});
  ToyPolicy policy = make_toy_policy(task);
  GrpoConfig config = toy_grpo_defaults();
  config.learning_rate = lr;
  config.kl_coef = kl;
  config.epochs = epochs;
  config.max_grad_norm = clip;
  return train_toy(task, policy, config);
}

double max_drift(const TrainingTrace& t) {
  double d = 0.0;
  for (const auto& s : t.steps) d = std::max(d, s.max_logp_drift);
  return d;
}

}  // namespace

TEST(SyntheticTask, AnswersFollowThePatternRule) {
  SyntheticTask task(ToyTaskConfig{});
  ASSERT_EQ(task.items().size(), 120u);
  EXPECT_EQ(task.vocab(), 7);
  for (const auto& item : task.items()) {
    const int a = item.pattern % 3, b = item.pattern / 3;
    EXPECT_EQ(item.correct, (a + 2 * b) % 3);
    EXPECT_EQ(item.question.ground_truth, std::string(1, static_cast<char>('A' + item.correct)));
    EXPECT_EQ(item.question.options.size(), 3u);
  }
}

TEST(SyntheticTask, RenderedOutputsParse) {
  SyntheticTask task(ToyTaskConfig{});
  const std::vector<int> tokens = {task.cue_token(0), task.cue_token(2), task.end_think_token(),
                                   task.answer_token(1)};
  const auto sample = parse_output(task.render(tokens), "ABC");
  EXPECT_TRUE(sample.format_ok);
  EXPECT_EQ(sample.answer, "B");
}

TEST(SyntheticTask, ReferenceAnswersTheMajorityCue) {
  SyntheticTask task(ToyTaskConfig{});
  const Question& q = task.items()[0].question;
  const std::string gt = q.ground_truth;
  const int c = gt[0] - 'A';
  const std::vector<int> tokens = {task.cue_token(c), task.cue_token(c), task.cue_token((c + 1) % 3),
                                   task.end_think_token(), task.answer_token(c)};
  EXPECT_EQ(consistency_reward(parse_output(task.render(tokens), "ABC"), q, gt, task.reference()),
            1);
  const std::vector<int> tie = {task.cue_token(c), task.cue_token((c + 1) % 3),
                                task.end_think_token(), task.answer_token(c)};
  EXPECT_EQ(consistency_reward(parse_output(task.render(tie), "ABC"), q, gt, task.reference()), 0);
}

TEST(ToyTraining, UniformPolicyStartsNearChance) {
  SyntheticTask task(ToyTaskConfig{});
  const auto m = evaluate_policy(task, make_toy_policy(task), 1.0);
  EXPECT_NEAR(m.accuracy, 1.0 / 3.0, 0.05);
  EXPECT_GT(m.format, 0.85);
}

TEST(ToyTraining, ConvergesWithin500Steps) {
  const auto start = std::chrono::steady_clock::now();
  const auto trace = run(1.0, 0.001, 13);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_GE(trace.steps.size(), 500u);
  EXPECT_NEAR(trace.steps.front().expected.accuracy, 1.0 / 3.0, 0.05);
  int reached = 0;
  for (const auto& s : trace.steps) {
    if (s.step > 500) break;
    if (s.expected.accuracy > 0.9) {
      reached = s.step;
      break;
    }
  }
  EXPECT_GT(reached, 0);
  EXPECT_LT(seconds, 60.0);
}

TEST(ToyTraining, StageSwitchesAtEpochBoundaries) {
  const auto trace = run(1.0, 0.001, 6);
  ASSERT_EQ(trace.steps.size(), 240u);
  for (std::size_t i = 1; i < trace.steps.size(); ++i) {
    const auto& prev = trace.steps[i - 1];
    const auto& cur = trace.steps[i];
    EXPECT_EQ(cur.weights, schedule_weights(cur.epoch));
    if (cur.weights.stage != prev.weights.stage) {
      EXPECT_TRUE((prev.epoch == 2 && cur.epoch == 3) || (prev.epoch == 4 && cur.epoch == 5))
          << prev.epoch << " -> " << cur.epoch;
    }
  }
  EXPECT_EQ(trace.steps[79].epoch, 2);
  EXPECT_EQ(trace.steps[80].weights.stage, 2);
  EXPECT_EQ(trace.steps[160].weights.stage, 3);
}

TEST(ToyTraining, ZeroLearningRateIsFlat) {
  const auto trace = run(0.0, 0.001, 2);
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.expected.accuracy, trace.steps.front().expected.accuracy);
    EXPECT_EQ(s.max_logp_drift, 0.0);
  }
}

TEST(ToyTraining, MetricsFileCarriesFourSeries) {
  const auto trace = run(1.0, 0.001, 1);
  const auto lines = split_lines(trace.to_jsonl());
  ASSERT_EQ(lines.size(), 40u);
  for (const auto& line : lines) {
    const json j = json::parse(line);
    for (const char* key : {"mean_accuracy_reward", "mean_format_reward",
                            "consistency_accuracy_ratio", "mean_response_length", "step",
                            "epoch", "stage"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
  }
}

TEST(ToyTraining, SeededRunMatchesFrozenTrace) {
  std::ifstream in(std::string(SPATIALRL_TEST_DATA) + "/toy_trace_seed7.json");
  const json golden = json::parse(in);
  const auto trace = run(1.0, 0.001, 12);
  ASSERT_EQ(trace.steps.size(), 480u);
  for (const auto& g : golden) {
    const auto& s = trace.steps[g["step"].get<std::size_t>() - 1];
    EXPECT_EQ(s.epoch, g["epoch"]);
    EXPECT_EQ(s.weights.stage, g["stage"]);
    EXPECT_NEAR(s.mean_accuracy, g["mean_accuracy_reward"].get<double>(), 1e-12);
    EXPECT_NEAR(s.expected.accuracy, g["expected_accuracy"].get<double>(), 1e-9);
    EXPECT_NEAR(s.expected.consistency, g["expected_consistency"].get<double>(), 1e-9);
    EXPECT_NEAR(s.max_logp_drift, g["max_logp_drift"].get<double>(), 1e-9);
    EXPECT_NEAR(s.objective, g["objective"].get<double>(), 1e-12);
  }
}

TEST(ToyTraining, RepeatRunsAreIdentical) {
  EXPECT_EQ(run(1.0, 0.001, 1).to_jsonl(), run(1.0, 0.001, 1).to_jsonl());
}

TEST(ToyTraining, KlAnchoringBoundsDrift) {
  const double anchored = max_drift(run(1.0, 1000.0, 12, 1.0));
  const double free = max_drift(run(1.0, 0.0, 12, 1.0));
  EXPECT_LT(anchored, free);
}

TEST(ToyTraining, DivergenceIsReported) {
  EXPECT_THROW(run(1.0, 1000.0, 12), TrainingDiverged);
}
