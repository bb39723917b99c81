#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "spatialrl/config.hpp"
#include "spatialrl/dataset.hpp"
#include "spatialrl/errors.hpp"
#include "spatialrl/evaluation.hpp"
#include "spatialrl/image.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/keyframes.hpp"
#include "spatialrl/manifest.hpp"
#include "spatialrl/model_client.hpp"
#include "spatialrl/perception.hpp"
#include "spatialrl/rewards.hpp"
#include "spatialrl/toy_training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatialrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

// Mock runs stamp transcripts with a fixed time so reruns are byte-identical.
constexpr const char* kMockTimestamp = "1970-01-01T00:00:00Z";

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool mock_client = false;
  std::optional<int> max_inflight;
};

PipelineConfig load(const GlobalOptions& g) {
  PipelineConfig c = g.config.empty() ? parse_config("{}") : load_config(g.config);
  if (g.max_inflight) {
    if (*g.max_inflight <= 0) throw InputError("--max-inflight must be positive");
    c.max_inflight = *g.max_inflight;
  }
  return c;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs fn(i) for i in [0, n) on at most `workers` threads. The first
// exception, by index, is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  std::vector<std::jthread> threads;
  for (std::size_t t = 1; t < count; ++t) threads.emplace_back(work);
  work();
  threads.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool safe_file_stem(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

Dataset load_questions(const fs::path& path, std::vector<Rejection>* rejections) {
  IngestResult r = ingest(read_file(path));
  for (const auto& rej : r.rejections) {
    std::cerr << "warning: " << path.string() << ":" << rej.line << " rejected"
              << (rej.id.empty() ? "" : " (" + rej.id + ")") << ": " << rej.reason << "\n";
  }
  if (rejections) *rejections = std::move(r.rejections);
  return std::move(r.dataset);
}

fs::path require_path(const std::string& flag_value, const std::optional<fs::path>& configured,
                      const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (configured) return *configured;
  throw InputError(std::string("no ") + what + " given");
}

std::string rejections_to_jsonl(const std::vector<Rejection>& rejections) {
  std::string out;
  for (const auto& r : rejections) {
    out += json{{"line", r.line}, {"id", r.id}, {"reason", r.reason}}.dump() + "\n";
  }
  return out;
}

// ---- keyframes ----

struct KeyframesOptions {
  std::vector<std::string> inputs;
  std::string out;
  std::optional<double> epsilon;
};

std::vector<fs::path> video_directories(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& input : inputs) {
    const fs::path dir(input);
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + input);
    bool has_frames = false;
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && is_frame_file(e.path())) has_frames = true;
      if (e.is_directory()) subdirs.push_back(e.path());
    }
    if (has_frames) {
      out.push_back(dir);
      continue;
    }
    std::sort(subdirs.begin(), subdirs.end());
    std::size_t found = 0;
    for (const auto& sub : subdirs) {
      for (const auto& e : fs::directory_iterator(sub)) {
        if (e.is_regular_file() && is_frame_file(e.path())) {
          out.push_back(sub);
          ++found;
          break;
        }
      }
    }
    if (found == 0) throw InputError("no frame images under " + input);
  }
  return out;
}

int cmd_keyframes(const GlobalOptions& g, const KeyframesOptions& o) {
  PipelineConfig config = load(g);
  if (o.epsilon) config.keyframes.epsilon = *o.epsilon;
  if (g.seed) config.keyframes.ransac.seed = *g.seed;
  config.validate();

  const auto dirs = video_directories(o.inputs);
  std::set<std::string> ids;
  for (const auto& d : dirs) {
    if (!ids.insert(d.filename().string()).second) {
      throw InputError("duplicate video id " + d.filename().string());
    }
    if (!safe_file_stem(d.filename().string())) {
      throw InputError("video directory name not usable as an id: " + d.string());
    }
  }

  const fs::path out(o.out);
  fs::create_directories(out);
  std::vector<ManifestEntry> entries(dirs.size());
  parallel_for(dirs.size(), config.max_inflight, [&](std::size_t i) {
    const FrameSequence seq = load_frame_directory(dirs[i]);
    ManifestEntry& e = entries[i];
    e.keyframes = extract_keyframes(seq, config.keyframes);
    e.frame_count = seq.frames.size();
    const fs::path frame_dir = out / "frames" / seq.source_id;
    fs::create_directories(frame_dir);
    for (const auto& k : e.keyframes.keyframes) {
      char name[32];
      std::snprintf(name, sizeof(name), "kf_%06lld.png", static_cast<long long>(k.frame_index));
      const auto png = encode_png(seq.frames[k.position]);
      write_file_atomic(frame_dir / name,
                        std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
      e.frame_files.push_back((fs::path("frames") / seq.source_id / name).generic_string());
    }
  });

  std::string manifest;
  for (const auto& e : entries) {
    manifest += manifest_to_json(e) + "\n";
    std::cout << e.keyframes.source_id << ": " << e.keyframes.keyframes.size() << " of "
              << e.frame_count << " frames kept\n";
  }
  write_file_atomic(out / "manifest.jsonl", manifest);
  return kExitOk;
}

// ---- perceive ----

struct PerceiveOptions {
  std::string manifest;
  std::string questions;
  std::string out;
  std::string fixtures;
};

int cmd_perceive(const GlobalOptions& g, const PerceiveOptions& o) {
  const PipelineConfig config = load(g);
  const fs::path manifest_path(o.manifest);
  const auto entries = parse_manifest(read_file(manifest_path));
  std::map<std::string, const ManifestEntry*> by_video;
  for (const auto& e : entries) by_video[e.keyframes.source_id] = &e;

  std::vector<Rejection> rejections;
  const Dataset dataset =
      load_questions(require_path(o.questions, config.questions, "questions file"), &rejections);

  std::unique_ptr<ModelClient> client;
  if (g.mock_client) {
    auto mock = std::make_unique<MockModelClient>("mock-perception", perception_mock_responder());
    if (!o.fixtures.empty()) mock->load_fixtures(read_file(o.fixtures));
    client = std::move(mock);
  } else {
    client = std::make_unique<HttpModelClient>(config.perception.http(config.max_inflight));
  }
  const std::string created_at = g.mock_client ? kMockTimestamp : utc_now();
  const PerceptionConfig request = config.perception_request();

  const fs::path out(o.out);
  fs::create_directories(out);
  std::vector<const Question*> todo;
  std::size_t skipped = 0;
  for (const auto& q : dataset.questions) {
    if (safe_file_stem(q.id) && fs::exists(out / (q.id + ".transcript.jsonl"))) {
      ++skipped;
    } else {
      todo.push_back(&q);
    }
  }

  std::vector<std::string> failures(todo.size());
  parallel_for(todo.size(), config.max_inflight, [&](std::size_t i) {
    const Question& q = *todo[i];
    try {
      if (!safe_file_stem(q.id)) throw InputError("question id not usable as a file name");
      const auto it = by_video.find(q.video_id);
      if (it == by_video.end()) throw InputError("video not in manifest");
      const ManifestEntry& e = *it->second;
      FrameSequence frames;
      frames.source_id = e.keyframes.source_id;
      for (std::size_t k = 0; k < e.frame_files.size(); ++k) {
        Frame f = read_frame(manifest_path.parent_path() / e.frame_files[k]);
        f.set_index(e.keyframes.keyframes[k].frame_index);
        frames.frames.push_back(std::move(f));
      }
      const SemanticTranscript t =
          build_transcript(*client, e.keyframes, frames, q, request, created_at);
      write_file_atomic(out / (q.id + ".transcript.jsonl"), transcript_to_jsonl(t));
    } catch (const std::exception& ex) {
      failures[i] = json{{"id", q.id}, {"video_id", q.video_id}, {"error", ex.what()}}.dump();
    }
  });

  std::string failure_report;
  std::size_t failed = 0;
  for (const auto& f : failures) {
    if (f.empty()) continue;
    failure_report += f + "\n";
    ++failed;
  }
  for (const auto& r : rejections) {
    failure_report += json{{"id", r.id}, {"line", r.line}, {"error", r.reason}}.dump() + "\n";
    ++failed;
  }
  const fs::path failure_path = out / "failures.jsonl";
  if (failed > 0) {
    write_file_atomic(failure_path, failure_report);
  } else {
    fs::remove(failure_path);
  }
  std::cout << "perceived " << todo.size() - (failed - rejections.size()) << ", resumed past "
            << skipped << ", failed " << failed << "\n";
  if (failed > 0) {
    std::cerr << "failures written to " << failure_path.string() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

// ---- train-toy ----

struct TrainOptionsCli {
  std::string out;
  std::optional<double> learning_rate;
  std::optional<double> kl_coef;
  std::optional<int> epochs;
};

int cmd_train_toy(const GlobalOptions& g, const TrainOptionsCli& o) {
  PipelineConfig config = load(g);
  if (g.seed) config.grpo.seed = *g.seed;
  if (o.learning_rate) config.grpo.learning_rate = *o.learning_rate;
  if (o.kl_coef) config.grpo.kl_coef = *o.kl_coef;
  if (o.epochs) config.grpo.epochs = *o.epochs;
  config.validate();

  SyntheticTask task(config.toy);
  ToyPolicy policy = make_toy_policy(task);
  TrainOptions options;
  options.schedule = config.schedule;
  TrainingTrace trace;
  try {
    trace = train_toy(task, policy, config.grpo, options);
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: training diverged at step " << e.step() << ": " << e.what() << "\n";
    return kExitPartial;
  }

  const fs::path out(o.out);
  fs::create_directories(out);
  write_file_atomic(out / "metrics.jsonl", trace.to_jsonl());
  const json snapshot = {{"contexts", policy.contexts()},
                         {"vocab", policy.vocab()},
                         {"theta", std::vector<double>(policy.parameters().begin(),
                                                       policy.parameters().end())}};
  write_file_atomic(out / "policy.json", snapshot.dump() + "\n");

  int stage = 0;
  for (const auto& s : trace.steps) {
    if (s.weights.stage != stage) {
      stage = s.weights.stage;
      std::cout << "stage " << stage << " from epoch " << s.epoch << " (step " << s.step
                << "): weights " << s.weights.format << ":" << s.weights.accuracy << ":"
                << s.weights.consistency << "\n";
    }
  }
  const PolicyMetrics final_metrics = evaluate_policy(task, policy, config.grpo.temperature);
  std::printf("steps %zu, final expected accuracy %.4f, consistency %.4f\n", trace.steps.size(),
              final_metrics.accuracy, final_metrics.consistency);
  if (trace.consistency_unavailable > 0) {
    std::cerr << "warning: consistency check unavailable for " << trace.consistency_unavailable
              << " samples\n";
  }
  return kExitOk;
}

// ---- eval ----

struct EvalOptions {
  std::string questions;
  std::string predictions;
  std::string transcripts;
  std::string consistency;
  std::string out;
  std::optional<int> fold;
};

int cmd_eval(const GlobalOptions& g, const EvalOptions& o) {
  PipelineConfig config = load(g);
  if (g.seed) config.eval_seed = *g.seed;
  if (o.predictions.empty() == o.transcripts.empty()) {
    throw InputError("give exactly one of --predictions or --transcripts");
  }
  std::vector<Rejection> rejections;
  const Dataset dataset =
      load_questions(require_path(o.questions, config.questions, "questions file"), &rejections);

  std::vector<std::string> split;
  if (o.fold) {
    const FoldAssignment folds = kfold_split(dataset, config.folds, config.eval_seed);
    if (*o.fold < 0 || *o.fold >= config.folds) throw InputError("--fold out of range");
    for (const auto& q : dataset.questions) {
      if (folds.fold.at(q.id) == *o.fold) split.push_back(q.id);
    }
  }

  const fs::path out(o.out);
  fs::create_directories(out);
  Predictions predictions;
  std::vector<std::string> failures;
  if (!o.predictions.empty()) {
    predictions = parse_predictions(read_file(o.predictions));
  } else {
    std::unique_ptr<ModelClient> client;
    if (g.mock_client) {
      client = std::make_unique<MockModelClient>("mock-policy", policy_mock_responder());
    } else {
      client = std::make_unique<HttpModelClient>(config.policy.http(config.max_inflight));
    }
    const fs::path dir(o.transcripts);
    if (!fs::is_directory(dir)) throw InputError("not a transcript directory: " + o.transcripts);
    std::vector<const Question*> qs;
    for (const auto& q : dataset.questions) qs.push_back(&q);
    std::vector<std::optional<std::string>> labels(qs.size());
    std::vector<std::string> errors(qs.size());
    parallel_for(qs.size(), config.max_inflight, [&](std::size_t i) {
      const Question& q = *qs[i];
      const fs::path path = dir / (q.id + ".transcript.jsonl");
      if (!safe_file_stem(q.id) || !fs::exists(path)) {
        errors[i] = "no transcript";
        return;
      }
      try {
        const SemanticTranscript t = transcript_from_jsonl(read_file(path));
        ChatRequest request;
        request.model = config.policy.model;
        request.temperature = config.policy.temperature;
        request.max_tokens = config.policy.max_tokens;
        request.messages.push_back(
            {"user", {ContentPart::from_text(build_policy_prompt(q, t))}});
        const std::string output = client->complete(request);
        const RolloutSample sample = parse_output(output, q.labels());
        labels[i] = sample.answer ? sample.answer : extract_option_label(output, q.labels());
        if (!labels[i]) errors[i] = "no option label in policy output";
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < qs.size(); ++i) {
      if (labels[i]) predictions[qs[i]->id] = *labels[i];
      if (!errors[i].empty()) {
        failures.push_back(json{{"id", qs[i]->id}, {"error", errors[i]}}.dump());
      }
    }
    write_file_atomic(out / "predictions.jsonl", predictions_to_jsonl(predictions));
  }

  EvalReport report = score(predictions, dataset, split);
  if (!o.consistency.empty()) {
    const auto judgments = parse_consistency(read_file(o.consistency));
    if (judgments.empty()) throw InputError("no consistency judgments in " + o.consistency);
    report.consistency = consistency_proportion(judgments);
  }
  write_file_atomic(out / "report.json", report.to_json());
  write_file_atomic(out / "report.txt", report.to_text());
  std::cout << report.to_text();
  if (predictions.empty()) std::cerr << "warning: no predictions; every question counts as wrong\n";
  if (!report.missing.empty()) {
    std::cerr << "warning: " << report.missing.size()
              << " questions lack predictions and count as wrong\n";
  }
  if (!report.extraneous.empty()) {
    std::cerr << "warning: " << report.extraneous.size()
              << " predictions refer to questions outside the split\n";
  }
  if (!failures.empty()) {
    std::string text;
    for (const auto& f : failures) text += f + "\n";
    write_file_atomic(out / "failures.jsonl", text);
    std::cerr << failures.size() << " questions could not be answered; see failures.jsonl\n";
  } else {
    fs::remove(out / "failures.jsonl");
  }
  if (!rejections.empty()) {
    write_file_atomic(out / "rejections.jsonl", rejections_to_jsonl(rejections));
    return kExitPartial;
  }
  fs::remove(out / "rejections.jsonl");
  return failures.empty() ? kExitOk : kExitPartial;
}

// ---- filter ----

struct FilterOptions {
  std::string questions;
  std::string judgments;
  std::string out;
};

int cmd_filter(const GlobalOptions& g, const FilterOptions& o) {
  const PipelineConfig config = load(g);
  std::vector<Rejection> rejections;
  const Dataset dataset =
      load_questions(require_path(o.questions, config.questions, "questions file"), &rejections);
  const JudgmentTable table =
      parse_judgments(read_file(require_path(o.judgments, config.judgments, "judgments file")));

  const FilterResult result = semantic_bias_filter(dataset, table);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  auto records = [&](const std::vector<std::string>& ids) {
    std::string text;
    for (const auto& id : ids) text += question_to_json(*dataset.find(id)) + "\n";
    return text;
  };
  std::string flagged;
  std::size_t flag_count = 0;
  for (const auto& q : dataset.questions) {
    if (blind_test_flag(dataset, table).at(q.id)) {
      flagged += json{{"id", q.id}, {"flag", "answerable without video"}}.dump() + "\n";
      ++flag_count;
    }
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  write_file_atomic(out / "kept.jsonl", records(result.kept));
  write_file_atomic(out / "excluded.jsonl", records(result.excluded));
  write_file_atomic(out / "flagged.jsonl", flagged);
  std::cout << "kept " << result.kept.size() << ", excluded " << result.excluded.size()
            << ", flagged for review " << flag_count << "\n";
  if (!rejections.empty()) {
    write_file_atomic(out / "rejections.jsonl", rejections_to_jsonl(rejections));
    return kExitPartial;
  }
  fs::remove(out / "rejections.jsonl");
  return kExitOk;
}

// ---- split ----

struct SplitOptions {
  std::string questions;
  std::string out;
  std::optional<int> folds;
};

int cmd_split(const GlobalOptions& g, const SplitOptions& o) {
  PipelineConfig config = load(g);
  if (g.seed) config.eval_seed = *g.seed;
  if (o.folds) config.folds = *o.folds;
  const Dataset dataset =
      load_questions(require_path(o.questions, config.questions, "questions file"), nullptr);
  FoldAssignment folds;
  try {
    folds = kfold_split(dataset, config.folds, config.eval_seed);
  } catch (const InvalidFoldCount& e) {
    throw InputError(e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  write_file_atomic(o.out, folds_to_jsonl(folds));
  const auto sizes = folds.sizes();
  std::cout << "fold sizes:";
  for (auto s : sizes) std::cout << " " << s;
  std::cout << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key-frame extraction, perception, reward and evaluation pipeline"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the seed used by the subcommand");
  app.add_flag("--mock-client", g.mock_client, "Use deterministic offline model clients");
  app.add_option("--max-inflight", g.max_inflight, "Bound on concurrent work items");

  KeyframesOptions ko;
  auto* keyframes = app.add_subcommand("keyframes", "Select key-frames from frame directories");
  keyframes->add_option("inputs", ko.inputs, "Frame directory, or a directory of them")
      ->required();
  keyframes->add_option("--out", ko.out, "Output directory")->required();
  keyframes->add_option("--epsilon", ko.epsilon, "Overlap threshold");

  PerceiveOptions po;
  auto* perceive = app.add_subcommand("perceive", "Describe key-frames as semantic transcripts");
  perceive->add_option("--manifest", po.manifest, "Key-frame manifest")->required();
  perceive->add_option("--questions", po.questions, "QA records (JSONL)");
  perceive->add_option("--out", po.out, "Transcript directory")->required();
  perceive->add_option("--fixtures", po.fixtures, "Recorded replies for the mock client");

  TrainOptionsCli to;
  auto* train = app.add_subcommand("train-toy", "GRPO on the synthetic multiple-choice task");
  train->add_option("--out", to.out, "Output directory")->required();
  train->add_option("--learning-rate", to.learning_rate, "Gradient-ascent step size");
  train->add_option("--kl-coef", to.kl_coef, "KL penalty weight");
  train->add_option("--epochs", to.epochs, "Passes over the synthetic questions");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Score predictions per task category");
  eval->add_option("--questions", eo.questions, "QA records (JSONL)");
  eval->add_option("--predictions", eo.predictions, "Predictions (JSONL)");
  eval->add_option("--transcripts", eo.transcripts, "Answer from transcripts with the policy");
  eval->add_option("--consistency", eo.consistency, "Consistency judgments (JSONL)");
  eval->add_option("--fold", eo.fold, "Score only this cross-validation fold");
  eval->add_option("--out", eo.out, "Report directory")->required();

  FilterOptions fo;
  auto* filter = app.add_subcommand("filter", "Semantic-bias and blind-test filtering");
  filter->add_option("--questions", fo.questions, "QA records (JSONL)");
  filter->add_option("--judgments", fo.judgments, "Judgment table (JSONL)");
  filter->add_option("--out", fo.out, "Output directory")->required();

  SplitOptions so;
  auto* split = app.add_subcommand("split", "Assign questions to cross-validation folds");
  split->add_option("--questions", so.questions, "QA records (JSONL)");
  split->add_option("--folds", so.folds, "Fold count");
  split->add_option("--out", so.out, "Fold assignment file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*keyframes) return cmd_keyframes(g, ko);
    if (*perceive) return cmd_perceive(g, po);
    if (*train) return cmd_train_toy(g, to);
    if (*eval) return cmd_eval(g, eo);
    if (*filter) return cmd_filter(g, fo);
    if (*split) return cmd_split(g, so);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitInvalid;
}
