#include "spatialrl/config.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <set>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects any it did not ask
// for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InputError("config section '" + name_ + "' is not an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw InputError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, name_.empty() ? key : name_ + "." + key);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw InputError("unknown config key '" + (name_.empty() ? key : name_ + "." + key) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_client(Section& s, ClientSection& c) {
  s.get("endpoint", c.endpoint);
  s.get("path", c.path);
  s.get("model", c.model);
  s.get("api_key_env", c.api_key_env);
  s.get("max_retries", c.max_retries);
  s.get("timeout_seconds", c.timeout_seconds);
  s.get("temperature", c.temperature);
  s.get("max_tokens", c.max_tokens);
  s.finish();
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void check_client(const ClientSection& c, const std::string& name) {
  if (c.max_retries < 0 || c.timeout_seconds <= 0 || c.max_tokens <= 0 || c.temperature < 0.0) {
    throw InputError("config section '" + name + "' has out-of-range values");
  }
}

}  // namespace

GrpoConfig toy_grpo_defaults() {
  GrpoConfig c;
  c.learning_rate = 1.0;
  c.seed = 7;
  return c;
}

HttpClientConfig ClientSection::http(int max_inflight) const {
  if (endpoint.empty()) throw InputError("no client endpoint configured");
  HttpClientConfig out;
  out.endpoint = endpoint;
  out.path = path;
  out.model = model;
  if (!api_key_env.empty()) {
    if (const char* key = std::getenv(api_key_env.c_str())) out.api_key = key;
  }
  out.retry.max_retries = max_retries;
  out.max_inflight = max_inflight;
  out.timeout_seconds = timeout_seconds;
  return out;
}

PerceptionConfig PipelineConfig::perception_request() const {
  return {perception.model, perception.temperature, perception.max_tokens};
}

ConsistencyConfig PipelineConfig::consistency_request() const {
  return {consistency.model, consistency.temperature, consistency.max_tokens};
}

void PipelineConfig::validate() const {
  if (!(keyframes.epsilon > 0.0 && keyframes.epsilon < 1.0)) {
    throw InputError("keyframes.epsilon must lie in (0, 1)");
  }
  if (keyframes.max_keyframes < 2) throw InputError("keyframes.max_keyframes must be >= 2");
  if (keyframes.min_inliers < 4) throw InputError("keyframes.min_inliers must be >= 4");
  const auto& f = keyframes.features;
  if (f.max_keypoints <= 0 || f.fast_threshold <= 0 || f.pyramid_levels <= 0 ||
      f.scale_factor <= 1.0 || f.patch_size <= 0 || f.edge_threshold < 0) {
    throw InputError("keyframes.features has out-of-range values");
  }
  if (!(keyframes.matching.ratio > 0.0 && keyframes.matching.ratio <= 1.0)) {
    throw InputError("keyframes.matching.ratio must lie in (0, 1]");
  }
  const auto& r = keyframes.ransac;
  if (r.reprojection_threshold <= 0.0 || r.max_iterations <= 0 || !(r.confidence > 0.0 && r.confidence < 1.0)) {
    throw InputError("keyframes.ransac has out-of-range values");
  }
  if (max_inflight <= 0) throw InputError("max_inflight must be positive");
  check_client(perception, "perception");
  check_client(consistency, "consistency");
  check_client(policy, "policy");
  try {
    schedule.validate();
    grpo.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (toy.num_options < 2 || toy.num_options > 8 || toy.num_questions <= 0 ||
      toy.questions_per_step <= 0 || toy.max_think_tokens <= 0) {
    throw InputError("toy section has out-of-range values");
  }
  if (folds < 2) throw InputError("eval.folds must be >= 2");
  for (const auto* p : {&questions, &judgments}) {
    if (*p && !std::filesystem::exists(**p)) {
      throw InputError("config path does not exist: " + (*p)->string());
    }
  }
}

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  Section top(root, "");

  if (auto s = top.sub("keyframes")) {
    s->get("epsilon", c.keyframes.epsilon);
    s->get("max_keyframes", c.keyframes.max_keyframes);
    s->get("min_inliers", c.keyframes.min_inliers);
    if (auto f = s->sub("features")) {
      f->get("max_keypoints", c.keyframes.features.max_keypoints);
      f->get("fast_threshold", c.keyframes.features.fast_threshold);
      f->get("pyramid_levels", c.keyframes.features.pyramid_levels);
      f->get("scale_factor", c.keyframes.features.scale_factor);
      f->get("edge_threshold", c.keyframes.features.edge_threshold);
      f->get("patch_size", c.keyframes.features.patch_size);
      f->get("harris_k", c.keyframes.features.harris_k);
      f->finish();
    }
    if (auto m = s->sub("matching")) {
      m->get("ratio", c.keyframes.matching.ratio);
      m->get("cross_check", c.keyframes.matching.cross_check);
      m->finish();
    }
    if (auto r = s->sub("ransac")) {
      r->get("threshold", c.keyframes.ransac.reprojection_threshold);
      r->get("max_iterations", c.keyframes.ransac.max_iterations);
      r->get("confidence", c.keyframes.ransac.confidence);
      r->get("seed", c.keyframes.ransac.seed);
      r->finish();
    }
    s->finish();
  }
  if (auto s = top.sub("perception")) {
    s->get("max_inflight", c.max_inflight);
    if (auto client = s->sub("client")) read_client(*client, c.perception);
    s->finish();
  }
  if (auto s = top.sub("reward")) {
    if (auto client = s->sub("consistency_client")) read_client(*client, c.consistency);
    if (const json* stages = s->raw("stages")) {
      if (!stages->is_array()) throw InputError("reward.stages must be an array");
      c.schedule.entries.clear();
      int stage = 0;
      for (const auto& e : *stages) {
        Section es(e, "reward.stages[]");
        WeightSchedule::Entry entry;
        entry.weights.stage = ++stage;
        es.get("first_epoch", entry.first_epoch);
        es.get("format", entry.weights.format);
        es.get("accuracy", entry.weights.accuracy);
        es.get("consistency", entry.weights.consistency);
        es.finish();
        c.schedule.entries.push_back(entry);
      }
    }
    s->finish();
  }
  if (auto s = top.sub("policy")) {
    read_client(*s, c.policy);
  }
  if (auto s = top.sub("grpo")) {
    s->get("group_size", c.grpo.group_size);
    s->get("clip_epsilon", c.grpo.clip_epsilon);
    s->get("kl_coef", c.grpo.kl_coef);
    s->get("learning_rate", c.grpo.learning_rate);
    s->get("temperature", c.grpo.temperature);
    s->get("max_response_length", c.grpo.max_response_length);
    s->get("input_length", c.grpo.input_length);
    s->get("epochs", c.grpo.epochs);
    s->get("seed", c.grpo.seed);
    s->get("advantage_delta", c.grpo.advantage_delta);
    s->get("max_grad_norm", c.grpo.max_grad_norm);
    std::string level;
    s->get("ratio_level", level);
    if (level == "token") {
      c.grpo.ratio_level = RatioLevel::kToken;
    } else if (level == "sequence" || level.empty()) {
      c.grpo.ratio_level = RatioLevel::kSequence;
    } else {
      throw InputError("grpo.ratio_level must be 'sequence' or 'token'");
    }
    s->finish();
  }
  if (auto s = top.sub("toy")) {
    s->get("num_options", c.toy.num_options);
    s->get("num_questions", c.toy.num_questions);
    s->get("questions_per_step", c.toy.questions_per_step);
    s->get("max_think_tokens", c.toy.max_think_tokens);
    s->get("seed", c.toy.seed);
    s->finish();
  }
  if (auto s = top.sub("eval")) {
    s->get("folds", c.folds);
    s->get("seed", c.eval_seed);
    s->finish();
  }
  if (auto s = top.sub("paths")) {
    std::string questions;
    std::string judgments;
    s->get("questions", questions);
    s->get("judgments", judgments);
    if (!questions.empty()) c.questions = resolve(questions, base_dir);
    if (!judgments.empty()) c.judgments = resolve(judgments, base_dir);
    s->finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

}  // namespace spatialrl
