#ifndef SPATIALRL_CONFIG_HPP_
#define SPATIALRL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "spatialrl/grpo.hpp"
#include "spatialrl/keyframes.hpp"
#include "spatialrl/model_client.hpp"
#include "spatialrl/perception.hpp"
#include "spatialrl/rewards.hpp"
#include "spatialrl/toy_training.hpp"

namespace spatialrl {

struct ClientSection {
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  // Name of the environment variable holding the API key.
  std::string api_key_env = "SPATIALRL_API_KEY";
  int max_retries = 4;
  int timeout_seconds = 120;
  double temperature = 0.0;
  int max_tokens = 512;

  // Reads the key from the environment; throws InputError without an
  // endpoint.
  HttpClientConfig http(int max_inflight) const;

  static ClientSection with_limits(double temperature, int max_tokens) {
    ClientSection c;
    c.temperature = temperature;
    c.max_tokens = max_tokens;
    return c;
  }
};

// GrpoConfig defaults with a learning rate suited to the tabular toy
// policy.
GrpoConfig toy_grpo_defaults();

struct PipelineConfig {
  KeyframeConfig keyframes;
  ClientSection perception;
  int max_inflight = 4;
  ClientSection consistency = ClientSection::with_limits(0.0, 256);
  WeightSchedule schedule = WeightSchedule::standard();
  ClientSection policy = ClientSection::with_limits(0.5, 2048);
  GrpoConfig grpo = toy_grpo_defaults();
  ToyTaskConfig toy;
  int folds = 5;
  std::uint64_t eval_seed = 0;
  std::optional<std::filesystem::path> questions;
  std::optional<std::filesystem::path> judgments;

  PerceptionConfig perception_request() const;
  ConsistencyConfig consistency_request() const;

  // Throws InputError on out-of-range values or unresolvable paths.
  void validate() const;
};

// Parses a JSON config; absent keys keep their defaults and unknown keys are
// rejected. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace spatialrl

#endif  // SPATIALRL_CONFIG_HPP_
