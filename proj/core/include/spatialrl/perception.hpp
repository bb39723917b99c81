#ifndef SPATIALRL_PERCEPTION_HPP_
#define SPATIALRL_PERCEPTION_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/image.hpp"
#include "spatialrl/keyframes.hpp"
#include "spatialrl/model_client.hpp"
#include "spatialrl/question.hpp"

namespace spatialrl {

inline constexpr std::string_view kNoneObserved = "none observed";
inline constexpr std::string_view kInitialObservation = "initial observation";

// Semantic description of one key-frame: the agent's inferred motion, the
// change in spatial information, and what bears on the question.
struct SemanticRecord {
  std::int64_t keyframe_index = 0;
  std::string action;
  std::string delta_information;
  std::string q_related;
  std::string raw;
  std::vector<std::string> warnings;

  bool operator==(const SemanticRecord&) const = default;
};

struct SemanticTranscript {
  std::string question_id;
  std::string video_id;
  std::string model_id;
  std::string created_at;
  std::vector<SemanticRecord> records;  // ordered by keyframe_index

  bool operator==(const SemanticTranscript&) const = default;
};

struct PerceptionConfig {
  std::string model;  // forwarded in requests; empty uses the client default
  double temperature = 0.0;
  int max_tokens = 512;
};

// Perception prompts. They carry the question text but not its options.
std::string first_frame_prompt(const Question& question);
std::string frame_pair_prompt(const Question& question);

// Splits a response into its "Action:", "Changes:" and "Task-relevant:"
// sections (common aliases accepted). Missing sections become
// "none observed" with a warning. Throws PerceptionUnavailable when the
// response is blank.
SemanticRecord parse_semantic_response(std::string_view response, std::int64_t keyframe_index);

// Throw PerceptionUnavailable when the client fails or answers blank.
SemanticRecord describe_first_frame(ModelClient& client, const Frame& frame,
                                    const Question& question,
                                    const PerceptionConfig& config = {});
SemanticRecord describe_frame_pair(ModelClient& client, const Frame& previous,
                                   const Frame& current, const Question& question,
                                   const PerceptionConfig& config = {});

// One record per key-frame, requested strictly in order. Any failure
// propagates and no transcript is returned.
SemanticTranscript build_transcript(ModelClient& client, const KeyFrameSet& keyframes,
                                    const FrameSequence& frames, const Question& question,
                                    const PerceptionConfig& config = {},
                                    std::string created_at = {});

// Question text followed by one "X. option" line per option.
std::string render_question(const Question& question);
// Text stand-in for the video: one line per key-frame record.
std::string render_transcript(const SemanticTranscript& transcript);
// Reasoning prompt for the text-only policy.
std::string build_policy_prompt(const Question& question, const SemanticTranscript& transcript);

// Line-delimited JSON, one record per line; the transcript fields repeat on
// every line.
std::string transcript_to_jsonl(const SemanticTranscript& transcript);
// Throws InputError on malformed input or records out of order.
SemanticTranscript transcript_from_jsonl(std::string_view text);

// Deterministic stand-ins used with --mock-client. Perception replies are
// three labeled sections; policy replies are <think>/<answer> outputs whose
// label is drawn from the options listed in the prompt.
MockModelClient::Responder perception_mock_responder();
MockModelClient::Responder policy_mock_responder();

}  // namespace spatialrl

#endif  // SPATIALRL_PERCEPTION_HPP_
