#include "spatialrl/perception.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <nlohmann/json.hpp>
#include <optional>

#include "spatialrl/errors.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

using nlohmann::json;

namespace {

enum class Section { kAction, kChanges, kTaskRelevant };

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<Section> classify_header(std::string_view header) {
  static const std::array<std::pair<std::string_view, Section>, 16> kAliases = {{
      {"action", Section::kAction},
      {"actions", Section::kAction},
      {"agent action", Section::kAction},
      {"changes", Section::kChanges},
      {"change", Section::kChanges},
      {"\xce\x94information", Section::kChanges},  // "ΔInformation"
      {"\xce\x94 information", Section::kChanges},
      {"delta information", Section::kChanges},
      {"information change", Section::kChanges},
      {"objects", Section::kChanges},
      {"task-relevant", Section::kTaskRelevant},
      {"task relevant", Section::kTaskRelevant},
      {"q-related", Section::kTaskRelevant},
      {"question-relevant", Section::kTaskRelevant},
      {"question relevant", Section::kTaskRelevant},
      {"relevant", Section::kTaskRelevant},
  }};
  std::string h = lower(header);
  // ASCII lowering leaves the UTF-8 capital delta intact; fold its lowercase
  // form too.
  for (std::size_t p; (p = h.find("\xce\xb4")) != std::string::npos;) h.replace(p, 2, "\xce\x94");
  for (const auto& [alias, section] : kAliases) {
    if (h == alias) return section;
  }
  return std::nullopt;
}

// "**Action:** text", "- Changes: text", "### Task-relevant: text".
std::optional<std::pair<Section, std::string>> match_header(std::string_view line) {
  std::string_view s = trim(line);
  while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '#' ||
                        s.front() == '>' || s.front() == ' ' || s.front() == '_')) {
    s.remove_prefix(1);
  }
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos || colon > 32) return std::nullopt;
  std::string_view head = s.substr(0, colon);
  while (!head.empty() && (head.back() == '*' || head.back() == '_' || head.back() == ' ')) {
    head.remove_suffix(1);
  }
  const auto section = classify_header(head);
  if (!section) return std::nullopt;
  std::string_view rest = s.substr(colon + 1);
  while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
  return std::make_pair(*section, std::string(trim(rest)));
}

ChatRequest perception_request(const PerceptionConfig& config, std::string prompt,
                               std::initializer_list<const Frame*> frames) {
  ChatRequest req;
  req.model = config.model;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  ChatMessage msg;
  msg.role = "user";
  msg.content.push_back(ContentPart::from_text(std::move(prompt)));
  for (const Frame* f : frames) {
    msg.content.push_back(ContentPart::from_png_base64(base64_encode(encode_png(*f))));
  }
  req.messages.push_back(std::move(msg));
  return req;
}

SemanticRecord query(ModelClient& client, const ChatRequest& request, std::int64_t index) {
  std::string reply;
  try {
    reply = client.complete(request);
  } catch (const TransportError& e) {
    throw PerceptionUnavailable(std::string("perception client failed: ") + e.what());
  }
  return parse_semantic_response(reply, index);
}

}  // namespace

std::string first_frame_prompt(const Question& question) {
  return "You are looking at the first frame of an egocentric video recorded by a moving "
         "agent. The agent will later answer this question: " +
         question.text +
         "\nReply with exactly three labeled sections:\n"
         "Action: initial observation\n"
         "Changes: the objects present in the scene, their attributes, and their spatial "
         "locations relative to the agent.\n"
         "Task-relevant: objects or information in this frame that bear on the question, "
         "or \"none observed\".";
}

std::string frame_pair_prompt(const Question& question) {
  return "You are given two consecutive key frames from an egocentric video recorded by a "
         "moving agent: first the previous frame, then the current frame. The agent will "
         "later answer this question: " +
         question.text +
         "\nReply with exactly three labeled sections:\n"
         "Action: the agent's motion between the two frames, inferred from how static "
         "objects shifted in view.\n"
         "Changes: how the spatial relations between the agent and known objects changed, "
         "and whether new objects entered the field of view.\n"
         "Task-relevant: objects or information in the current frame that bear on the "
         "question, or \"none observed\".";
}

SemanticRecord parse_semantic_response(std::string_view response, std::int64_t keyframe_index) {
  if (trim(response).empty()) {
    throw PerceptionUnavailable("empty perception response for key-frame " +
                                std::to_string(keyframe_index));
  }
  SemanticRecord rec;
  rec.keyframe_index = keyframe_index;
  rec.raw = std::string(response);

  std::array<std::optional<std::string>, 3> sections;
  std::optional<Section> current;
  for (const auto& line : split_lines(response)) {
    if (auto h = match_header(line)) {
      const auto slot = static_cast<std::size_t>(h->first);
      if (sections[slot]) {
        rec.warnings.push_back("duplicate section ignored: " + std::string(trim(line)));
        current.reset();
        continue;
      }
      sections[slot] = h->second;
      current = h->first;
    } else if (current) {
      auto& text = *sections[static_cast<std::size_t>(*current)];
      if (!text.empty()) text.push_back(' ');
      text += trim(line);
    }
  }

  const bool any = sections[0] || sections[1] || sections[2];
  if (!any) {
    rec.action = kNoneObserved;
    rec.delta_information = std::string(trim(response));
    rec.q_related = kNoneObserved;
    rec.warnings.push_back("no section headers; response kept as changes");
    return rec;
  }
  static constexpr std::array<std::string_view, 3> kNames = {"Action", "Changes",
                                                             "Task-relevant"};
  std::array<std::string*, 3> fields = {&rec.action, &rec.delta_information, &rec.q_related};
  for (std::size_t i = 0; i < 3; ++i) {
    if (sections[i] && !sections[i]->empty()) {
      *fields[i] = *sections[i];
    } else {
      *fields[i] = kNoneObserved;
      rec.warnings.push_back(std::string("missing section: ") + std::string(kNames[i]));
    }
  }
  return rec;
}

SemanticRecord describe_first_frame(ModelClient& client, const Frame& frame,
                                    const Question& question, const PerceptionConfig& config) {
  SemanticRecord rec = query(
      client, perception_request(config, first_frame_prompt(question), {&frame}), frame.index());
  rec.action = kInitialObservation;
  return rec;
}

SemanticRecord describe_frame_pair(ModelClient& client, const Frame& previous,
                                   const Frame& current, const Question& question,
                                   const PerceptionConfig& config) {
  return query(client,
               perception_request(config, frame_pair_prompt(question), {&previous, &current}),
               current.index());
}

SemanticTranscript build_transcript(ModelClient& client, const KeyFrameSet& keyframes,
                                    const FrameSequence& frames, const Question& question,
                                    const PerceptionConfig& config, std::string created_at) {
  if (keyframes.keyframes.empty()) throw std::invalid_argument("no key-frames to describe");
  SemanticTranscript t;
  t.question_id = question.id;
  t.video_id = frames.source_id;
  t.model_id = config.model.empty() ? client.model_id() : config.model;
  t.created_at = std::move(created_at);
  const Frame* previous = nullptr;
  for (const auto& k : keyframes.keyframes) {
    if (k.position >= frames.frames.size()) {
      throw std::invalid_argument("key-frame position outside the frame sequence");
    }
    const Frame& frame = frames.frames[k.position];
    SemanticRecord rec = previous ? describe_frame_pair(client, *previous, frame, question, config)
                                  : describe_first_frame(client, frame, question, config);
    rec.keyframe_index = k.frame_index;
    t.records.push_back(std::move(rec));
    previous = &frame;
  }
  return t;
}

std::string render_question(const Question& question) {
  std::string out = question.text;
  for (const auto& o : question.options) out += "\n" + o.label + ". " + o.text;
  return out;
}

std::string render_transcript(const SemanticTranscript& transcript) {
  std::string out;
  for (const auto& r : transcript.records) {
    out += "\n[Frame " + std::to_string(r.keyframe_index) + "] Action: " + r.action +
           " | Changes: " + r.delta_information + " | Task-relevant: " + r.q_related;
  }
  return out;
}

std::string build_policy_prompt(const Question& question, const SemanticTranscript& transcript) {
  return "Please assume the role of an agent. Given a question and a series of frames, you "
         "should first think about the reasoning process in the mind and then provide the "
         "final answer. The reasoning process and answer are enclosed within <think> </think> "
         "and <answer> </answer> tags, respectively, i.e., <think> reasoning process here "
         "</think> <answer> answer here </answer>. Ensure that your answer is consistent with "
         "and directly derived from your thinking process, maintaining logical coherence "
         "between the two sections. The frames represent your egocentric observations from "
         "the past to the present. Question: " +
         render_question(question) + ". Video: " + render_transcript(transcript) +
         ". Assistant:";
}

std::string transcript_to_jsonl(const SemanticTranscript& transcript) {
  std::string out;
  for (const auto& r : transcript.records) {
    const json line = {{"question_id", transcript.question_id},
                       {"video_id", transcript.video_id},
                       {"model_id", transcript.model_id},
                       {"created_at", transcript.created_at},
                       {"keyframe_index", r.keyframe_index},
                       {"action", r.action},
                       {"delta_information", r.delta_information},
                       {"q_related", r.q_related},
                       {"raw", r.raw},
                       {"warnings", r.warnings}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

SemanticTranscript transcript_from_jsonl(std::string_view text) {
  SemanticTranscript t;
  bool first = true;
  for (const auto& line : split_lines(text)) {
    try {
      const json j = json::parse(line);
      SemanticRecord r;
      r.keyframe_index = j.at("keyframe_index").get<std::int64_t>();
      r.action = j.at("action").get<std::string>();
      r.delta_information = j.at("delta_information").get<std::string>();
      r.q_related = j.at("q_related").get<std::string>();
      r.raw = j.value("raw", "");
      r.warnings = j.value("warnings", std::vector<std::string>{});
      if (first) {
        t.question_id = j.at("question_id").get<std::string>();
        t.video_id = j.value("video_id", "");
        t.model_id = j.value("model_id", "");
        t.created_at = j.value("created_at", "");
        first = false;
      } else {
        if (j.at("question_id").get<std::string>() != t.question_id) {
          throw InputError("transcript mixes question ids");
        }
        if (r.keyframe_index <= t.records.back().keyframe_index) {
          throw InputError("transcript records out of order");
        }
      }
      t.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed transcript line: ") + e.what());
    }
  }
  if (t.records.empty()) throw InputError("transcript is empty");
  return t;
}

MockModelClient::Responder perception_mock_responder() {
  return [](const ChatRequest& request) -> std::optional<std::string> {
    static constexpr std::array<std::string_view, 6> kActions = {
        "move forward", "turn left", "turn right", "ascend", "descend", "move backward"};
    static constexpr std::array<std::string_view, 5> kObjects = {
        "a red building", "a row of trees", "a parked car", "a road intersection",
        "a tall tower"};
    static constexpr std::array<std::string_view, 4> kPlaces = {"on the left", "on the right",
                                                                "ahead", "below"};
    const std::uint64_t h = request_fingerprint(request);
    std::size_t images = 0;
    for (const auto& m : request.messages) {
      for (const auto& p : m.content) images += p.kind == ContentPart::Kind::kImagePng;
    }
    const auto& object = kObjects[h % kObjects.size()];
    const auto& place = kPlaces[(h >> 8) % kPlaces.size()];
    std::string out;
    if (images <= 1) {
      out = "Action: initial observation\nChanges: " + std::string(object) + " " +
            std::string(place) + "\n";
    } else {
      out = "Action: " + std::string(kActions[(h >> 16) % kActions.size()]) + "\nChanges: " +
            std::string(object) + " now " + std::string(place) + "\n";
    }
    out += (h >> 24) % 3 == 0 ? "Task-relevant: none observed"
                              : "Task-relevant: " + std::string(object) + " is visible";
    return out;
  };
}

MockModelClient::Responder policy_mock_responder() {
  return [](const ChatRequest& request) -> std::optional<std::string> {
    const std::string text = request.text();
    std::string labels;
    for (const auto& line : split_lines(text)) {
      if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'Z' && line[1] == '.' &&
          line[2] == ' ' && labels.find(line[0]) == std::string::npos) {
        labels.push_back(line[0]);
      }
    }
    if (labels.empty()) labels = "ABCD";
    const std::uint64_t h = request_fingerprint(request);
    const char pick = labels[h % labels.size()];
    return "<think>The observations narrow the options down to " + std::string(1, pick) +
           ".</think> <answer>" + std::string(1, pick) + "</answer>";
  };
}

}  // namespace spatialrl
