// Regenerates the committed synthetic fixture set:
//   make_fixtures <output-dir>

#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "spatialrl/image.hpp"
#include "spatialrl/io.hpp"
#include "spatialrl/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatialrl;

namespace {

void write_video(const fs::path& dir, const FrameSequence& seq) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
    const auto png = encode_png(seq.frames[i]);
    write_file_atomic(dir / name,
                      std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  }
}

struct QuestionSpec {
  const char* id;
  const char* video;
  const char* category;
  const char* text;
  std::vector<const char*> options;
  const char* answer;
  bool finetuned;
  bool original;
  bool blind;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 2;
  }
  const fs::path out(argv[1]);
  const fs::path videos = out / "videos";

  write_video(videos / "pan_east",
              synthetic::pan_sequence(synthetic::textured_scene(480, 160, 11), 160, 120, 24, 8.0));
  write_video(videos / "pan_south", synthetic::pan_sequence(synthetic::textured_scene(200, 400, 12),
                                                            160, 120, 20, 0.0, 10.0));
  write_video(videos / "zoom_in",
              synthetic::zoom_sequence(synthetic::textured_scene(320, 240, 13), 160, 120, 16, 1.03));

  const std::vector<QuestionSpec> specs = {
      {"q001", "pan_east", "Landmark Position",
       "Where is the dark rectangle relative to you at the end of the video?",
       {"Ahead on the left", "Behind you", "Directly to the right", "Directly ahead"}, "C", false,
       true, false},
      {"q002", "pan_east", "Relative Direction",
       "In which direction did the camera move during the video?",
       {"North", "East", "South", "West"}, "B", true, false, true},
      {"q003", "pan_east", "Appearance Order",
       "Which object appeared first?",
       {"The bright disc", "The grey bar", "The dark square", "The striped patch"}, "A", false,
       false, false},
      {"q004", "pan_south", "Relative Distance",
       "Which object is closer to the final viewpoint?",
       {"The bright disc", "The dark square", "The grey bar"}, "B", true, true, false},
      {"q005", "pan_south", "Route Planning",
       "To return to the starting point, which way should you move?",
       {"Up", "Down", "Left", "Right", "Stay"}, "A", true, false, false},
      {"q006", "pan_south", "Progress Evaluation",
       "You are heading to the bottom edge of the scene. How far along are you?",
       {"Not started", "About halfway", "Nearly done", "Finished"}, "D", false, false, true},
      {"q007", "zoom_in", "Action Generation",
       "What action did the camera perform?",
       {"Move forward", "Turn left", "Turn right", "Move backward"}, "A", false, true, false},
      {"q008", "zoom_in", "Counterfactual",
       "If the camera had moved backward instead, would the border objects stay visible?",
       {"Yes", "No"}, "A", true, false, false},
  };

  std::string questions;
  std::string judgments;
  for (const auto& s : specs) {
    json options = json::object();
    char label = 'A';
    for (const char* text : s.options) options[std::string(1, label++)] = text;
    questions += json{{"id", s.id},
                      {"video_id", s.video},
                      {"category", s.category},
                      {"question", s.text},
                      {"options", options},
                      {"answer", s.answer},
                      {"source", "synthetic"}}
                     .dump() +
                 "\n";
    judgments += json{{"id", s.id},
                      {"finetuned", s.finetuned},
                      {"original", s.original},
                      {"blind", s.blind}}
                     .dump() +
                 "\n";
  }
  write_file_atomic(out / "questions.jsonl", questions);
  write_file_atomic(out / "judgments.jsonl", judgments);

  const json config = {
      {"keyframes", {{"epsilon", 0.6}, {"max_keyframes", 32}}},
      {"perception", {{"max_inflight", 2}, {"client", {{"model", "mock-perception"}}}}},
      {"policy", {{"model", "mock-policy"}, {"temperature", 0.5}}},
      {"eval", {{"folds", 2}, {"seed", 0}}},
      {"paths", {{"questions", "questions.jsonl"}, {"judgments", "judgments.jsonl"}}}};
  write_file_atomic(out / "config.json", config.dump(2) + "\n");
  std::cout << "fixtures written to " << out.string() << "\n";
  return 0;
}
