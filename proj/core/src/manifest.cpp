#include "spatialrl/manifest.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "spatialrl/errors.hpp"
#include "spatialrl/image.hpp"
#include "spatialrl/io.hpp"

namespace spatialrl {

namespace {
using nlohmann::json;
}  // namespace

FrameSequence load_frame_directory(const std::filesystem::path& dir, std::string source_id) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw InputError("not a frame directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_frame_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no frame images in " + dir.string());
  FrameSequence seq;
  seq.source_id = source_id.empty() ? dir.filename().string() : std::move(source_id);
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      Frame f = read_frame(files[i]);
      f.set_index(static_cast<std::int64_t>(i));
      seq.frames.push_back(std::move(f));
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError("cannot decode " + files[i].string() + ": " + e.what());
    }
  }
  return seq;
}

std::string manifest_to_json(const ManifestEntry& entry) {
  json indices = json::array();
  json overlaps = json::array();
  json reasons = json::array();
  for (const auto& k : entry.keyframes.keyframes) {
    indices.push_back(k.frame_index);
    overlaps.push_back(k.overlap ? json(*k.overlap) : json(nullptr));
    reasons.push_back(std::string(to_string(k.reason)));
  }
  const json j = {{"source_id", entry.keyframes.source_id},
                  {"epsilon", entry.keyframes.epsilon},
                  {"frame_count", entry.frame_count},
                  {"indices", indices},
                  {"overlaps", overlaps},
                  {"reasons", reasons},
                  {"capped", entry.keyframes.capped},
                  {"frames", entry.frame_files}};
  return j.dump();
}

ManifestEntry manifest_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    ManifestEntry e;
    e.keyframes.source_id = j.at("source_id").get<std::string>();
    e.keyframes.epsilon = j.at("epsilon").get<double>();
    e.keyframes.capped = j.value("capped", false);
    e.frame_count = j.at("frame_count").get<std::size_t>();
    const auto& indices = j.at("indices");
    const auto& overlaps = j.at("overlaps");
    const auto& reasons = j.at("reasons");
    e.frame_files = j.at("frames").get<std::vector<std::string>>();
    if (overlaps.size() != indices.size() || reasons.size() != indices.size() ||
        e.frame_files.size() != indices.size()) {
      throw InputError("manifest arrays differ in length for " + e.keyframes.source_id);
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
      KeyFrame k;
      k.position = i;
      k.frame_index = indices[i].get<std::int64_t>();
      if (!overlaps[i].is_null()) k.overlap = overlaps[i].get<double>();
      k.reason = parse_accept_reason(reasons[i].get<std::string>());
      if (i > 0 && k.frame_index <= e.keyframes.keyframes.back().frame_index) {
        throw InputError("manifest indices not increasing for " + e.keyframes.source_id);
      }
      e.keyframes.keyframes.push_back(std::move(k));
    }
    return e;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("malformed manifest record: ") + e.what());
  }
}

std::vector<ManifestEntry> parse_manifest(std::string_view jsonl) {
  std::vector<ManifestEntry> out;
  for (const auto& line : split_lines(jsonl)) out.push_back(manifest_from_json(line));
  return out;
}

}  // namespace spatialrl
