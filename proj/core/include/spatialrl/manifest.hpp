#ifndef SPATIALRL_MANIFEST_HPP_
#define SPATIALRL_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spatialrl/keyframes.hpp"

namespace spatialrl {

// Frames of one video stored as numbered image files (PGM or PNG) in a
// directory, read in file-name order. Frame indices are the sorted
// positions. Throws InputError for an empty directory or an unreadable
// frame.
FrameSequence load_frame_directory(const std::filesystem::path& dir, std::string source_id = {});

// Manifest line for one video: the key-frame selection plus the extracted
// key-frame images, relative to the manifest's directory.
struct ManifestEntry {
  KeyFrameSet keyframes;
  std::size_t frame_count = 0;
  std::vector<std::string> frame_files;  // parallel to keyframes.keyframes
};

std::string manifest_to_json(const ManifestEntry& entry);
// Throws InputError on malformed records.
ManifestEntry manifest_from_json(std::string_view line);
std::vector<ManifestEntry> parse_manifest(std::string_view jsonl);

}  // namespace spatialrl

#endif  // SPATIALRL_MANIFEST_HPP_
