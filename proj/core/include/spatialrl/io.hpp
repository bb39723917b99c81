#ifndef SPATIALRL_IO_HPP_
#define SPATIALRL_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spatialrl {

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Throws InputError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

// Non-blank lines of `text`, without trailing '\r'.
std::vector<std::string> split_lines(std::string_view text);

std::string_view trim(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace spatialrl

#endif  // SPATIALRL_IO_HPP_
