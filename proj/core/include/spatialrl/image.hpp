#ifndef SPATIALRL_IMAGE_HPP_
#define SPATIALRL_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spatialrl {

// 8-bit grayscale image, row-major. `index` is the position t of the frame
// in its source video.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::vector<std::uint8_t> pixels,
        std::int64_t index = 0);
  // Uniform frame filled with `value`.
  Frame(int width, int height, std::uint8_t value, std::int64_t index = 0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::int64_t index() const noexcept { return index_; }
  void set_index(std::int64_t index) noexcept { index_ = index; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  const std::uint8_t* row(int y) const noexcept {
    return pixels_.data() + static_cast<std::size_t>(y) * width_;
  }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  bool operator==(const Frame&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::int64_t index_ = 0;
};

// Binary (P5) or ASCII (P2) PGM. Throws InputError on malformed files.
Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& frame);

// PNG decode converts color images to luma. Throws InputError.
Frame read_png(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Frame& frame);

// Dispatches on extension (.pgm / .png).
Frame read_frame(const std::filesystem::path& path);
bool is_frame_file(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace spatialrl

#endif  // SPATIALRL_IMAGE_HPP_
