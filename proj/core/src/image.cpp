#include "spatialrl/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "spatialrl/errors.hpp"

namespace spatialrl {

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels,
             std::int64_t index)
    : width_(width), height_(height), pixels_(std::move(pixels)),
      index_(index) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pixel buffer length must equal width*height");
  }
}

Frame::Frame(int width, int height, std::uint8_t value, std::int64_t index)
    : Frame(width, height,
            std::vector<std::uint8_t>(
                static_cast<std::size_t>(std::max(width, 0)) *
                    static_cast<std::size_t>(std::max(height, 0)),
                value),
            index) {}

namespace {

// Reads the next whitespace-separated PGM header token, skipping comments.
std::string next_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

int parse_positive(const std::string& token, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    int v = std::stoi(token, &used);
    if (used != token.size() || v <= 0) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw InputError("malformed PGM header in " + path.string());
  }
}

}  // namespace

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") {
    throw InputError("not a PGM file: " + path.string());
  }
  const int width = parse_positive(next_token(in), path);
  const int height = parse_positive(next_token(in), path);
  const int maxval = parse_positive(next_token(in), path);
  if (maxval > 255) {
    throw InputError("16-bit PGM is not supported: " + path.string());
  }
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
      throw InputError("truncated PGM data in " + path.string());
    }
  } else {
    for (auto& p : pixels) {
      const std::string tok = next_token(in);
      if (tok.empty()) throw InputError("truncated PGM data in " + path.string());
      int v = 0;
      try {
        v = std::stoi(tok);
      } catch (const std::exception&) {
        throw InputError("malformed PGM pixel in " + path.string());
      }
      if (v < 0 || v > maxval) throw InputError("PGM pixel out of range");
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : pixels) p = static_cast<std::uint8_t>(p * 255 / maxval);
  }
  return Frame(width, height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels().data()),
            static_cast<std::streamsize>(frame.pixels().size()));
}

Frame read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw InputError("cannot decode PNG " + path.string() + ": " +
                     image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw InputError("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  png_image_free(&image);
  return Frame(w, h, std::move(pixels));
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, frame.pixels().data(),
                                       0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0,
                                 frame.pixels().data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

bool is_frame_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".png";
}

Frame read_frame(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw InputError("unsupported frame format: " + path.string());
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace spatialrl
