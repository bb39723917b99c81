#include "spatialrl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace spatialrl::synthetic {

namespace {

std::uint8_t sample_bilinear(const Frame& src, double fx, double fy) {
  fx = std::clamp(fx, 0.0, static_cast<double>(src.width() - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(src.height() - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, src.width() - 1);
  const int y1 = std::min(y0 + 1, src.height() - 1);
  const double wx = fx - x0;
  const double wy = fy - y0;
  const double top = src.at(x0, y0) * (1 - wx) + src.at(x1, y0) * wx;
  const double bottom = src.at(x0, y1) * (1 - wx) + src.at(x1, y1) * wx;
  return static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
}

}  // namespace

Frame textured_scene(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      px[static_cast<std::size_t>(y) * width + x] =
          static_cast<std::uint8_t>(96 + 48.0 * std::sin(x * 0.013) * std::cos(y * 0.017));
    }
  }
  const int shapes = std::max(40, width * height / 400);
  for (int s = 0; s < shapes; ++s) {
    const double cx = uniform(0, width);
    const double cy = uniform(0, height);
    const double rx = uniform(3, 18);
    const double ry = uniform(3, 18);
    const auto value = static_cast<std::uint8_t>(uniform(0, 255.99));
    const bool disc = (rng() & 3U) == 0;
    const int x0 = std::max(0, static_cast<int>(cx - rx));
    const int x1 = std::min(width - 1, static_cast<int>(cx + rx));
    const int y0 = std::max(0, static_cast<int>(cy - ry));
    const int y1 = std::min(height - 1, static_cast<int>(cy + ry));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (disc) {
          const double u = (x - cx) / rx;
          const double v = (y - cy) / ry;
          if (u * u + v * v > 1.0) continue;
        }
        px[static_cast<std::size_t>(y) * width + x] = value;
      }
    }
  }
  return Frame(width, height, std::move(px));
}

Frame checkerboard(int width, int height, int cell, std::uint64_t seed) {
  if (cell <= 0) throw std::invalid_argument("cell size must be positive");
  std::mt19937_64 rng(seed);
  const int cols = (width + cell - 1) / cell;
  const int rows = (height + cell - 1) / cell;
  std::vector<std::uint8_t> levels(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const bool dark = ((r + c) & 1) != 0;
      const int jitter = static_cast<int>(rng() % 60);
      levels[static_cast<std::size_t>(r) * cols + c] =
          static_cast<std::uint8_t>(dark ? 20 + jitter : 175 + jitter);
    }
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      px[static_cast<std::size_t>(y) * width + x] =
          levels[static_cast<std::size_t>(y / cell) * cols + x / cell];
    }
  }
  return Frame(width, height, std::move(px));
}

Frame noise_frame(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(width) * height);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() >> 56);
  return Frame(width, height, std::move(px));
}

FrameSequence pan_sequence(const Frame& scene, int frame_width, int frame_height, int count,
                           double dx, double dy) {
  FrameSequence seq;
  seq.source_id = "pan";
  seq.fps = 30.0;
  for (int i = 0; i < count; ++i) {
    const double ox = dx * i;
    const double oy = dy * i;
    if (ox < 0 || oy < 0 || ox + frame_width > scene.width() ||
        oy + frame_height > scene.height()) {
      throw std::invalid_argument("pan leaves the scene");
    }
    std::vector<std::uint8_t> px(static_cast<std::size_t>(frame_width) * frame_height);
    for (int y = 0; y < frame_height; ++y) {
      for (int x = 0; x < frame_width; ++x) {
        px[static_cast<std::size_t>(y) * frame_width + x] = sample_bilinear(scene, x + ox, y + oy);
      }
    }
    seq.frames.emplace_back(frame_width, frame_height, std::move(px), i);
  }
  return seq;
}

FrameSequence zoom_sequence(const Frame& scene, int frame_width, int frame_height, int count,
                            double zoom_per_frame) {
  FrameSequence seq;
  seq.source_id = "zoom";
  seq.fps = 30.0;
  const double cx = scene.width() / 2.0;
  const double cy = scene.height() / 2.0;
  for (int i = 0; i < count; ++i) {
    // Source pixels per output pixel; the first frame samples 1:1.
    const double s = 1.0 / std::pow(zoom_per_frame, i);
    std::vector<std::uint8_t> px(static_cast<std::size_t>(frame_width) * frame_height);
    for (int y = 0; y < frame_height; ++y) {
      for (int x = 0; x < frame_width; ++x) {
        px[static_cast<std::size_t>(y) * frame_width + x] = sample_bilinear(
            scene, cx + (x - frame_width / 2.0) * s, cy + (y - frame_height / 2.0) * s);
      }
    }
    seq.frames.emplace_back(frame_width, frame_height, std::move(px), i);
  }
  return seq;
}

FrameSequence repeat_frame(const Frame& frame, int count) {
  FrameSequence seq;
  seq.source_id = "static";
  seq.fps = 30.0;
  for (int i = 0; i < count; ++i) {
    Frame f = frame;
    f.set_index(i);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

}  // namespace spatialrl::synthetic
