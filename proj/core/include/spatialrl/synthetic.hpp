#ifndef SPATIALRL_SYNTHETIC_HPP_
#define SPATIALRL_SYNTHETIC_HPP_

#include <cstdint>

#include "spatialrl/image.hpp"
#include "spatialrl/keyframes.hpp"

// Procedural imagery for fixtures, tests and benchmarks.
namespace spatialrl::synthetic {

// Piecewise-constant scene of overlapping rectangles and discs over a
// smooth gradient; rich in corners at every scale.
Frame textured_scene(int width, int height, std::uint64_t seed);

// Alternating squares of `cell` pixels whose gray levels vary per cell.
Frame checkerboard(int width, int height, int cell, std::uint64_t seed);

Frame noise_frame(int width, int height, std::uint64_t seed);

// Camera translating across `scene` by (dx, dy) pixels per frame.
FrameSequence pan_sequence(const Frame& scene, int frame_width, int frame_height,
                           int count, double dx, double dy = 0.0);

// Camera zooming into the scene center by `zoom_per_frame` per frame.
FrameSequence zoom_sequence(const Frame& scene, int frame_width, int frame_height,
                            int count, double zoom_per_frame);

FrameSequence repeat_frame(const Frame& frame, int count);

}  // namespace spatialrl::synthetic

#endif  // SPATIALRL_SYNTHETIC_HPP_
