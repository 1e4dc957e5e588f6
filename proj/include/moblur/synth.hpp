#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "moblur/image.hpp"

namespace moblur {

using Mask = Plane;  // values in [0, 1]

// Procedural test scene: value-noise background plus a rectangle moving at
// constant velocity, with optional per-frame gain and additive noise.
struct SceneSpec {
    int width = 96;
    int height = 96;
    std::uint64_t background_seed = 1;
    double object_w = 16.0;
    double object_h = 16.0;
    std::array<double, 3> object_color = {1.45, 1.05, 0.55};  // clearly above the texture
    double object_texture = 0.35;  // modulation amplitude; rides with the object
    Vec2 object_start = {12.0, 40.0};
    Vec2 velocity = {2.0, 0.0};
    int frame_count = 10;
    std::vector<double> exposure_scale;  // empty = unit gain everywhere
    double noise_sigma = 0.0;
};

struct SceneTruth {
    Image background;          // clean background, unit gain, no object
    std::vector<Mask> masks;   // 1 where the object fully covers the pixel
    std::vector<Mask> fringe;  // 1 where coverage is fractional (sub-pixel edge)
    std::vector<Vec2> flows;   // frame_count - 1 copies of the velocity
};

struct SyntheticScene {
    std::vector<Image> frames;
    SceneTruth truth;
};

// Deterministic for a given (spec, seed); throws if the object ever leaves the frame.
SyntheticScene generate(const SceneSpec& spec, std::uint64_t seed);

// Per-pixel arithmetic mean in linear light.
Image accumulate_frames(const std::vector<Image>& frames);

// Smooth deterministic RGB texture, two octaves of bilinear value noise.
Image value_noise_texture(int width, int height, std::uint64_t seed, double cell = 8.0);

}  // namespace moblur
