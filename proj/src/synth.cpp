#include "moblur/synth.hpp"

#include <algorithm>
#include <cmath>

namespace moblur {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(a ^ splitmix64(b ^ splitmix64(c))));
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // [0, 1)
}

// Bilinear value noise over a lattice of the given cell size.
double value_noise(double x, double y, std::uint64_t seed, double cell) {
    double gx = x / cell;
    double gy = y / cell;
    auto ix = static_cast<std::int64_t>(std::floor(gx));
    auto iy = static_cast<std::int64_t>(std::floor(gy));
    double fx = gx - static_cast<double>(ix);
    double fy = gy - static_cast<double>(iy);
    auto u = [&](std::int64_t i, std::int64_t j) {
        return hash_unit(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), 0);
    };
    double v00 = u(ix, iy), v10 = u(ix + 1, iy);
    double v01 = u(ix, iy + 1), v11 = u(ix + 1, iy + 1);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

// Deterministic standard normal stream, Box-Muller over splitmix64 draws.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : state_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        u1 = std::max(u1, 1e-300);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    double next_unit() {
        state_ = splitmix64(state_);
        return static_cast<double>(state_ >> 11) * (1.0 / 9007199254740992.0);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

double overlap_length(double lo, double hi, double a, double b) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

}  // namespace

Image value_noise_texture(int width, int height, std::uint64_t seed, double cell) {
    require(width >= 1 && height >= 1, "value_noise_texture: empty size");
    require(cell > 0, "value_noise_texture: cell size must be positive");
    Image out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double base = 0.72 * value_noise(x, y, seed, cell) +
                          0.28 * value_noise(x, y, seed ^ 0x5bd1e995u, cell / 2.0);
            for (int c = 0; c < 3; ++c) {
                double tint = value_noise(x, y, seed + 0x1000 + static_cast<std::uint64_t>(c),
                                          cell * 2.0);
                out.at(x, y, c) =
                    std::clamp(0.2 + 0.62 * base + 0.12 * (tint - 0.5), 0.0, 1.0);
            }
        }
    }
    return out;
}

SyntheticScene generate(const SceneSpec& spec, std::uint64_t seed) {
    require(spec.width >= 1 && spec.height >= 1, "generate: empty frame size");
    require(spec.frame_count >= 2, "generate: need at least 2 frames");
    require(spec.object_w > 0 && spec.object_h > 0, "generate: object size must be positive");
    require(spec.exposure_scale.empty() ||
                spec.exposure_scale.size() == static_cast<std::size_t>(spec.frame_count),
            "generate: exposure_scale length must match frame count");
    require(spec.noise_sigma >= 0, "generate: noise sigma must be non-negative");

    for (int t = 0; t < spec.frame_count; ++t) {
        double x0 = spec.object_start.x + t * spec.velocity.x;
        double y0 = spec.object_start.y + t * spec.velocity.y;
        require(x0 >= 0 && y0 >= 0 && x0 + spec.object_w <= spec.width &&
                    y0 + spec.object_h <= spec.height,
                "generate: object leaves the frame at t=" + std::to_string(t));
    }

    SyntheticScene scene;
    scene.truth.background = value_noise_texture(spec.width, spec.height, spec.background_seed);
    scene.frames.reserve(static_cast<std::size_t>(spec.frame_count));

    NormalStream noise(splitmix64(seed ^ 0xabcdef1234567890ull));

    for (int t = 0; t < spec.frame_count; ++t) {
        double gain = spec.exposure_scale.empty() ? 1.0 : spec.exposure_scale[t];
        double ox = spec.object_start.x + t * spec.velocity.x;
        double oy = spec.object_start.y + t * spec.velocity.y;

        Image frame(spec.width, spec.height);
        Mask mask(spec.width, spec.height, 0.0);
        Mask fringe(spec.width, spec.height, 0.0);

        for (int y = 0; y < spec.height; ++y) {
            double cy = overlap_length(y, y + 1.0, oy, oy + spec.object_h);
            for (int x = 0; x < spec.width; ++x) {
                double cx = overlap_length(x, x + 1.0, ox, ox + spec.object_w);
                double alpha = cx * cy;
                if (alpha >= 1.0 - 1e-12) {
                    mask.at(x, y) = 1.0;
                } else if (alpha > 0.0) {
                    fringe.at(x, y) = 1.0;
                }
                // Texture in object-local coordinates rides with the object,
                // giving optical flow signal inside the footprint.
                double texture = 1.0;
                if (alpha > 0.0 && spec.object_texture > 0.0)
                    texture = 1.0 - 0.5 * spec.object_texture +
                              spec.object_texture *
                                  value_noise(x - ox, y - oy,
                                              spec.background_seed ^ 0x0b7ec7ull, 4.0);
                for (int c = 0; c < 3; ++c) {
                    double v = (1.0 - alpha) * scene.truth.background.at(x, y, c) +
                               alpha * spec.object_color[c] * texture;
                    v *= gain;
                    if (spec.noise_sigma > 0) v += spec.noise_sigma * noise.next();
                    frame.at(x, y, c) = std::max(0.0, v);
                }
            }
        }
        scene.frames.push_back(std::move(frame));
        scene.truth.masks.push_back(std::move(mask));
        scene.truth.fringe.push_back(std::move(fringe));
    }
    scene.truth.flows.assign(static_cast<std::size_t>(spec.frame_count - 1), spec.velocity);
    return scene;
}

Image accumulate_frames(const std::vector<Image>& frames) {
    require(!frames.empty(), "accumulate_frames: need at least one frame");
    Image out(frames[0].width, frames[0].height);
    for (const Image& f : frames) {
        require(f.same_size(frames[0]), "accumulate_frames: frame dimensions differ");
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += f.data[i];
    }
    double inv = 1.0 / static_cast<double>(frames.size());
    for (double& v : out.data) v *= inv;
    return out;
}

}  // namespace moblur
