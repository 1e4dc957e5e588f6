#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "moblur/optical_flow.hpp"
#include "moblur/synth.hpp"
#include "test_support.hpp"

using namespace moblur;
using test::Rng;

namespace {

// Mean flow over the central fraction of the field.
Vec2 central_mean(const FlowField& flow, double fraction = 0.5) {
    int bx = static_cast<int>(flow.width * (1.0 - fraction) / 2.0);
    int by = static_cast<int>(flow.height * (1.0 - fraction) / 2.0);
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int y = by; y < flow.height - by; ++y)
        for (int x = bx; x < flow.width - bx; ++x) {
            sx += flow.dx[flow.index(x, y)];
            sy += flow.dy[flow.index(x, y)];
            ++n;
        }
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

double percentile_magnitude(const FlowField& flow, double pct) {
    std::vector<double> mags(flow.dx.size());
    for (std::size_t i = 0; i < mags.size(); ++i)
        mags[i] = std::hypot(flow.dx[i], flow.dy[i]);
    auto nth = mags.begin() + static_cast<std::ptrdiff_t>((pct / 100.0) * (mags.size() - 1));
    std::nth_element(mags.begin(), nth, mags.end());
    return *nth;
}

Plane textured_plane(int w, int h, std::uint64_t seed) {
    return luminance(value_noise_texture(w, h, seed));
}

}  // namespace

TEST_CASE("poly_expansion of a constant plane") {
    Plane flat(32, 24, 0.42);
    PolyExpansion p = poly_expansion(flat, 7, 1.5);
    for (int y = 4; y < 20; ++y)
        for (int x = 4; x < 28; ++x) {
            CHECK(p.c.at(x, y) == doctest::Approx(0.42).epsilon(1e-9));
            CHECK(std::abs(p.bx.at(x, y)) < 1e-9);
            CHECK(std::abs(p.by.at(x, y)) < 1e-9);
            CHECK(std::abs(p.a11.at(x, y)) < 1e-9);
            CHECK(std::abs(p.a12.at(x, y)) < 1e-9);
            CHECK(std::abs(p.a22.at(x, y)) < 1e-9);
        }
}

TEST_CASE("poly_expansion reproduces a linear ramp") {
    Plane ramp(32, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) ramp.at(x, y) = 0.01 * x;
    PolyExpansion p = poly_expansion(ramp, 7, 1.5);
    for (int y = 4; y < 20; ++y)
        for (int x = 4; x < 28; ++x) {
            CHECK(p.bx.at(x, y) == doctest::Approx(0.01).epsilon(1e-6));
            CHECK(std::abs(p.by.at(x, y)) < 1e-6);
            CHECK(std::abs(p.a11.at(x, y)) < 1e-6);
        }
}

TEST_CASE("poly_expansion recovers quadratic coefficients") {
    // f(x, y) = a x^2 + b y^2 + c xy + d x + e y + f around each pixel center.
    const double qa = 4e-4, qb = -2e-4, qc = 3e-4, qd = 0.01, qe = -0.005, qf = 0.3;
    Plane surf(48, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 48; ++x) {
            double u = x - 24.0, v = y - 20.0;
            surf.at(x, y) = qa * u * u + qb * v * v + qc * u * v + qd * u + qe * v + qf;
        }
    PolyExpansion p = poly_expansion(surf, 7, 1.5);
    // Interior pixel away from borders; the local fit of a global quadratic
    // recovers the second-order coefficients exactly.
    for (int y = 10; y < 30; ++y)
        for (int x = 10; x < 38; ++x) {
            CHECK(p.a11.at(x, y) == doctest::Approx(qa).epsilon(0).scale(1).epsilon(1e-4));
            CHECK(p.a22.at(x, y) == doctest::Approx(qb).scale(1).epsilon(1e-4));
            CHECK(2.0 * p.a12.at(x, y) == doctest::Approx(qc).scale(1).epsilon(1e-4));
        }
}

TEST_CASE("poly_expansion rejects undersized images") {
    Plane tiny(5, 5, 0.1);
    CHECK_THROWS_AS(poly_expansion(tiny, 7, 1.5), ContractError);
}

TEST_CASE("zero motion yields near-zero flow at every pyramid configuration") {
    Plane img = textured_plane(96, 96, 7);
    for (int levels : {1, 2, 3, 4}) {
        FlowParams params;
        params.pyramid_levels = levels;
        FlowField flow = farneback_flow(img, img, params);
        CHECK(percentile_magnitude(flow, 99.0) <= 0.05);
    }
}

TEST_CASE("flow recovers synthetic translations within 0.2 px") {
    Image texture = value_noise_texture(128, 128, 21);
    for (Vec2 v : {Vec2{3.0, 0.0}, Vec2{-2.0, 1.0}, Vec2{0.5, 0.5}}) {
        Image moved = translate_bilinear(texture, v.x, v.y, BorderPolicy::Replicate);
        FlowField flow = farneback_flow(texture, moved, FlowParams{});
        Vec2 mean = central_mean(flow);
        CHECK(std::abs(mean.x - v.x) <= 0.2);
        CHECK(std::abs(mean.y - v.y) <= 0.2);
    }
}

TEST_CASE("shift equivariance on textured translations") {
    Image texture = value_noise_texture(128, 128, 33);
    Vec2 v{2.0, -1.0};
    Image moved = translate_bilinear(texture, v.x, v.y, BorderPolicy::Replicate);
    FlowField forward = farneback_flow(texture, moved, FlowParams{});
    FlowField backward = farneback_flow(moved, texture, FlowParams{});
    Vec2 mf = central_mean(forward);
    Vec2 mb = central_mean(backward);
    CHECK(std::abs(mf.x + mb.x) <= 0.3);
    CHECK(std::abs(mf.y + mb.y) <= 0.3);
}

TEST_CASE("flow on a constant image is finite") {
    Plane flat(64, 64, 0.3);
    FlowField flow = farneback_flow(flat, flat, FlowParams{});
    for (std::size_t i = 0; i < flow.dx.size(); ++i) {
        CHECK(std::isfinite(flow.dx[i]));
        CHECK(std::isfinite(flow.dy[i]));
    }
}

TEST_CASE("flow params are validated") {
    Plane img = textured_plane(32, 32, 3);
    FlowParams bad;
    bad.pyramid_scale = 1.5;
    CHECK_THROWS_AS(farneback_flow(img, img, bad), ContractError);
    bad = FlowParams{};
    bad.window = 14;
    CHECK_THROWS_AS(farneback_flow(img, img, bad), ContractError);
    bad = FlowParams{};
    bad.poly_n = 3;
    CHECK_THROWS_AS(farneback_flow(img, img, bad), ContractError);

    Plane other(16, 32, 0.0);
    CHECK_THROWS_AS(farneback_flow(img, other, FlowParams{}), ContractError);
}

TEST_CASE("mean_flow over boxes and masks") {
    FlowField flow(20, 16);
    for (std::size_t i = 0; i < flow.dx.size(); ++i) {
        flow.dx[i] = 1.5;
        flow.dy[i] = -0.5;
    }
    Vec2 mean = mean_flow(flow, BoundingBox{2, 3, 5, 5});
    CHECK(mean.x == doctest::Approx(1.5));
    CHECK(mean.y == doctest::Approx(-0.5));

    // Field nonzero only inside the box; restricting to the box sees only it.
    FlowField boxed(20, 16);
    for (int y = 4; y < 8; ++y)
        for (int x = 6; x < 10; ++x) boxed.dx[boxed.index(x, y)] = 1.0;
    Vec2 inside = mean_flow(boxed, BoundingBox{6, 4, 4, 4});
    CHECK(inside.x == doctest::Approx(1.0));
    CHECK(inside.y == doctest::Approx(0.0));

    // Mask weighting matches a direct weighted sum.
    Rng rng(5);
    FlowField rand_flow(12, 12);
    for (std::size_t i = 0; i < rand_flow.dx.size(); ++i) {
        rand_flow.dx[i] = rng.uniform(-2, 2);
        rand_flow.dy[i] = rng.uniform(-2, 2);
    }
    Mask mask = test::random_plane(12, 12, rng);
    double sx = 0, sy = 0, w = 0;
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        sx += mask.data[i] * rand_flow.dx[i];
        sy += mask.data[i] * rand_flow.dy[i];
        w += mask.data[i];
    }
    Vec2 weighted = mean_flow(rand_flow, mask);
    CHECK(weighted.x == doctest::Approx(sx / w).epsilon(1e-12));
    CHECK(weighted.y == doctest::Approx(sy / w).epsilon(1e-12));
}

TEST_CASE("mean_flow rejects empty regions") {
    FlowField flow(10, 10);
    CHECK_THROWS_AS(mean_flow(flow, BoundingBox{20, 20, 4, 4}), ContractError);
    Mask empty(10, 10, 0.0);
    CHECK_THROWS_AS(mean_flow(flow, empty), ContractError);
}

TEST_CASE("flow visualization stays in range and is deterministic") {
    Image texture = value_noise_texture(48, 48, 9);
    Image moved = translate_bilinear(texture, 2.0, 0.0, BorderPolicy::Replicate);
    FlowField flow = farneback_flow(texture, moved, FlowParams{});
    Image visual = flow_to_image(flow);
    for (double v : visual.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    Image again = flow_to_image(flow);
    CHECK(visual.data == again.data);
}
