#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "moblur/synth.hpp"
#include "moblur/tracking.hpp"
#include "test_support.hpp"

using namespace moblur;

namespace {

FlowField constant_flow(int w, int h, Vec2 v) {
    FlowField flow(w, h);
    std::fill(flow.dx.begin(), flow.dx.end(), v.x);
    std::fill(flow.dy.begin(), flow.dy.end(), v.y);
    return flow;
}

}  // namespace

TEST_CASE("propagate_bbox translation and clamping") {
    FlowField zero(64, 64);
    BoundingBox box{10, 10, 20, 20};
    BoundingBox same = propagate_bbox(box, zero);
    CHECK(same.x == box.x);
    CHECK(same.y == box.y);

    BoundingBox moved = propagate_bbox(box, constant_flow(64, 64, {5, -2}));
    CHECK(moved.x == doctest::Approx(15.0));
    CHECK(moved.y == doctest::Approx(8.0));
    CHECK(moved.w == 20.0);
    CHECK(moved.h == 20.0);

    // Pushed past the right edge: clamped to keep at least one pixel inside.
    BoundingBox edge{50, 10, 20, 20};
    BoundingBox clamped = propagate_bbox(edge, constant_flow(64, 64, {100, 0}));
    CHECK(clamped.x == doctest::Approx(63.0));
    CHECK(clamped.x < 64.0);
    CHECK(clamped.w == 20.0);
}

TEST_CASE("track_over_flows records one motion per frame pair") {
    std::vector<FlowField> flows(1, constant_flow(32, 32, {1, 0}));
    TrackResult track = track_over_flows(flows, BoundingBox{4, 4, 8, 8});
    REQUIRE(track.boxes.size() == 2);
    REQUIRE(track.motions.size() == 1);
    CHECK(track.boxes[0].x == 4.0);
    CHECK(track.boxes[1].x == doctest::Approx(5.0));
}

TEST_CASE("static scene keeps the box still") {
    SceneSpec spec;
    spec.velocity = {0.0, 0.0};
    SyntheticScene scene = generate(spec, 3);
    BoundingBox box0{10, 38, 20, 20};
    TrackResult track = track_sequence(scene.frames, box0, FlowParams{});
    REQUIRE(track.boxes.size() == scene.frames.size());
    for (const BoundingBox& b : track.boxes) {
        CHECK(std::abs(b.x - box0.x) < 0.1);
        CHECK(std::abs(b.y - box0.y) < 0.1);
    }
    for (const Vec2& m : track.motions) {
        CHECK(std::abs(m.x) < 0.05);
        CHECK(std::abs(m.y) < 0.05);
    }
}

TEST_CASE("tracking a moving square recovers the per-frame motion") {
    // The user's box sits inside a larger textured object, so every box pixel
    // carries the object's flow rather than the boundary transition band.
    SceneSpec spec;
    spec.width = 128;
    spec.height = 128;
    spec.object_start = {16.0, 44.0};
    spec.object_w = 40.0;
    spec.object_h = 40.0;
    spec.velocity = {2.0, 0.0};
    spec.object_texture = 0.5;
    spec.frame_count = 10;
    SyntheticScene scene = generate(spec, 11);

    BoundingBox box0{24, 52, 24, 24};
    TrackResult track = track_sequence(scene.frames, box0, FlowParams{});
    REQUIRE(track.motions.size() == 9);
    for (const Vec2& m : track.motions) {
        CHECK(std::abs(m.x - 2.0) <= 0.3);
        CHECK(std::abs(m.y) <= 0.3);
    }
    CHECK(std::abs(track.boxes.back().x - (24.0 + 18.0)) <= 1.0);
    CHECK(track.boxes.back().w == 24.0);
    CHECK(track.boxes.back().h == 24.0);
}

TEST_CASE("box size is preserved exactly across a track") {
    SceneSpec spec;
    spec.velocity = {1.0, 1.0};
    spec.object_start = {8.0, 8.0};
    SyntheticScene scene = generate(spec, 13);
    TrackResult track = track_sequence(scene.frames, BoundingBox{8, 8, 16, 16}, FlowParams{});
    for (const BoundingBox& b : track.boxes) {
        CHECK(b.w == 16.0);
        CHECK(b.h == 16.0);
    }
}

TEST_CASE("forward then reverse tracking returns near the start") {
    SceneSpec spec;
    spec.width = 128;
    spec.height = 128;
    spec.object_start = {16.0, 44.0};
    spec.object_w = 40.0;
    spec.object_h = 40.0;
    spec.velocity = {2.0, 0.0};
    spec.object_texture = 0.5;
    spec.frame_count = 8;
    SyntheticScene scene = generate(spec, 17);

    BoundingBox box0{24, 52, 24, 24};
    TrackResult forward = track_sequence(scene.frames, box0, FlowParams{});
    std::vector<Image> reversed(scene.frames.rbegin(), scene.frames.rend());
    TrackResult backward = track_sequence(reversed, forward.boxes.back(), FlowParams{});
    double per_step = 0.3;
    CHECK(std::abs(backward.boxes.back().x - box0.x) <=
          per_step * static_cast<double>(scene.frames.size()));
    CHECK(std::abs(backward.boxes.back().y - box0.y) <=
          per_step * static_cast<double>(scene.frames.size()));
}

TEST_CASE("median motion option resists outlier pixels") {
    FlowField flow = constant_flow(32, 32, {1, 0});
    // Poison a few pixels inside the box with huge vectors.
    for (int i = 0; i < 5; ++i) flow.dx[flow.index(8 + i, 8)] = 100.0;
    std::vector<FlowField> flows{flow};
    TrackResult mean_track = track_over_flows(flows, BoundingBox{4, 4, 12, 12}, false);
    TrackResult median_track = track_over_flows(flows, BoundingBox{4, 4, 12, 12}, true);
    CHECK(mean_track.motions[0].x > 2.0);
    CHECK(median_track.motions[0].x == doctest::Approx(1.0));
}

TEST_CASE("track_sequence needs two frames and is thread-count invariant") {
    SceneSpec spec;
    SyntheticScene scene = generate(spec, 23);
    CHECK_THROWS_AS(track_sequence({scene.frames[0]}, BoundingBox{0, 0, 8, 8}, FlowParams{}),
                    ContractError);

    TrackResult serial = track_sequence(scene.frames, BoundingBox{12, 40, 16, 16},
                                        FlowParams{}, false, 1);
    TrackResult parallel = track_sequence(scene.frames, BoundingBox{12, 40, 16, 16},
                                          FlowParams{}, false, 4);
    REQUIRE(serial.boxes.size() == parallel.boxes.size());
    for (std::size_t i = 0; i < serial.boxes.size(); ++i) {
        CHECK(serial.boxes[i].x == parallel.boxes[i].x);
        CHECK(serial.boxes[i].y == parallel.boxes[i].y);
    }
}
