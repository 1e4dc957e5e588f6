#include "moblur/tracking.hpp"

#include <algorithm>

#include "moblur/parallel.hpp"

namespace moblur {

namespace {

BoundingBox clamp_to_frame(BoundingBox box, int width, int height) {
    // Keep at least one pixel of overlap; the size is preserved.
    box.x = std::clamp(box.x, 1.0 - box.w, width - 1.0);
    box.y = std::clamp(box.y, 1.0 - box.h, height - 1.0);
    return box;
}

}  // namespace

BoundingBox propagate_bbox(const BoundingBox& box, const FlowField& flow) {
    require(box.w > 0 && box.h > 0, "propagate_bbox: box size must be positive");
    Vec2 motion = mean_flow(flow, box);
    BoundingBox moved{box.x + motion.x, box.y + motion.y, box.w, box.h};
    return clamp_to_frame(moved, flow.width, flow.height);
}

TrackResult track_over_flows(const std::vector<FlowField>& flows, const BoundingBox& box0,
                             bool use_median) {
    require(!flows.empty(), "track_over_flows: need at least one flow field");
    require(box0.w > 0 && box0.h > 0, "track_over_flows: box size must be positive");

    TrackResult track;
    track.boxes.reserve(flows.size() + 1);
    track.motions.reserve(flows.size());
    track.boxes.push_back(box0);

    BoundingBox box = box0;
    for (const FlowField& flow : flows) {
        Vec2 motion = use_median ? median_flow(flow, box) : mean_flow(flow, box);
        track.motions.push_back(motion);
        box = clamp_to_frame({box.x + motion.x, box.y + motion.y, box.w, box.h}, flow.width,
                             flow.height);
        track.boxes.push_back(box);
    }
    return track;
}

TrackResult track_sequence(const std::vector<Image>& frames, const BoundingBox& box0,
                           const FlowParams& params, bool use_median, int threads) {
    require(frames.size() >= 2, "track_sequence: need at least 2 frames");
    std::vector<FlowField> flows(frames.size() - 1);
    parallel_for(static_cast<int>(flows.size()), threads, [&](int t) {
        flows[static_cast<std::size_t>(t)] =
            farneback_flow(frames[static_cast<std::size_t>(t)],
                           frames[static_cast<std::size_t>(t) + 1], params);
    });
    return track_over_flows(flows, box0, use_median);
}

}  // namespace moblur
