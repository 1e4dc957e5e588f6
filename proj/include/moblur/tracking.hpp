#pragma once

#include <vector>

#include "moblur/image.hpp"
#include "moblur/optical_flow.hpp"

namespace moblur {

// Box positions over a clip plus the per-frame-pair region motion.
struct TrackResult {
    std::vector<BoundingBox> boxes;  // one per frame; boxes[0] is the user input
    std::vector<Vec2> motions;       // one per consecutive frame pair
};

// Translate by the region's mean flow, clamped so at least one pixel stays
// inside the frame. Size never changes.
BoundingBox propagate_bbox(const BoundingBox& box, const FlowField& flow);

// Flow-propagation tracking over the whole clip. Motions come from the mean
// (or median, when use_median) flow inside the current box.
TrackResult track_sequence(const std::vector<Image>& frames, const BoundingBox& box0,
                           const FlowParams& params = {}, bool use_median = false,
                           int threads = 1);

// Same, over precomputed consecutive-pair flow fields.
TrackResult track_over_flows(const std::vector<FlowField>& flows, const BoundingBox& box0,
                             bool use_median = false);

}  // namespace moblur
