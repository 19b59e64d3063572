#pragma once

#include <vector>

#include "csbc/detection.hpp"

namespace fixture {

// Two frames, three pedestrians. Sorted by score the windows are
// hit, false positive, hit (frame a), false positive, hit (frame b).
inline csbc::DetectionSet two_frame_detections() {
    using csbc::BoundingBox;
    csbc::DetectionSet set("toy");
    set.add({"a", BoundingBox(0, 0, 10, 20), 0.9, "toy"});
    set.add({"a", BoundingBox(100, 100, 10, 20), 0.8, "toy"});
    set.add({"a", BoundingBox(51, 0, 10, 20), 0.7, "toy"});
    set.add({"b", BoundingBox(200, 0, 10, 20), 0.6, "toy"});
    set.add({"b", BoundingBox(0, 1, 10, 20), 0.5, "toy"});
    return set;
}

inline std::vector<csbc::GroundTruthBox> two_frame_truth() {
    using csbc::BoundingBox;
    return {{"a", BoundingBox(0, 0, 10, 20), false},
            {"a", BoundingBox(50, 0, 10, 20), false},
            {"b", BoundingBox(0, 0, 10, 20), false}};
}

}  // namespace fixture
