#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csbc/geometry.hpp"

namespace csbc {

/// A scored window emitted by one detector on one frame. Scores are on the
/// detector's own (unbounded) scale and must be finite.
struct Detection {
    Detection(std::string frame_id, BoundingBox bbox, double score, std::string detector_id);

    std::string frame_id;
    BoundingBox bbox;
    double score;
    std::string detector_id;
};

/// All windows of one detector, grouped by frame. Frames iterate in
/// lexicographic order; windows keep their insertion order within a frame.
class DetectionSet {
public:
    using FrameMap = std::map<std::string, std::vector<Detection>, std::less<>>;

    explicit DetectionSet(std::string detector_id);

    const std::string& detector_id() const noexcept { return detector_id_; }

    // Throws InputError when the detection belongs to another detector.
    void add(Detection det);

    // Empty span when the frame has no windows.
    std::span<const Detection> frame(std::string_view frame_id) const;

    const FrameMap& frames() const noexcept { return frames_; }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    // Windows in canonical order: frames lexicographic, then insertion order.
    std::vector<Detection> flatten() const;

private:
    std::string detector_id_;
    FrameMap frames_;
    std::size_t size_ = 0;
};

struct GroundTruthBox {
    std::string frame_id;
    BoundingBox bbox;
    bool ignore = false;
};

/// Ground truth indexed by frame, preserving file order within each frame.
using GroundTruthIndex = std::map<std::string, std::vector<GroundTruthBox>, std::less<>>;

GroundTruthIndex index_by_frame(std::span<const GroundTruthBox> gts);

/// Greedy non-maximum suppression over the windows of one detector on one frame.
/// Repeatedly keeps the best remaining window and drops every window whose
/// jaccard with it is >= overlap_threshold. Equal scores keep input order.
/// Throws ConfigError when overlap_threshold is outside [0, 1].
std::vector<Detection> greedy_nms(std::span<const Detection> dets, double overlap_threshold);

/// greedy_nms applied per frame.
DetectionSet greedy_nms(const DetectionSet& set, double overlap_threshold);

}  // namespace csbc
