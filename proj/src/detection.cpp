#include "csbc/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csbc/error.hpp"

namespace csbc {

Detection::Detection(std::string frame, BoundingBox box, double s, std::string detector)
    : frame_id(std::move(frame)), bbox(box), score(s), detector_id(std::move(detector)) {
    if (!std::isfinite(score)) {
        throw InputError("detection score must be finite");
    }
    if (detector_id.empty()) {
        throw InputError("detection needs a detector id");
    }
}

DetectionSet::DetectionSet(std::string detector_id) : detector_id_(std::move(detector_id)) {
    if (detector_id_.empty()) {
        throw InputError("detection set needs a detector id");
    }
}

void DetectionSet::add(Detection det) {
    if (det.detector_id != detector_id_) {
        throw InputError("detection from '" + det.detector_id + "' added to set of '" +
                         detector_id_ + "'");
    }
    auto it = frames_.find(det.frame_id);
    if (it == frames_.end()) {
        it = frames_.emplace(det.frame_id, std::vector<Detection>{}).first;
    }
    it->second.push_back(std::move(det));
    ++size_;
}

std::span<const Detection> DetectionSet::frame(std::string_view frame_id) const {
    auto it = frames_.find(frame_id);
    if (it == frames_.end()) {
        return {};
    }
    return it->second;
}

std::vector<Detection> DetectionSet::flatten() const {
    std::vector<Detection> out;
    out.reserve(size_);
    for (const auto& [frame, dets] : frames_) {
        out.insert(out.end(), dets.begin(), dets.end());
    }
    return out;
}

GroundTruthIndex index_by_frame(std::span<const GroundTruthBox> gts) {
    GroundTruthIndex index;
    for (const auto& gt : gts) {
        index[gt.frame_id].push_back(gt);
    }
    return index;
}

std::vector<Detection> greedy_nms(std::span<const Detection> dets, double overlap_threshold) {
    if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) {
        throw ConfigError("nms overlap threshold must lie in [0, 1]");
    }
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<bool> suppressed(dets.size(), false);
    std::vector<Detection> kept;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (suppressed[order[i]]) {
            continue;
        }
        const Detection& best = dets[order[i]];
        kept.push_back(best);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (!suppressed[order[j]] && jaccard(best.bbox, dets[order[j]].bbox) >= overlap_threshold) {
                suppressed[order[j]] = true;
            }
        }
    }
    return kept;
}

DetectionSet greedy_nms(const DetectionSet& set, double overlap_threshold) {
    DetectionSet out(set.detector_id());
    for (const auto& [frame, dets] : set.frames()) {
        for (auto& det : greedy_nms(dets, overlap_threshold)) {
            out.add(std::move(det));
        }
    }
    return out;
}

}  // namespace csbc
