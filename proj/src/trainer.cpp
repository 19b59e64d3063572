#include "csbc/trainer.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "csbc/error.hpp"

namespace csbc {

double label_window(const BoundingBox& bbox, std::span<const GroundTruthBox> frame_gts) {
    double best = 0.0;
    for (const auto& gt : frame_gts) {
        if (!gt.ignore) {
            best = std::max(best, jaccard(bbox, gt.bbox));
        }
    }
    return best;
}

namespace {

std::vector<std::size_t> stride_sample(std::size_t total, std::size_t cap) {
    std::vector<std::size_t> rows;
    if (cap == 0 || cap >= total) {
        rows.resize(total);
        for (std::size_t i = 0; i < total; ++i) {
            rows[i] = i;
        }
        return rows;
    }
    rows.reserve(cap);
    for (std::size_t i = 0; i < cap; ++i) {
        rows.push_back(i * total / cap);
    }
    return rows;
}

}  // namespace

TrainingSet build_training_set(const DetectionSet& dets, std::span<const GroundTruthBox> gts,
                               const ImageSource& images, const FeatureExtractor& extractor,
                               const TrainingOptions& options) {
    if (dets.empty()) {
        throw InputError("detector '" + dets.detector_id() + "' has no windows to train on");
    }
    const auto gt_index = index_by_frame(gts);
    const auto windows = dets.flatten();
    const auto rows = stride_sample(windows.size(), options.max_windows);

    std::vector<std::vector<double>> features;
    features.reserve(rows.size());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));

    std::string loaded_frame;
    GrayImage image;
    bool have_image = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Detection& w = windows[rows[r]];
        if (extractor.needs_image() && (!have_image || loaded_frame != w.frame_id)) {
            image = images.load(w.frame_id);
            loaded_frame = w.frame_id;
            have_image = true;
        }
        auto fv = extractor.extract(image, w.frame_id, w.bbox);
        if (!features.empty() && fv.values.size() != features.front().size()) {
            throw InputError("descriptor width changed between windows");
        }
        features.push_back(std::move(fv.values));
        auto it = gt_index.find(w.frame_id);
        y(static_cast<Eigen::Index>(r)) =
            it == gt_index.end() ? 0.0 : label_window(w.bbox, it->second);
    }

    TrainingSet set;
    set.X.resize(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(features.front().size()));
    for (std::size_t r = 0; r < features.size(); ++r) {
        for (std::size_t c = 0; c < features[r].size(); ++c) {
            set.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = features[r][c];
        }
    }
    set.y = std::move(y);
    return set;
}

PlsModel train_detector_model(const DetectionSet& dets, std::span<const GroundTruthBox> gts,
                              const ImageSource& images, const FeatureExtractor& extractor, int components,
                              const PlsOptions& pls_options, const TrainingOptions& options) {
    return train_detector_model(build_training_set(dets, gts, images, extractor, options), dets.detector_id(),
                                extractor.tag(), components, pls_options);
}

PlsModel train_detector_model(const TrainingSet& set, const std::string& detector_id, DescriptorTag tag,
                              int components, const PlsOptions& pls_options) {
    try {
        return fit_pls(set.X, set.y, components, pls_options, tag);
    } catch (const DegenerateError& e) {
        throw DegenerateError("detector '" + detector_id + "': " + e.what() +
                              " (every window has the same overlap label; add background windows or "
                              "ground truth so both hits and misses are present)");
    }
}

}  // namespace csbc
