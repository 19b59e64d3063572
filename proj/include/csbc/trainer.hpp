#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "csbc/detection.hpp"
#include "csbc/features.hpp"
#include "csbc/image.hpp"
#include "csbc/pls.hpp"

namespace csbc {

/// Jaccard of bbox with the closest (max-Jaccard) non-ignored ground truth;
/// 0 when there is none.
double label_window(const BoundingBox& bbox, std::span<const GroundTruthBox> frame_gts);

struct TrainingOptions {
    // Cap on training rows per detector; 0 keeps every window. When the cap
    // binds, rows are taken at a fixed stride over the canonical order.
    std::size_t max_windows = 0;
};

struct TrainingSet {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

/// One row per detector window in canonical order (frames lexicographic, then
/// file order). Frames missing from the ground truth are treated as empty.
/// Throws InputError for a detector without windows and IoError naming the
/// frame when its image cannot be loaded.
TrainingSet build_training_set(const DetectionSet& dets, std::span<const GroundTruthBox> gts,
                               const ImageSource& images, const FeatureExtractor& extractor,
                               const TrainingOptions& options = {});

/// build_training_set followed by fit_pls, tagged with the extractor's descriptor.
PlsModel train_detector_model(const DetectionSet& dets, std::span<const GroundTruthBox> gts,
                              const ImageSource& images, const FeatureExtractor& extractor, int components,
                              const PlsOptions& pls_options = {}, const TrainingOptions& options = {});

// Same, on an already assembled training set.
PlsModel train_detector_model(const TrainingSet& set, const std::string& detector_id, DescriptorTag tag,
                              int components, const PlsOptions& pls_options = {});

}  // namespace csbc
