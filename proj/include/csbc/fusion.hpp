#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csbc/calibration.hpp"
#include "csbc/detection.hpp"
#include "csbc/features.hpp"
#include "csbc/image.hpp"
#include "csbc/pls.hpp"

namespace csbc {

enum class FusionMode { Sc, Csbc };
enum class SupportPolicy { AllWindows, BestPerDetector };

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);
std::string_view to_string(SupportPolicy policy);
SupportPolicy parse_support_policy(std::string_view name);

struct FusionConfig {
    // Minimum jaccard for a support window to count as spatial support.
    double overlap_threshold = 0.5;
    FusionMode mode = FusionMode::Sc;
    // Range applied to PLS weights before they scale a support score.
    double clamp_low = 0.0;
    double clamp_high = 1.0;
    SupportPolicy support_policy = SupportPolicy::AllWindows;
    // Content mode only: multiply the PLS weight by the jaccard as well.
    bool multiply_jaccard = false;

    // ConfigError unless 0 < overlap_threshold <= 1 and clamp_low <= clamp_high.
    void validate() const;
};

struct Support {
    const Detection* window;
    double jaccard;
};

using CalibrationTable = std::map<std::string, CalibrationMap, std::less<>>;
using ModelTable = std::map<std::string, PlsModel, std::less<>>;

/// Windows of the other detectors on the root window's frame whose jaccard
/// with it reaches the overlap threshold, ordered by detector id and then by
/// position in the detector's frame list. Pointers refer into `others`.
std::vector<Support> find_support(const Detection& root_window, std::span<const DetectionSet> others,
                                  const FusionConfig& cfg);

struct FusionStats {
    std::size_t windows_in = 0;
    std::size_t discarded = 0;
    std::size_t windows_out = 0;
};

struct FusionResult {
    DetectionSet fused;
    FusionStats stats;
};

/// Spatial consensus: each supported root window scores
///   score(w_r) + sum_j calibrated(score(w_j)) * J_rj
/// and root windows without support are dropped. Boxes never move; the root
/// score is taken as is (it defines the reference scale). Contributions are
/// summed in detector-id order so the result does not depend on the order of
/// `others`. ConfigError on a missing calibration map, duplicate detector ids
/// or a support set carrying the root's id.
FusionResult fuse_sc(const DetectionSet& root, std::span<const DetectionSet> others,
                     const CalibrationTable& calibrations, const FusionConfig& cfg);

/// Content-based spatial consensus: like fuse_sc but each support term is
///   calibrated(score(w_j)) * clamp(PLS_j(theta(w_j)))
/// with theta extracted from the support window's own content. A supported
/// root window is kept even when every weight clamps to zero. ConfigError on a
/// missing model or a model whose descriptor differs from the extractor's.
FusionResult fuse_csbc(const DetectionSet& root, std::span<const DetectionSet> others,
                       const CalibrationTable& calibrations, const ModelTable& models, const ImageSource& images,
                       const FeatureExtractor& extractor, const FusionConfig& cfg);

}  // namespace csbc
