#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "csbc/features.hpp"
#include "csbc/fusion.hpp"
#include "csbc/synth.hpp"

namespace csbc {

/// End-to-end synthetic comparison of spatial consensus against its
/// content-based variant: simulate a training and a held-out split, fit
/// calibration maps and one PLS model per support detector on the training
/// split, fuse the held-out split both ways and score each with LAMR.
struct ExperimentConfig {
    SceneConfig scene;
    std::vector<DetectorProfile> profiles;
    std::string root_id;
    std::size_t train_frames = 200;
    std::size_t test_frames = 100;
    DescriptorTag descriptor = DescriptorTag::Hog;
    int components = 5;
    FusionConfig fusion;
    double iou_threshold = 0.5;
};

/// Three-detector world: a root detector firing on both distractor classes and
/// two support detectors whose false positives concentrate on trees and on
/// walls respectively, each on its own score scale.
ExperimentConfig default_experiment();

struct ExperimentResult {
    double lamr_root = 0.0;
    double lamr_sc = 0.0;
    double lamr_csbc = 0.0;
    FusionStats sc_stats;
    FusionStats csbc_stats;
};

ExperimentResult run_experiment(std::uint64_t seed, const ExperimentConfig& cfg);

}  // namespace csbc
