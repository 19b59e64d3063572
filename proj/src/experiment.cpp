#include "csbc/experiment.hpp"

#include <algorithm>

#include "csbc/calibration.hpp"
#include "csbc/error.hpp"
#include "csbc/eval.hpp"
#include "csbc/trainer.hpp"

namespace csbc {

ExperimentConfig default_experiment() {
    ExperimentConfig cfg;
    cfg.root_id = "root";

    DetectorProfile root;
    root.detector_id = "root";
    root.tp_rate = 0.9;
    root.fp_rate = {{DistractorClass::Tree, 0.5}, {DistractorClass::Wall, 0.5}};
    root.localization_sigma = 3.0;
    root.score_tp = {1.0, 0.6};
    root.score_fp = {0.6, 0.6};
    root.rng_seed = 11;

    DetectorProfile trees;
    trees.detector_id = "tree_prone";
    trees.tp_rate = 0.85;
    trees.fp_rate = {{DistractorClass::Tree, 0.8}, {DistractorClass::Wall, 0.1}};
    trees.localization_sigma = 3.0;
    trees.score_tp = {2.0, 1.0};
    trees.score_fp = {1.6, 1.0};
    trees.rng_seed = 23;

    DetectorProfile walls;
    walls.detector_id = "wall_prone";
    walls.tp_rate = 0.85;
    walls.fp_rate = {{DistractorClass::Tree, 0.1}, {DistractorClass::Wall, 0.8}};
    walls.localization_sigma = 3.0;
    walls.score_tp = {10.0, 4.0};
    walls.score_fp = {8.0, 4.0};
    walls.rng_seed = 37;

    cfg.profiles = {root, trees, walls};
    return cfg;
}

namespace {

std::vector<double> all_scores(const DetectionSet& set) {
    std::vector<double> scores;
    scores.reserve(set.size());
    for (const auto& [frame, dets] : set.frames()) {
        for (const auto& d : dets) {
            scores.push_back(d.score);
        }
    }
    return scores;
}

}  // namespace

ExperimentResult run_experiment(std::uint64_t seed, const ExperimentConfig& cfg) {
    const auto root_it = std::find_if(cfg.profiles.begin(), cfg.profiles.end(),
                                      [&](const DetectorProfile& p) { return p.detector_id == cfg.root_id; });
    if (root_it == cfg.profiles.end()) {
        throw ConfigError("root detector '" + cfg.root_id + "' has no profile");
    }
    const auto root_index = static_cast<std::size_t>(root_it - cfg.profiles.begin());

    const auto train = make_dataset(mix_seed(seed, 1), cfg.train_frames, cfg.scene, cfg.profiles, "train");
    const auto test = make_dataset(mix_seed(seed, 2), cfg.test_frames, cfg.scene, cfg.profiles, "test");
    const SyntheticImages train_images(train);
    const SyntheticImages test_images(test);
    const FeatureExtractor extractor(cfg.descriptor);

    CalibrationTable calibrations;
    ModelTable models;
    std::vector<DetectionSet> support;
    const auto root_scores = all_scores(train.detections[root_index]);
    for (std::size_t p = 0; p < cfg.profiles.size(); ++p) {
        if (p == root_index) {
            continue;
        }
        const auto& id = cfg.profiles[p].detector_id;
        calibrations.emplace(id, fit_calibration(all_scores(train.detections[p]), root_scores, id));
        models.emplace(id, train_detector_model(train.detections[p], train.gts, train_images, extractor,
                                                cfg.components));
        support.push_back(test.detections[p]);
    }

    const auto& root = test.detections[root_index];
    FusionConfig sc_cfg = cfg.fusion;
    sc_cfg.mode = FusionMode::Sc;
    FusionConfig csbc_cfg = cfg.fusion;
    csbc_cfg.mode = FusionMode::Csbc;
    const auto sc = fuse_sc(root, support, calibrations, sc_cfg);
    const auto csbc = fuse_csbc(root, support, calibrations, models, test_images, extractor, csbc_cfg);

    auto lamr = [&](const DetectionSet& set) {
        return log_average_miss_rate(det_curve(set, test.gts, cfg.iou_threshold, cfg.test_frames));
    };
    ExperimentResult result;
    result.lamr_root = lamr(root);
    result.lamr_sc = lamr(sc.fused);
    result.lamr_csbc = lamr(csbc.fused);
    result.sc_stats = sc.stats;
    result.csbc_stats = csbc.stats;
    return result;
}

}  // namespace csbc
