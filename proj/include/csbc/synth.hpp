#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csbc/detection.hpp"
#include "csbc/image.hpp"

namespace csbc {

/// Portable generator: mt19937_64 seeded through splitmix64, with uniform and
/// normal deviates derived by hand (53-bit mantissa, Box-Muller) so streams
/// are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    int uniform_int(int lo, int hi);         // [lo, hi]
    double normal(double mean = 0.0, double sd = 1.0);
    bool bernoulli(double p);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed combining two streams, order-sensitive.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

enum class DistractorClass { Tree, Wall };

std::string_view to_string(DistractorClass cls);
DistractorClass parse_distractor_class(std::string_view name);

struct SceneConfig {
    int width = 384;
    int height = 256;
    int pedestrians = 2;
    std::map<DistractorClass, int> distractors{{DistractorClass::Tree, 2}, {DistractorClass::Wall, 2}};
    int min_box_height = 64;
    int max_box_height = 112;
    double aspect = 0.5;  // width / height of every placed box
    // Largest jaccard allowed between any two placed boxes.
    double overlap_budget = 0.0;
    double background = 0.45;
    double noise_sd = 0.03;
    int max_attempts = 2000;

    // ConfigError on frames below 128x128 or boxes that cannot fit.
    void validate() const;
};

struct Distractor {
    BoundingBox bbox;
    DistractorClass cls;
};

struct Scene {
    std::string frame_id;
    std::uint64_t seed = 0;
    GrayImage image;
    std::vector<GroundTruthBox> gts;
    std::vector<Distractor> distractors;
};

/// Renders pedestrians (bright upright figure with head, torso, arms and legs
/// on a vertical intensity gradient), trees (high-frequency vertical stripes)
/// and walls (flat rectangular blocks) on a noisy background. Deterministic in
/// seed. PlacementError when the boxes cannot be laid out within the budget.
Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg, std::string frame_id = "f000000");

/// The boxes of generate_scene without rendering; `image` stays empty.
Scene layout_scene(std::uint64_t seed, const SceneConfig& cfg, std::string frame_id = "f000000");

struct ScoreDistribution {
    double mean = 0.0;
    double sd = 1.0;
};

struct DetectorProfile {
    std::string detector_id;
    double tp_rate = 1.0;
    // Probability of a false positive on each distractor of the class.
    std::map<DistractorClass, double> fp_rate;
    double localization_sigma = 0.0;  // Gaussian jitter on each box edge, px
    ScoreDistribution score_tp;
    ScoreDistribution score_fp;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Detections of one simulated detector on one scene, deterministic in
/// (profile.rng_seed, scene.seed). Hits jitter the ground-truth box; false
/// positives jitter distractor boxes.
DetectionSet simulate_detector(const DetectorProfile& profile, const Scene& scene);

/// Appends to an existing set of the same detector.
void simulate_detector(const DetectorProfile& profile, const Scene& scene, DetectionSet& out);

/// Frame id for index i: prefix followed by six digits.
std::string synth_frame_id(const std::string& prefix, std::size_t index);

/// Many scenes with their detector outputs. Images are not kept; they are
/// regenerated on demand through SyntheticImages.
struct SyntheticDataset {
    SceneConfig scene_config;
    std::map<std::string, std::uint64_t, std::less<>> frame_seeds;
    std::vector<GroundTruthBox> gts;
    std::vector<DetectionSet> detections;  // one per profile, profile order
};

SyntheticDataset make_dataset(std::uint64_t seed, std::size_t n_frames, const SceneConfig& cfg,
                              std::span<const DetectorProfile> profiles, const std::string& frame_prefix = "f");

/// Image source that re-renders dataset frames, caching the latest one.
class SyntheticImages : public ImageSource {
public:
    explicit SyntheticImages(const SyntheticDataset& dataset);
    GrayImage load(std::string_view frame_id) const override;

private:
    SceneConfig cfg_;
    std::map<std::string, std::uint64_t, std::less<>> frame_seeds_;
    mutable std::mutex mutex_;
    mutable std::string cached_frame_;
    mutable GrayImage cached_;
};

}  // namespace csbc
