#include "csbc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "csbc/error.hpp"

namespace csbc {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b + 0x632BE59BD9B4E019ull));
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

std::uint64_t Rng::next_u64() {
    return engine_();
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
    return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal(double mean, double sd) {
    if (has_spare_) {
        has_spare_ = false;
        return mean + sd * spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return mean + sd * radius * std::cos(theta);
}

bool Rng::bernoulli(double p) {
    return uniform() < p;
}

std::string_view to_string(DistractorClass cls) {
    return cls == DistractorClass::Tree ? "tree" : "wall";
}

DistractorClass parse_distractor_class(std::string_view name) {
    if (name == "tree") {
        return DistractorClass::Tree;
    }
    if (name == "wall") {
        return DistractorClass::Wall;
    }
    throw ConfigError("unknown distractor class '" + std::string(name) + "'");
}

void SceneConfig::validate() const {
    if (width < 128 || height < 128) {
        throw ConfigError("synthetic frames must be at least 128x128");
    }
    if (pedestrians < 0 || min_box_height < 8 || max_box_height < min_box_height) {
        throw ConfigError("invalid pedestrian count or box height range");
    }
    if (max_box_height > height || !(aspect > 0.0) || std::lround(aspect * max_box_height) > width) {
        throw ConfigError("boxes do not fit in the frame");
    }
    for (const auto& [cls, n] : distractors) {
        if (n < 0) {
            throw ConfigError("negative distractor count");
        }
    }
    if (!(overlap_budget >= 0.0 && overlap_budget <= 1.0) || max_attempts < 1) {
        throw ConfigError("overlap budget must lie in [0, 1]");
    }
    if (!(background >= 0.0 && background <= 1.0) || !(noise_sd >= 0.0)) {
        throw ConfigError("invalid background intensity or noise level");
    }
}

void DetectorProfile::validate() const {
    if (detector_id.empty()) {
        throw ConfigError("detector profile needs an id");
    }
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(tp_rate)) {
        throw ConfigError("tp_rate of '" + detector_id + "' must lie in [0, 1]");
    }
    for (const auto& [cls, p] : fp_rate) {
        if (!prob(p)) {
            throw ConfigError("fp rate of '" + detector_id + "' must lie in [0, 1]");
        }
    }
    if (!(localization_sigma >= 0.0) || !(score_tp.sd >= 0.0) || !(score_fp.sd >= 0.0)) {
        throw ConfigError("standard deviations of '" + detector_id + "' must be non-negative");
    }
}

namespace {

struct PlacedBox {
    BoundingBox bbox;
    int kind;  // -1 pedestrian, otherwise DistractorClass
};

BoundingBox random_box(Rng& rng, const SceneConfig& cfg) {
    const int h = rng.uniform_int(cfg.min_box_height, cfg.max_box_height);
    const int w = std::max(1, static_cast<int>(std::lround(cfg.aspect * h)));
    const int x = rng.uniform_int(0, cfg.width - w);
    const int y = rng.uniform_int(0, cfg.height - h);
    return BoundingBox(x, y, w, h);
}

// Calls fn(row, col, u, v) for every pixel whose centre lies in the box, with
// (u, v) the centre's relative position inside the box.
template <class Fn>
void for_pixels(const BoundingBox& b, int width, int height, Fn&& fn) {
    const int r0 = std::max(0, static_cast<int>(std::floor(b.y())));
    const int r1 = std::min(height, static_cast<int>(std::ceil(b.bottom())));
    const int c0 = std::max(0, static_cast<int>(std::floor(b.x())));
    const int c1 = std::min(width, static_cast<int>(std::ceil(b.right())));
    for (int r = r0; r < r1; ++r) {
        const double v = (r + 0.5 - b.y()) / b.h();
        if (v < 0.0 || v >= 1.0) {
            continue;
        }
        for (int c = c0; c < c1; ++c) {
            const double u = (c + 0.5 - b.x()) / b.w();
            if (u >= 0.0 && u < 1.0) {
                fn(r, c, u, v);
            }
        }
    }
}

bool in_range(double x, double lo, double hi) {
    return x >= lo && x < hi;
}

void render_pedestrian(GrayImage& img, const BoundingBox& b, Rng& rng) {
    const double brightness = rng.uniform(0.78, 0.95);
    const double shift = rng.uniform(-0.04, 0.04);
    for_pixels(b, img.width(), img.height(), [&](int r, int c, double u, double v) {
        const double cu = u - shift;
        const double du = (cu - 0.5) / 0.11;
        const double dv = (v - 0.11) / 0.08;
        const bool head = du * du + dv * dv <= 1.0;
        const bool torso = in_range(cu, 0.3, 0.7) && in_range(v, 0.2, 0.56);
        const bool arms = (in_range(cu, 0.19, 0.28) || in_range(cu, 0.72, 0.81)) && in_range(v, 0.22, 0.52);
        const bool legs = (in_range(cu, 0.32, 0.46) || in_range(cu, 0.54, 0.68)) && in_range(v, 0.56, 0.97);
        if (head || torso || arms || legs) {
            // brighter at the top, darker towards the feet
            img.at(r, c) = brightness * (1.0 - 0.35 * v);
        } else {
            img.at(r, c) = std::min(img.at(r, c), 0.3);
        }
    });
}

void render_tree(GrayImage& img, const BoundingBox& b, Rng& rng) {
    const int period = rng.uniform_int(4, 6);
    const int phase = rng.uniform_int(0, period - 1);
    const double dark = rng.uniform(0.1, 0.2);
    const double bright = rng.uniform(0.65, 0.8);
    for_pixels(b, img.width(), img.height(), [&](int r, int c, double u, double) {
        if (in_range(u, 0.08, 0.92)) {
            img.at(r, c) = ((c + phase) % period) < period / 2 ? dark : bright;
        }
    });
}

void render_wall(GrayImage& img, const BoundingBox& b, Rng& rng) {
    constexpr int kCols = 3;
    constexpr int kRows = 6;
    double shade[kRows][kCols];
    for (auto& row : shade) {
        for (double& s : row) {
            s = rng.uniform(0.2, 0.7);
        }
    }
    for_pixels(b, img.width(), img.height(), [&](int r, int c, double u, double v) {
        img.at(r, c) = shade[static_cast<int>(v * kRows)][static_cast<int>(u * kCols)];
    });
}

// Box layout followed, when `render` is set, by rasterization. Both stages
// draw from one stream, so layout alone reproduces the boxes of a full render.
Scene build_scene(std::uint64_t seed, const SceneConfig& cfg, std::string frame_id, bool render) {
    cfg.validate();
    Rng rng(seed);
    Scene scene;
    scene.frame_id = std::move(frame_id);
    scene.seed = seed;

    std::vector<PlacedBox> placed;
    auto place = [&](int kind) {
        for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
            auto box = random_box(rng, cfg);
            bool ok = std::all_of(placed.begin(), placed.end(),
                                  [&](const PlacedBox& p) { return jaccard(p.bbox, box) <= cfg.overlap_budget; });
            if (ok) {
                placed.push_back({box, kind});
                return;
            }
        }
        throw PlacementError("cannot place " + std::to_string(placed.size() + 1) + " boxes in a " +
                             std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
                             " frame within overlap budget " + std::to_string(cfg.overlap_budget));
    };
    for (int i = 0; i < cfg.pedestrians; ++i) {
        place(-1);
    }
    for (const auto& [cls, n] : cfg.distractors) {
        for (int i = 0; i < n; ++i) {
            place(static_cast<int>(cls));
        }
    }
    for (const auto& p : placed) {
        if (p.kind < 0) {
            scene.gts.push_back(GroundTruthBox{scene.frame_id, p.bbox, false});
        } else {
            scene.distractors.push_back(Distractor{p.bbox, static_cast<DistractorClass>(p.kind)});
        }
    }
    if (!render) {
        return scene;
    }

    scene.image = GrayImage(cfg.width, cfg.height);
    // uniform noise with standard deviation noise_sd
    const double half_width = std::sqrt(3.0) * cfg.noise_sd;
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            scene.image.at(r, c) = cfg.background + half_width * (2.0 * rng.uniform() - 1.0);
        }
    }
    // Distractors first so pedestrians sit on top where budgets allow overlap.
    for (const auto& p : placed) {
        if (p.kind == static_cast<int>(DistractorClass::Tree)) {
            render_tree(scene.image, p.bbox, rng);
        } else if (p.kind == static_cast<int>(DistractorClass::Wall)) {
            render_wall(scene.image, p.bbox, rng);
        }
    }
    for (const auto& p : placed) {
        if (p.kind < 0) {
            render_pedestrian(scene.image, p.bbox, rng);
        }
    }
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            scene.image.at(r, c) = std::clamp(scene.image.at(r, c), 0.0, 1.0);
        }
    }
    return scene;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg, std::string frame_id) {
    return build_scene(seed, cfg, std::move(frame_id), true);
}

Scene layout_scene(std::uint64_t seed, const SceneConfig& cfg, std::string frame_id) {
    return build_scene(seed, cfg, std::move(frame_id), false);
}

namespace {

BoundingBox jitter(const BoundingBox& b, double sigma, Rng& rng) {
    if (sigma == 0.0) {
        return b;
    }
    const double x1 = b.x() + rng.normal(0.0, sigma);
    const double y1 = b.y() + rng.normal(0.0, sigma);
    const double x2 = std::max(b.right() + rng.normal(0.0, sigma), x1 + 1.0);
    const double y2 = std::max(b.bottom() + rng.normal(0.0, sigma), y1 + 1.0);
    return BoundingBox(x1, y1, x2 - x1, y2 - y1);
}

}  // namespace

void simulate_detector(const DetectorProfile& profile, const Scene& scene, DetectionSet& out) {
    profile.validate();
    Rng rng(mix_seed(profile.rng_seed, scene.seed));
    for (const auto& gt : scene.gts) {
        if (rng.bernoulli(profile.tp_rate)) {
            const auto box = jitter(gt.bbox, profile.localization_sigma, rng);
            out.add(Detection(scene.frame_id, box, rng.normal(profile.score_tp.mean, profile.score_tp.sd),
                              profile.detector_id));
        }
    }
    for (const auto& d : scene.distractors) {
        auto it = profile.fp_rate.find(d.cls);
        const double rate = it == profile.fp_rate.end() ? 0.0 : it->second;
        if (rng.bernoulli(rate)) {
            const auto box = jitter(d.bbox, profile.localization_sigma, rng);
            out.add(Detection(scene.frame_id, box, rng.normal(profile.score_fp.mean, profile.score_fp.sd),
                              profile.detector_id));
        }
    }
}

DetectionSet simulate_detector(const DetectorProfile& profile, const Scene& scene) {
    DetectionSet out(profile.detector_id);
    simulate_detector(profile, scene, out);
    return out;
}

std::string synth_frame_id(const std::string& prefix, std::size_t index) {
    char digits[32];
    std::snprintf(digits, sizeof digits, "%06zu", index);
    return prefix + digits;
}

SyntheticDataset make_dataset(std::uint64_t seed, std::size_t n_frames, const SceneConfig& cfg,
                              std::span<const DetectorProfile> profiles, const std::string& frame_prefix) {
    cfg.validate();
    SyntheticDataset ds;
    ds.scene_config = cfg;
    for (const auto& p : profiles) {
        ds.detections.emplace_back(p.detector_id);
    }
    for (std::size_t i = 0; i < n_frames; ++i) {
        const auto frame = synth_frame_id(frame_prefix, i);
        const auto frame_seed = mix_seed(seed, i);
        ds.frame_seeds.emplace(frame, frame_seed);
        const auto scene = layout_scene(frame_seed, cfg, frame);
        ds.gts.insert(ds.gts.end(), scene.gts.begin(), scene.gts.end());
        for (std::size_t p = 0; p < profiles.size(); ++p) {
            simulate_detector(profiles[p], scene, ds.detections[p]);
        }
    }
    return ds;
}

SyntheticImages::SyntheticImages(const SyntheticDataset& dataset)
    : cfg_(dataset.scene_config), frame_seeds_(dataset.frame_seeds) {}

GrayImage SyntheticImages::load(std::string_view frame_id) const {
    std::lock_guard lock(mutex_);
    if (cached_frame_ != frame_id || cached_.empty()) {
        auto it = frame_seeds_.find(frame_id);
        if (it == frame_seeds_.end()) {
            throw IoError("no synthetic frame '" + std::string(frame_id) + "'");
        }
        cached_ = generate_scene(it->second, cfg_, std::string(frame_id)).image;
        cached_frame_ = std::string(frame_id);
    }
    return cached_;
}

}  // namespace csbc
