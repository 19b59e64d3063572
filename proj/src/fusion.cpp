#include "csbc/fusion.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <unordered_map>

#include "csbc/error.hpp"

namespace csbc {

std::string_view to_string(FusionMode mode) {
    return mode == FusionMode::Sc ? "sc" : "csbc";
}

FusionMode parse_fusion_mode(std::string_view name) {
    if (name == "sc") {
        return FusionMode::Sc;
    }
    if (name == "csbc") {
        return FusionMode::Csbc;
    }
    throw ConfigError("unknown fusion mode '" + std::string(name) + "'");
}

std::string_view to_string(SupportPolicy policy) {
    return policy == SupportPolicy::AllWindows ? "all_windows" : "best_per_detector";
}

SupportPolicy parse_support_policy(std::string_view name) {
    if (name == "all_windows") {
        return SupportPolicy::AllWindows;
    }
    if (name == "best_per_detector") {
        return SupportPolicy::BestPerDetector;
    }
    throw ConfigError("unknown support policy '" + std::string(name) + "'");
}

void FusionConfig::validate() const {
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
        throw ConfigError("overlap threshold must lie in (0, 1]");
    }
    if (!(clamp_low <= clamp_high)) {
        throw ConfigError("weight clamp needs low <= high");
    }
}

namespace {

std::vector<const DetectionSet*> canonical_order(std::span<const DetectionSet> others) {
    std::vector<const DetectionSet*> sets;
    sets.reserve(others.size());
    for (const auto& s : others) {
        sets.push_back(&s);
    }
    std::sort(sets.begin(), sets.end(),
              [](const DetectionSet* a, const DetectionSet* b) { return a->detector_id() < b->detector_id(); });
    for (std::size_t i = 1; i < sets.size(); ++i) {
        if (sets[i]->detector_id() == sets[i - 1]->detector_id()) {
            throw ConfigError("detector '" + sets[i]->detector_id() + "' appears twice among support detectors");
        }
    }
    return sets;
}

std::vector<Support> collect_support(const Detection& root_window, const std::vector<const DetectionSet*>& sets,
                                     const FusionConfig& cfg) {
    std::vector<Support> out;
    for (const DetectionSet* set : sets) {
        const auto frame = set->frame(root_window.frame_id);
        std::optional<Support> best;
        for (const Detection& w : frame) {
            const double j = jaccard(root_window.bbox, w.bbox);
            if (j < cfg.overlap_threshold) {
                continue;
            }
            if (cfg.support_policy == SupportPolicy::AllWindows) {
                out.push_back({&w, j});
            } else if (!best || j > best->jaccard || (j == best->jaccard && w.score > best->window->score)) {
                best = Support{&w, j};
            }
        }
        if (best) {
            out.push_back(*best);
        }
    }
    return out;
}

// Weight given to one support window; the Sc weight is its jaccard.
using TermWeight = std::function<double(const Support&)>;

FusionResult fuse_with(const DetectionSet& root, const std::vector<const DetectionSet*>& sets,
                       const CalibrationTable& calibrations, const FusionConfig& cfg,
                       const std::function<void(std::string_view)>& on_frame, const TermWeight& weight) {
    for (const DetectionSet* set : sets) {
        if (set->detector_id() == root.detector_id()) {
            throw ConfigError("root detector '" + root.detector_id() + "' is also listed as support");
        }
        if (!calibrations.contains(set->detector_id())) {
            throw ConfigError("no calibration map for detector '" + set->detector_id() + "'");
        }
    }

    FusionResult result{DetectionSet(root.detector_id()), {}};
    for (const auto& [frame, windows] : root.frames()) {
        bool frame_ready = false;
        for (const Detection& w_r : windows) {
            ++result.stats.windows_in;
            const auto support = collect_support(w_r, sets, cfg);
            if (support.empty()) {
                ++result.stats.discarded;
                continue;
            }
            if (!frame_ready) {
                on_frame(frame);
                frame_ready = true;
            }
            double score = w_r.score;
            for (const Support& s : support) {
                const auto& cal = calibrations.find(s.window->detector_id)->second;
                score += cal.apply(s.window->score) * weight(s);
            }
            result.fused.add(Detection(w_r.frame_id, w_r.bbox, score, w_r.detector_id));
            ++result.stats.windows_out;
        }
    }
    return result;
}

}  // namespace

std::vector<Support> find_support(const Detection& root_window, std::span<const DetectionSet> others,
                                  const FusionConfig& cfg) {
    cfg.validate();
    return collect_support(root_window, canonical_order(others), cfg);
}

FusionResult fuse_sc(const DetectionSet& root, std::span<const DetectionSet> others,
                     const CalibrationTable& calibrations, const FusionConfig& cfg) {
    cfg.validate();
    if (cfg.mode != FusionMode::Sc) {
        throw ConfigError("fuse_sc called with a content-based configuration");
    }
    return fuse_with(
        root, canonical_order(others), calibrations, cfg, [](std::string_view) {},
        [](const Support& s) { return s.jaccard; });
}

FusionResult fuse_csbc(const DetectionSet& root, std::span<const DetectionSet> others,
                       const CalibrationTable& calibrations, const ModelTable& models, const ImageSource& images,
                       const FeatureExtractor& extractor, const FusionConfig& cfg) {
    cfg.validate();
    if (cfg.mode != FusionMode::Csbc) {
        throw ConfigError("fuse_csbc called with a spatial-only configuration");
    }
    const auto sets = canonical_order(others);
    for (const DetectionSet* set : sets) {
        auto it = models.find(set->detector_id());
        if (it == models.end()) {
            throw ConfigError("no pls model for detector '" + set->detector_id() + "'");
        }
        if (it->second.feature_tag() != extractor.tag()) {
            throw ConfigError("pls model for '" + set->detector_id() + "' was trained on " +
                              std::string(to_string(it->second.feature_tag())) + " features, fusion uses " +
                              std::string(to_string(extractor.tag())));
        }
    }

    GrayImage image;
    // A support window can back several root windows; predict once per window.
    std::unordered_map<const Detection*, double> weight_cache;
    auto on_frame = [&](std::string_view frame) {
        weight_cache.clear();
        if (extractor.needs_image()) {
            image = images.load(frame);
        }
    };
    auto weight = [&](const Support& s) {
        auto it = weight_cache.find(s.window);
        if (it == weight_cache.end()) {
            const auto& model = models.find(s.window->detector_id)->second;
            const auto theta = extractor.extract(image, s.window->frame_id, s.window->bbox);
            const double w = std::clamp(model.predict(theta), cfg.clamp_low, cfg.clamp_high);
            it = weight_cache.emplace(s.window, w).first;
        }
        return cfg.multiply_jaccard ? it->second * s.jaccard : it->second;
    };
    return fuse_with(root, sets, calibrations, cfg, on_frame, weight);
}

}  // namespace csbc
