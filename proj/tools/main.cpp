#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bundle.hpp"
#include "csbc/calibration.hpp"
#include "csbc/error.hpp"
#include "csbc/eval.hpp"
#include "csbc/features.hpp"
#include "csbc/fusion.hpp"
#include "csbc/image.hpp"
#include "csbc/model_io.hpp"
#include "csbc/pls.hpp"
#include "csbc/synth.hpp"
#include "csbc/text.hpp"
#include "csbc/trainer.hpp"

namespace fs = std::filesystem;

namespace csbc::cli {
namespace {

constexpr const char* kManifest = "manifest.ini";

struct TrainArgs {
    std::vector<std::string> detections;
    std::string gt;
    std::string images;
    std::string feature = "hog";
    int components = 5;
    std::string out;
    bool normalize = false;
    bool pls_scale = false;
    std::size_t max_windows = 0;
    std::optional<double> nms;
};

struct CalibArgs {
    std::vector<std::string> sources;
    std::string reference;
    std::string calib;
};

struct FuseArgs {
    std::string root;
    std::vector<std::string> support;
    std::string models;
    std::string calib;
    std::string images;
    std::string mode = "sc";
    double overlap = 0.5;
    std::vector<double> clamp{0.0, 1.0};
    std::string policy = "all_windows";
    bool multiply_jaccard = false;
    std::string feature;
    std::optional<bool> normalize;
    std::optional<double> nms;
    std::string out;
};

struct EvalArgs {
    std::string detections;
    std::string gt;
    double iou = 0.5;
    std::string out;
    std::string svg;
    std::optional<std::size_t> frames;
};

struct SynthArgs {
    std::uint64_t seed = 0;
    std::size_t frames = 0;
    std::string out;
};

struct PlotArgs {
    std::vector<std::string> curves;
    std::string out;
};

// "hog", "glcm", ... or "external:<file>".
FeatureExtractor make_extractor(const std::string& name, bool normalize) {
    const std::string prefix = "external:";
    if (name.rfind(prefix, 0) == 0) {
        const auto path = name.substr(prefix.size());
        if (path.empty()) {
            throw UsageError("--feature external:<file> needs a file");
        }
        return FeatureExtractor(std::make_shared<PrecomputedFeatures>(load_precomputed_file(path)), normalize);
    }
    DescriptorTag tag;
    try {
        tag = parse_descriptor_tag(name);
    } catch (const Error&) {
        throw UsageError("unknown feature '" + name + "'");
    }
    if (tag == DescriptorTag::External) {
        throw UsageError("--feature external needs a file: external:<file>");
    }
    return FeatureExtractor(tag, normalize);
}

DetectionSet load_detections(const std::string& path, std::optional<double> nms) {
    auto set = read_detections_file(path, detector_id_from_path(path));
    return nms ? greedy_nms(set, *nms) : set;
}

std::vector<double> all_scores(const DetectionSet& set) {
    std::vector<double> scores;
    for (const auto& d : set.flatten()) {
        scores.push_back(d.score);
    }
    return scores;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
}

void run_train(const TrainArgs& a) {
    const auto extractor = make_extractor(a.feature, a.normalize);
    if (extractor.needs_image() && a.images.empty()) {
        throw UsageError("--images is required for feature '" + a.feature + "'");
    }
    const auto gts = read_ground_truth_file(a.gt);
    const ImageDirectory images(a.images.empty() ? fs::path(".") : fs::path(a.images));

    std::set<std::string> ids;
    std::vector<DetectionSet> sets;
    for (const auto& path : a.detections) {
        sets.push_back(load_detections(path, a.nms));
        if (!ids.insert(sets.back().detector_id()).second) {
            throw UsageError("detector '" + sets.back().detector_id() + "' given twice");
        }
    }

    fs::create_directories(a.out);
    TrainingOptions options;
    options.max_windows = a.max_windows;
    PlsOptions pls_options;
    pls_options.scale = a.pls_scale;

    std::string manifest = "[train]\n";
    manifest += "feature = " + std::string(to_string(extractor.tag())) + "\n";
    manifest += "components = " + std::to_string(a.components) + "\n";
    manifest += std::string("normalize_features = ") + (a.normalize ? "true" : "false") + "\n";
    manifest += std::string("pls_scale = ") + (a.pls_scale ? "true" : "false") + "\n";
    for (const auto& set : sets) {
        const auto training = build_training_set(set, gts, images, extractor, options);
        const auto model =
            train_detector_model(training, set.detector_id(), extractor.tag(), a.components, pls_options);
        const auto file = set.detector_id() + ".plsmodel";
        save_model_file(model, fs::path(a.out) / file);
        manifest += "\n[model." + set.detector_id() + "]\n";
        manifest += "file = " + file + "\n";
        manifest += "rows = " + std::to_string(training.y.size()) + "\n";
        manifest += "fitted_components = " + std::to_string(model.n_components()) + "\n";
        std::cout << "trained " << set.detector_id() << ": " << training.y.size() << " windows, "
                  << model.n_components() << " components\n";
    }
    auto out = open_output(fs::path(a.out) / kManifest);
    out << manifest;
}

void run_calib(const CalibArgs& a) {
    const auto reference = read_detections_file(a.reference, detector_id_from_path(a.reference));
    const auto reference_scores = all_scores(reference);
    CalibrationTable table;
    if (fs::exists(a.calib)) {
        table = bundle_calibrations(read_bundle(a.calib));
    }
    for (const auto& path : a.sources) {
        const auto source = read_detections_file(path, detector_id_from_path(path));
        const auto id = source.detector_id();
        auto map = fit_calibration(all_scores(source), reference_scores, id);
        table.insert_or_assign(id, map);
        std::cout << "calibrated " << id << ": slope " << text::format_double(map.slope) << ", intercept "
                  << text::format_double(map.intercept) << '\n';
    }
    if (fs::path(a.calib).has_parent_path()) {
        fs::create_directories(fs::path(a.calib).parent_path());
    }
    write_calibrations(table, a.calib);
}

void run_fuse(const FuseArgs& a) {
    FusionConfig cfg;
    try {
        cfg.mode = parse_fusion_mode(a.mode);
        cfg.support_policy = parse_support_policy(a.policy);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    cfg.overlap_threshold = a.overlap;
    cfg.clamp_low = a.clamp.at(0);
    cfg.clamp_high = a.clamp.at(1);
    cfg.multiply_jaccard = a.multiply_jaccard;
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const auto root = load_detections(a.root, a.nms);
    std::vector<DetectionSet> support;
    for (const auto& path : a.support) {
        support.push_back(load_detections(path, a.nms));
    }
    const auto calibrations = bundle_calibrations(read_bundle(a.calib));

    std::optional<FusionResult> result;
    if (cfg.mode == FusionMode::Sc) {
        result = fuse_sc(root, support, calibrations, cfg);
    } else {
        if (a.models.empty()) {
            throw UsageError("--mode csbc requires --models");
        }
        std::string feature = a.feature;
        bool normalize = a.normalize.value_or(false);
        const auto manifest_path = fs::path(a.models) / kManifest;
        if (fs::exists(manifest_path)) {
            const auto manifest = read_bundle(manifest_path);
            if (const auto* train = manifest.find("train")) {
                auto it = train->find("feature");
                if (feature.empty() && it != train->end()) {
                    feature = it->second;
                }
                it = train->find("normalize_features");
                if (!a.normalize && it != train->end()) {
                    normalize = it->second == "true";
                }
            }
        }
        if (feature.empty()) {
            feature = "hog";
        }
        const auto extractor = make_extractor(feature, normalize);
        if (extractor.needs_image() && a.images.empty()) {
            throw UsageError("--mode csbc requires --images for feature '" + feature + "'");
        }
        ModelTable models;
        for (const auto& set : support) {
            const auto path = fs::path(a.models) / (set.detector_id() + ".plsmodel");
            if (!fs::exists(path)) {
                throw ConfigError("no model for detector '" + set.detector_id() + "' in '" + a.models + "'");
            }
            models.emplace(set.detector_id(), load_model_file(path));
        }
        const ImageDirectory images(a.images.empty() ? fs::path(".") : fs::path(a.images));
        result = fuse_csbc(root, support, calibrations, models, images, extractor, cfg);
    }
    if (fs::path(a.out).has_parent_path()) {
        fs::create_directories(fs::path(a.out).parent_path());
    }
    write_detections_file(result->fused, a.out);
    std::cout << "fused " << a.mode << ": windows in " << result->stats.windows_in << ", discarded "
              << result->stats.discarded << ", out " << result->stats.windows_out << '\n';
}

void run_eval(const EvalArgs& a) {
    const auto dets = read_detections_file(a.detections, detector_id_from_path(a.detections));
    const auto gts = read_ground_truth_file(a.gt);
    const auto curve = det_curve(dets, gts, a.iou, a.frames);
    {
        auto out = open_output(a.out);
        write_curve_csv(curve, out);
    }
    if (!a.svg.empty()) {
        auto out = open_output(a.svg);
        const LabelledCurve labelled{dets.detector_id(), curve};
        write_curves_svg(std::span(&labelled, 1), out);
    }
    std::cout << "lamr " << text::format_fixed(log_average_miss_rate(curve), 2) << '\n';
}

void run_synth(const SynthArgs& a, const std::string& config_path) {
    if (config_path.empty()) {
        throw UsageError("synth requires --config <bundle>");
    }
    const auto bundle = read_bundle(config_path);
    const auto scene = bundle_scene(bundle);
    const auto profiles = bundle_profiles(bundle);

    const auto dataset = make_dataset(a.seed, a.frames, scene, profiles, "f");
    const SyntheticImages images(dataset);
    const fs::path out(a.out);
    fs::create_directories(out / "images");
    for (const auto& [frame, _] : dataset.frame_seeds) {
        write_pgm_file(images.load(frame), out / "images" / (frame + ".pgm"));
    }
    write_ground_truth_file(dataset.gts, out / "gt.txt");
    for (const auto& set : dataset.detections) {
        write_detections_file(set, out / (set.detector_id() + ".det"));
    }
    std::cout << "synthesized " << a.frames << " frames, " << dataset.gts.size() << " pedestrians, "
              << profiles.size() << " detectors\n";
}

void run_plot(const PlotArgs& a) {
    std::vector<LabelledCurve> curves;
    for (const auto& path : a.curves) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw IoError("cannot open '" + path + "'");
        }
        try {
            curves.push_back({fs::path(path).stem().string(), read_curve_csv(in)});
        } catch (const ParseError& e) {
            throw ParseError(e.line(), e.detail(), path);
        }
    }
    auto out = open_output(a.out);
    write_curves_svg(curves, out);
}

}  // namespace
}  // namespace csbc::cli

int main(int argc, char** argv) {
    using namespace csbc::cli;
    CLI::App app{"Fuse pedestrian detector outputs by content-weighted spatial consensus."};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config bundle (INI sections per subcommand); explicit flags take precedence");
    app.set_version_flag("--version", "csbc 1.0.0");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Fit one PLS model per detector from labelled windows")->fallthrough();
    t->add_option("--detections", train.detections, "Detection files; detector id is the file stem")->required();
    t->add_option("--gt", train.gt, "Ground-truth file")->required();
    t->add_option("--images", train.images, "Directory of <frame>.pgm / <frame>.ppm");
    t->add_option("--feature", train.feature, "hog, glcm, gray, hog+glcm or external:<file>")->capture_default_str();
    t->add_option("--components", train.components, "PLS components")
        ->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    t->add_option("--out", train.out, "Model directory")->required();
    t->add_flag("--normalize-features", train.normalize, "L2-normalize descriptors");
    t->add_flag("--pls-scale", train.pls_scale, "Scale features to unit variance before PLS");
    t->add_option("--max-windows", train.max_windows, "Cap on training windows per detector (0: all)");
    t->add_option("--nms", train.nms, "Apply greedy NMS at this overlap before training")->check(CLI::Range(0.0, 1.0));

    CalibArgs calib;
    auto* c = app.add_subcommand("calib", "Fit score calibration maps onto the root detector's scale")->fallthrough();
    c->add_option("--source", calib.sources, "Support detection files on the calibration split")->required();
    c->add_option("--reference", calib.reference, "Root detection file on the same split")->required();
    c->add_option("--calib", calib.calib, "Calibration file to create or update")->required();

    FuseArgs fuse;
    auto* f = app.add_subcommand("fuse", "Rescore root windows by spatial consensus")->fallthrough();
    f->add_option("--root", fuse.root, "Root detection file")->required();
    f->add_option("--support", fuse.support, "Support detection files");
    f->add_option("--models", fuse.models, "Model directory written by train");
    f->add_option("--calib", fuse.calib, "Calibration file written by calib")->required();
    f->add_option("--images", fuse.images, "Directory of <frame>.pgm / <frame>.ppm");
    f->add_option("--mode", fuse.mode, "sc or csbc")
        ->check(CLI::IsMember({"sc", "csbc"}))
        ->capture_default_str();
    f->add_option("--overlap", fuse.overlap, "Minimum jaccard for support")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    f->add_option("--clamp", fuse.clamp, "Weight clamp interval lo,hi")
        ->expected(2)
        ->delimiter(',')
        ->capture_default_str();
    f->add_option("--policy", fuse.policy, "all_windows or best_per_detector")
        ->check(CLI::IsMember({"all_windows", "best_per_detector"}))
        ->capture_default_str();
    f->add_flag("--multiply-jaccard", fuse.multiply_jaccard, "Also weight content terms by overlap");
    f->add_option("--feature", fuse.feature, "Descriptor; defaults to the model manifest");
    f->add_option("--normalize-features", fuse.normalize, "L2-normalize descriptors; defaults to the manifest");
    f->add_option("--nms", fuse.nms, "Apply greedy NMS at this overlap before fusing")->check(CLI::Range(0.0, 1.0));
    f->add_option("--out", fuse.out, "Fused detection file")->required();

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Miss rate against false positives per image")->fallthrough();
    e->add_option("--detections", eval.detections, "Detection file")->required();
    e->add_option("--gt", eval.gt, "Ground-truth file")->required();
    e->add_option("--iou", eval.iou, "Match threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    e->add_option("--out", eval.out, "Curve CSV")->required();
    e->add_option("--svg", eval.svg, "Optional log-log plot");
    e->add_option("--frames", eval.frames, "Frame count for FPPI (default: frames seen in GT or detections)")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset from bundle profiles")->fallthrough();
    s->add_option("--seed", synth.seed, "Dataset seed")->required();
    s->add_option("--frames", synth.frames, "Number of frames")->required();
    s->add_option("--out", synth.out, "Output directory")->required();

    PlotArgs plot;
    auto* p = app.add_subcommand("plot", "Overlay curve CSVs in one log-log SVG")->fallthrough();
    p->add_option("--curves", plot.curves, "Curve CSV files; labels are file stems")->required();
    p->add_option("--out", plot.out, "SVG file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForAllHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForVersion& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    }

    try {
        const auto* config = app.get_config_ptr();
        const std::string config_path = config->count() > 0 ? config->results().front() : std::string();
        if (!config_path.empty()) {
            read_bundle(config_path);
        }
        if (*t) {
            run_train(train);
        } else if (*c) {
            run_calib(calib);
        } else if (*f) {
            run_fuse(fuse);
        } else if (*e) {
            run_eval(eval);
        } else if (*s) {
            run_synth(synth, config_path);
        } else if (*p) {
            run_plot(plot);
        }
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const csbc::Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
