#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "csbc/calibration.hpp"
#include "csbc/error.hpp"
#include "csbc/eval.hpp"
#include "csbc/experiment.hpp"
#include "csbc/fusion.hpp"
#include "csbc/model_io.hpp"
#include "csbc/pls.hpp"
#include "csbc/synth.hpp"
#include "csbc/trainer.hpp"

namespace py = pybind11;
using namespace csbc;

namespace {

using Pixels = py::array_t<double, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const Pixels& a) {
    if (a.ndim() != 2) {
        throw InputError("image must be a 2-d array");
    }
    GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    auto v = a.unchecked<2>();
    for (py::ssize_t r = 0; r < a.shape(0); ++r) {
        for (py::ssize_t c = 0; c < a.shape(1); ++c) {
            img.at(static_cast<int>(r), static_cast<int>(c)) = v(r, c);
        }
    }
    return img;
}

Pixels to_array(const GrayImage& img) {
    Pixels a({img.height(), img.width()});
    std::copy(img.pixels().begin(), img.pixels().end(), a.mutable_data());
    return a;
}

WindowPatch to_patch(const Pixels& a) {
    if (a.ndim() != 2 || a.shape(0) != kPatchHeight || a.shape(1) != kPatchWidth) {
        throw InputError("patch must have shape (128, 64)");
    }
    return WindowPatch(std::vector<double>(a.data(), a.data() + a.size()));
}

std::vector<double> values(const FeatureVector& f) {
    return f.values;
}

std::vector<DetectionSet> to_sets(const py::iterable& sets) {
    std::vector<DetectionSet> out;
    for (auto s : sets) {
        out.push_back(s.cast<DetectionSet>());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_csbc, m) {
    m.doc() = "Score-level fusion of pedestrian detectors by spatial and content-based consensus.";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<InputError>(m, "InputError", error.ptr());
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<FormatError>(m, "FormatError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());
    py::register_exception<DegenerateError>(m, "DegenerateError", error.ptr());
    py::register_exception<OutOfBoundsError>(m, "OutOfBoundsError", error.ptr());
    py::register_exception<PlacementError>(m, "PlacementError", error.ptr());

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
        .def_property_readonly("x", &BoundingBox::x)
        .def_property_readonly("y", &BoundingBox::y)
        .def_property_readonly("w", &BoundingBox::w)
        .def_property_readonly("h", &BoundingBox::h)
        .def_property_readonly("area", &BoundingBox::area)
        .def("translated", &BoundingBox::translated)
        .def("scaled", &BoundingBox::scaled)
        .def(py::self == py::self)
        .def("__repr__", [](const BoundingBox& b) {
            std::ostringstream s;
            s << "BoundingBox(" << b.x() << ", " << b.y() << ", " << b.w() << ", " << b.h() << ")";
            return s.str();
        });
    m.def("jaccard", &jaccard);
    m.def("intersection_area", &intersection_area);

    py::class_<Detection>(m, "Detection")
        .def(py::init<std::string, BoundingBox, double, std::string>(), py::arg("frame_id"), py::arg("bbox"),
             py::arg("score"), py::arg("detector_id"))
        .def_readonly("frame_id", &Detection::frame_id)
        .def_readonly("bbox", &Detection::bbox)
        .def_readonly("score", &Detection::score)
        .def_readonly("detector_id", &Detection::detector_id);

    py::class_<DetectionSet>(m, "DetectionSet")
        .def(py::init<std::string>(), py::arg("detector_id"))
        .def_property_readonly("detector_id", &DetectionSet::detector_id)
        .def("add", &DetectionSet::add)
        .def("frame", [](const DetectionSet& s, const std::string& f) {
            auto span = s.frame(f);
            return std::vector<Detection>(span.begin(), span.end());
        })
        .def("frame_ids", [](const DetectionSet& s) {
            std::vector<std::string> ids;
            for (const auto& [f, _] : s.frames()) {
                ids.push_back(f);
            }
            return ids;
        })
        .def("flatten", &DetectionSet::flatten)
        .def("__len__", &DetectionSet::size)
        .def("to_text", [](const DetectionSet& s) {
            std::ostringstream out;
            write_detections(s, out);
            return out.str();
        });

    py::class_<GroundTruthBox>(m, "GroundTruthBox")
        .def(py::init([](std::string f, BoundingBox b, bool ignore) { return GroundTruthBox{std::move(f), b, ignore}; }),
             py::arg("frame_id"), py::arg("bbox"), py::arg("ignore") = false)
        .def_readonly("frame_id", &GroundTruthBox::frame_id)
        .def_readonly("bbox", &GroundTruthBox::bbox)
        .def_readonly("ignore", &GroundTruthBox::ignore);

    m.def("read_detections", &read_detections_file, py::arg("path"), py::arg("detector_id"));
    m.def("read_detections_text", [](const std::string& text, const std::string& id) {
        std::istringstream in(text);
        return read_detections(in, id);
    }, py::arg("text"), py::arg("detector_id"));
    m.def("write_detections", &write_detections_file, py::arg("detections"), py::arg("path"));
    m.def("read_ground_truth", &read_ground_truth_file, py::arg("path"));
    m.def("greedy_nms", py::overload_cast<const DetectionSet&, double>(&greedy_nms), py::arg("detections"),
          py::arg("overlap_threshold"));

    py::class_<CalibrationMap>(m, "CalibrationMap")
        .def(py::init<std::string, double, double, double, double>(), py::arg("source_detector_id"),
             py::arg("slope"), py::arg("intercept"), py::arg("source_low"), py::arg("source_high"))
        .def_static("identity", &CalibrationMap::identity)
        .def("apply", &CalibrationMap::apply)
        .def_readonly("source_detector_id", &CalibrationMap::source_detector_id)
        .def_readonly("slope", &CalibrationMap::slope)
        .def_readonly("intercept", &CalibrationMap::intercept)
        .def_readonly("source_low", &CalibrationMap::source_low)
        .def_readonly("source_high", &CalibrationMap::source_high);
    m.def("percentile", [](const std::vector<double>& v, double p) { return percentile(v, p); });
    m.def("fit_calibration",
          [](const std::vector<double>& src, const std::vector<double>& ref, const std::string& id) {
              return fit_calibration(src, ref, id);
          },
          py::arg("source_scores"), py::arg("reference_scores"), py::arg("source_detector_id") = "source");

    py::enum_<DescriptorTag>(m, "Descriptor")
        .value("HOG", DescriptorTag::Hog)
        .value("GLCM", DescriptorTag::Glcm)
        .value("GRAY", DescriptorTag::Gray)
        .value("HOG_GLCM", DescriptorTag::HogGlcm)
        .value("EXTERNAL", DescriptorTag::External);
    m.def("parse_descriptor", &parse_descriptor_tag);

    m.def("extract_patch", [](const Pixels& img, const BoundingBox& b) {
        const auto p = extract_patch(to_image(img), b);
        Pixels a({kPatchHeight, kPatchWidth});
        std::copy(p.pixels().begin(), p.pixels().end(), a.mutable_data());
        return a;
    });
    m.def("hog", [](const Pixels& p) { return values(hog(to_patch(p))); });
    m.def("glcm", [](const Pixels& p) { return values(glcm(to_patch(p))); });
    m.def("gray", [](const Pixels& p) { return values(gray(to_patch(p))); });

    py::class_<FeatureExtractor>(m, "FeatureExtractor")
        .def(py::init<DescriptorTag, bool>(), py::arg("descriptor"), py::arg("normalize") = false)
        .def_property_readonly("descriptor", &FeatureExtractor::tag)
        .def("describe", [](const FeatureExtractor& e, const Pixels& p) { return values(e.describe(to_patch(p))); });

    py::class_<ImageSource>(m, "ImageSource")
        .def("load", [](const ImageSource& s, const std::string& f) { return to_array(s.load(f)); });
    py::class_<ImageDirectory, ImageSource>(m, "ImageDirectory").def(py::init<std::filesystem::path>());
    py::class_<InMemoryImages, ImageSource>(m, "InMemoryImages")
        .def(py::init<>())
        .def("insert", [](InMemoryImages& s, std::string f, const Pixels& img) { s.insert(std::move(f), to_image(img)); });

    py::class_<PlsModel>(m, "PlsModel")
        .def_property_readonly("dims", &PlsModel::dims)
        .def_property_readonly("n_components", &PlsModel::n_components)
        .def_property_readonly("requested_components", &PlsModel::requested_components)
        .def_property_readonly("descriptor", &PlsModel::feature_tag)
        .def_property_readonly("coefficients", &PlsModel::coefficients)
        .def_property_readonly("y_mean", &PlsModel::y_mean)
        .def("predict", [](const PlsModel& model, const Eigen::MatrixXd& rows) -> Eigen::VectorXd {
            return model.predict(rows);
        })
        .def("transform", &PlsModel::transform)
        .def("save", &save_model_file)
        .def_static("load", &load_model_file);
    m.def("fit_pls",
          [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k, bool scale) {
              return fit_pls(X, y, k, PlsOptions{scale});
          },
          py::arg("X"), py::arg("y"), py::arg("components"), py::arg("scale") = false);
    m.def("r_squared", &r_squared);
    m.def("train_detector_model",
          [](const DetectionSet& dets, const std::vector<GroundTruthBox>& gts, const ImageSource& images,
             const FeatureExtractor& e, int k) { return train_detector_model(dets, gts, images, e, k); },
          py::arg("detections"), py::arg("ground_truth"), py::arg("images"), py::arg("extractor"),
          py::arg("components") = 5);

    py::enum_<FusionMode>(m, "FusionMode").value("SC", FusionMode::Sc).value("CSBC", FusionMode::Csbc);
    py::enum_<SupportPolicy>(m, "SupportPolicy")
        .value("ALL_WINDOWS", SupportPolicy::AllWindows)
        .value("BEST_PER_DETECTOR", SupportPolicy::BestPerDetector);

    py::class_<FusionConfig>(m, "FusionConfig")
        .def(py::init<>())
        .def_readwrite("overlap_threshold", &FusionConfig::overlap_threshold)
        .def_readwrite("mode", &FusionConfig::mode)
        .def_readwrite("clamp_low", &FusionConfig::clamp_low)
        .def_readwrite("clamp_high", &FusionConfig::clamp_high)
        .def_readwrite("support_policy", &FusionConfig::support_policy)
        .def_readwrite("multiply_jaccard", &FusionConfig::multiply_jaccard);

    py::class_<FusionStats>(m, "FusionStats")
        .def_readonly("windows_in", &FusionStats::windows_in)
        .def_readonly("discarded", &FusionStats::discarded)
        .def_readonly("windows_out", &FusionStats::windows_out);
    py::class_<FusionResult>(m, "FusionResult")
        .def_readonly("fused", &FusionResult::fused)
        .def_readonly("stats", &FusionResult::stats);

    m.def("fuse_sc",
          [](const DetectionSet& root, const py::iterable& others, const CalibrationTable& cal,
             const FusionConfig& cfg) {
              const auto sets = to_sets(others);
              return fuse_sc(root, sets, cal, cfg);
          },
          py::arg("root"), py::arg("others"), py::arg("calibrations"), py::arg("config") = FusionConfig{});
    m.def("fuse_csbc",
          [](const DetectionSet& root, const py::iterable& others, const CalibrationTable& cal,
             const ModelTable& models, const ImageSource& images, const FeatureExtractor& e, FusionConfig cfg) {
              cfg.mode = FusionMode::Csbc;
              const auto sets = to_sets(others);
              return fuse_csbc(root, sets, cal, models, images, e, cfg);
          },
          py::arg("root"), py::arg("others"), py::arg("calibrations"), py::arg("models"), py::arg("images"),
          py::arg("extractor"), py::arg("config") = FusionConfig{});

    py::class_<CurvePoint>(m, "CurvePoint")
        .def_readonly("fppi", &CurvePoint::fppi)
        .def_readonly("miss_rate", &CurvePoint::miss_rate);
    py::class_<EvalCurve>(m, "EvalCurve")
        .def_readonly("points", &EvalCurve::points)
        .def_readonly("n_gt", &EvalCurve::n_gt)
        .def_readonly("n_frames", &EvalCurve::n_frames);
    m.def("det_curve",
          [](const DetectionSet& d, const std::vector<GroundTruthBox>& g, double iou, std::optional<std::size_t> n) {
              return det_curve(d, g, iou, n);
          },
          py::arg("detections"), py::arg("ground_truth"), py::arg("iou_threshold") = 0.5,
          py::arg("n_frames") = py::none());
    m.def("log_average_miss_rate", &log_average_miss_rate);
    m.def("reference_fppi", &reference_fppi);

    m.def("generate_scene", [](std::uint64_t seed, const std::string& frame_id) {
        const auto s = generate_scene(seed, SceneConfig{}, frame_id);
        return py::make_tuple(to_array(s.image), s.gts);
    }, py::arg("seed"), py::arg("frame_id") = "f000000");

    py::class_<ExperimentResult>(m, "ExperimentResult")
        .def_readonly("lamr_root", &ExperimentResult::lamr_root)
        .def_readonly("lamr_sc", &ExperimentResult::lamr_sc)
        .def_readonly("lamr_csbc", &ExperimentResult::lamr_csbc)
        .def_readonly("sc_stats", &ExperimentResult::sc_stats)
        .def_readonly("csbc_stats", &ExperimentResult::csbc_stats);
    m.def("run_experiment",
          [](std::uint64_t seed, DescriptorTag tag, std::size_t train_frames, std::size_t test_frames, int k) {
              auto cfg = default_experiment();
              cfg.descriptor = tag;
              cfg.train_frames = train_frames;
              cfg.test_frames = test_frames;
              cfg.components = k;
              py::gil_scoped_release release;
              return run_experiment(seed, cfg);
          },
          py::arg("seed"), py::arg("descriptor") = DescriptorTag::Hog, py::arg("train_frames") = 200,
          py::arg("test_frames") = 100, py::arg("components") = 5);
}
