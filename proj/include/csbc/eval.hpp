#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csbc/detection.hpp"

namespace csbc {

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t missed = 0;

    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

enum class MatchOutcome { TruePositive, FalsePositive, Ignored };

/// Greedy matching of one frame, detections in descending score (ties keep
/// input order). A detection takes the unmatched non-ignored ground truth with
/// the largest jaccard >= iou_threshold; failing that, overlapping an ignore
/// region makes it neutral; otherwise it is a false positive. Outcomes are
/// returned in input order. ConfigError unless 0 < iou_threshold <= 1.
std::vector<MatchOutcome> match_outcomes(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                                         double iou_threshold);

MatchCounts match_frame(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, double iou_threshold);

struct CurvePoint {
    double fppi;
    double miss_rate;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Miss rate against false positives per image, fppi strictly increasing.
struct EvalCurve {
    std::vector<CurvePoint> points;
    std::size_t n_frames = 0;
    std::size_t n_gt = 0;
};

/// Sweeps the score threshold over every distinct detection score. The frame
/// count defaults to the frames present in either the detections or the
/// ground truth. Throws DegenerateError without non-ignored ground truth.
EvalCurve det_curve(const DetectionSet& dets, std::span<const GroundTruthBox> gts, double iou_threshold,
                    std::optional<std::size_t> n_frames = std::nullopt);

/// 10^(-2 + k/4), k = 0..8.
std::array<double, 9> reference_fppi();

/// Geometric mean of the miss rate sampled at the reference FPPI points (step
/// interpolation, samples floored at 1e-5), as a percentage.
double log_average_miss_rate(const EvalCurve& curve);

/// `fppi,miss_rate` header, one row per point, then `lamr,<value>` with two decimals.
void write_curve_csv(const EvalCurve& curve, std::ostream& out);

struct LabelledCurve {
    std::string label;
    EvalCurve curve;
};

/// Log-log miss-rate plot with gridlines at the reference FPPI points.
void write_curves_svg(std::span<const LabelledCurve> curves, std::ostream& out);

/// Parses the CSV produced by write_curve_csv back into its points.
EvalCurve read_curve_csv(std::istream& in);

}  // namespace csbc
