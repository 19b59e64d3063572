#pragma once

#include <span>
#include <string>

namespace csbc {

/// Increasing affine map from one detector's score scale onto the root's.
struct CalibrationMap {
    CalibrationMap(std::string source_detector_id, double slope, double intercept, double source_low,
                   double source_high);

    static CalibrationMap identity(std::string source_detector_id);

    // Linear everywhere, including outside [source_low, source_high].
    double apply(double score) const noexcept { return slope * score + intercept; }

    std::string source_detector_id;
    double slope;
    double intercept;
    double source_low;
    double source_high;
};

/// Percentile (linear interpolation between order statistics, p in [0, 100]).
double percentile(std::span<const double> values, double p);

/// Aligns the 5th and 95th percentiles of source_scores with those of
/// reference_scores. DegenerateError when either sample has fewer than two
/// distinct values or its percentile anchors coincide.
CalibrationMap fit_calibration(std::span<const double> source_scores, std::span<const double> reference_scores,
                               std::string source_detector_id = "source");

}  // namespace csbc
