#include "csbc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "csbc/error.hpp"

namespace csbc {

namespace {

constexpr double kLowAnchor = 5.0;
constexpr double kHighAnchor = 95.0;

std::vector<double> sorted_finite(std::span<const double> values, const char* what) {
    std::vector<double> v(values.begin(), values.end());
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InputError(std::string(what) + " scores must be finite");
        }
    }
    std::sort(v.begin(), v.end());
    if (v.empty() || v.front() == v.back()) {
        throw DegenerateError(std::string(what) + " scores need at least two distinct values");
    }
    return v;
}

double percentile_sorted(const std::vector<double>& v, double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) {
        return v.back();
    }
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

CalibrationMap::CalibrationMap(std::string source, double s, double b, double low, double high)
    : source_detector_id(std::move(source)), slope(s), intercept(b), source_low(low), source_high(high) {
    if (!(slope > 0.0) || !std::isfinite(slope) || !std::isfinite(intercept)) {
        throw InputError("calibration needs a finite positive slope and finite intercept");
    }
}

CalibrationMap CalibrationMap::identity(std::string source_detector_id) {
    return CalibrationMap(std::move(source_detector_id), 1.0, 0.0, 0.0, 0.0);
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) {
        throw InputError("percentile of an empty sample");
    }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return percentile_sorted(v, p);
}

CalibrationMap fit_calibration(std::span<const double> source_scores, std::span<const double> reference_scores,
                               std::string source_detector_id) {
    const auto src = sorted_finite(source_scores, "source");
    const auto ref = sorted_finite(reference_scores, "reference");
    const double s05 = percentile_sorted(src, kLowAnchor);
    const double s95 = percentile_sorted(src, kHighAnchor);
    const double r05 = percentile_sorted(ref, kLowAnchor);
    const double r95 = percentile_sorted(ref, kHighAnchor);
    if (!(s95 > s05) || !(r95 > r05)) {
        throw DegenerateError("5th and 95th score percentiles coincide");
    }
    const double slope = (r95 - r05) / (s95 - s05);
    const double intercept = r05 - slope * s05;
    return CalibrationMap(std::move(source_detector_id), slope, intercept, src.front(), src.back());
}

}  // namespace csbc
