#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "csbc/geometry.hpp"
#include "csbc/image.hpp"

namespace csbc {

inline constexpr int kPatchWidth = 64;
inline constexpr int kPatchHeight = 128;

inline constexpr std::size_t kHogLength = 7 * 15 * 36;
inline constexpr std::size_t kGlcmLength = 4 * 5;
inline constexpr std::size_t kGrayLength = 16 * 32;

/// Canonical 64x128 (width x height) grayscale window, intensities in [0, 1].
class WindowPatch {
public:
    // Constant patch.
    explicit WindowPatch(double fill = 0.0);
    // Row-major pixels; throws InputError unless there are exactly 64*128 values in [0, 1].
    explicit WindowPatch(std::vector<double> pixels);

    double at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * kPatchWidth + col]; }
    const std::vector<double>& pixels() const noexcept { return pixels_; }

private:
    std::vector<double> pixels_;
};

enum class DescriptorTag { Hog, Glcm, Gray, HogGlcm, External };

std::string_view to_string(DescriptorTag tag);
// Accepts "hog", "glcm", "gray", "hog+glcm", "external"; ConfigError otherwise.
DescriptorTag parse_descriptor_tag(std::string_view name);

struct FeatureVector {
    std::vector<double> values;
    DescriptorTag tag = DescriptorTag::External;
};

/// Crops bbox from the image and bilinearly resamples it to 64x128. Sample
/// positions falling outside the image replicate the nearest edge pixel.
/// Throws OutOfBoundsError when bbox does not intersect the image.
WindowPatch extract_patch(const GrayImage& image, const BoundingBox& bbox);

/// Dalal-Triggs HOG: [-1, 0, 1] gradients, 8x8 cells, 9 unsigned bins with
/// linear interpolation between neighbouring bins, 2x2-cell blocks at an 8 px
/// stride, each block L2-normalized. Length kHogLength.
FeatureVector hog(const WindowPatch& patch);

/// Normalized symmetric co-occurrence matrix (8 gray levels, row-major 8x8)
/// for the pixel offset (drow, dcol).
using GlcmMatrix = std::array<double, 64>;
GlcmMatrix glcm_matrix(const WindowPatch& patch, int drow, int dcol);

struct HaralickStats {
    double contrast;
    double correlation;
    double energy;
    double homogeneity;
    double entropy;
};

HaralickStats haralick(const GlcmMatrix& m);

/// Contrast, correlation, energy, homogeneity, entropy for offsets
/// (0,1), (1,0), (1,1), (1,-1), in that order. Length kGlcmLength.
FeatureVector glcm(const WindowPatch& patch);

/// 4x4 block means (16 columns x 32 rows), row-major. Length kGrayLength.
FeatureVector gray(const WindowPatch& patch);

/// a's values followed by b's. Tagged hog+glcm for (hog, glcm), external otherwise.
FeatureVector concat(const FeatureVector& a, const FeatureVector& b);

/// Externally computed descriptors keyed by exact frame and box.
class PrecomputedFeatures {
public:
    using Key = std::tuple<std::string, double, double, double, double>;

    std::size_t dims() const noexcept { return dims_; }
    std::size_t size() const noexcept { return table_.size(); }
    bool empty() const noexcept { return table_.empty(); }

    // nullptr when absent.
    const std::vector<double>* find(std::string_view frame_id, const BoundingBox& bbox) const;

    // Throws FormatError on a dimension change or duplicate key.
    void insert(std::string frame_id, const BoundingBox& bbox, std::vector<double> values);

private:
    std::map<Key, std::vector<double>> table_;
    std::size_t dims_ = 0;
};

/// Reads `frame_id x y w h v1 ... vD` lines with a constant D.
PrecomputedFeatures load_precomputed(std::istream& in);
PrecomputedFeatures load_precomputed_file(const std::string& path);

/// Descriptor choice applied to detection windows.
class FeatureExtractor {
public:
    explicit FeatureExtractor(DescriptorTag tag, bool normalize = false);
    explicit FeatureExtractor(std::shared_ptr<const PrecomputedFeatures> table, bool normalize = false);

    DescriptorTag tag() const noexcept { return tag_; }
    bool needs_image() const noexcept { return tag_ != DescriptorTag::External; }

    // Descriptor of the window. `image` is unused for external features, whose
    // lookup failure raises InputError.
    FeatureVector extract(const GrayImage& image, std::string_view frame_id, const BoundingBox& bbox) const;

    FeatureVector describe(const WindowPatch& patch) const;

private:
    DescriptorTag tag_;
    bool normalize_;
    std::shared_ptr<const PrecomputedFeatures> table_;
};

}  // namespace csbc
