#include "csbc/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>

#include "csbc/error.hpp"
#include "csbc/text.hpp"

namespace csbc {

namespace {

constexpr int kCellSize = 8;
constexpr int kBins = 9;
constexpr int kCellsX = kPatchWidth / kCellSize;   // 8
constexpr int kCellsY = kPatchHeight / kCellSize;  // 16
constexpr double kBlockEps = 1e-6;

constexpr int kLevels = 8;

void normalize_l2(std::vector<double>& v) {
    double ss = 0.0;
    for (double x : v) {
        ss += x * x;
    }
    if (ss > 0.0) {
        const double inv = 1.0 / std::sqrt(ss);
        for (double& x : v) {
            x *= inv;
        }
    }
}

}  // namespace

WindowPatch::WindowPatch(double fill)
    : pixels_(static_cast<std::size_t>(kPatchWidth) * kPatchHeight, fill) {
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw InputError("patch intensities must lie in [0, 1]");
    }
}

WindowPatch::WindowPatch(std::vector<double> pixels) : pixels_(std::move(pixels)) {
    if (pixels_.size() != static_cast<std::size_t>(kPatchWidth) * kPatchHeight) {
        throw InputError("patch must hold 64x128 pixels");
    }
    for (double v : pixels_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InputError("patch intensities must lie in [0, 1]");
        }
    }
}

std::string_view to_string(DescriptorTag tag) {
    switch (tag) {
        case DescriptorTag::Hog: return "hog";
        case DescriptorTag::Glcm: return "glcm";
        case DescriptorTag::Gray: return "gray";
        case DescriptorTag::HogGlcm: return "hog+glcm";
        case DescriptorTag::External: return "external";
    }
    return "external";
}

DescriptorTag parse_descriptor_tag(std::string_view name) {
    for (auto tag : {DescriptorTag::Hog, DescriptorTag::Glcm, DescriptorTag::Gray, DescriptorTag::HogGlcm,
                     DescriptorTag::External}) {
        if (name == to_string(tag)) {
            return tag;
        }
    }
    throw ConfigError("unknown descriptor '" + std::string(name) + "'");
}

WindowPatch extract_patch(const GrayImage& image, const BoundingBox& bbox) {
    if (image.empty()) {
        throw InputError("cannot crop from an empty image");
    }
    const BoundingBox frame(0.0, 0.0, image.width(), image.height());
    if (intersection_area(frame, bbox) == 0.0) {
        throw OutOfBoundsError("window lies entirely outside the image");
    }
    const double sx = bbox.w() / kPatchWidth;
    const double sy = bbox.h() / kPatchHeight;
    std::vector<double> out(static_cast<std::size_t>(kPatchWidth) * kPatchHeight);
    for (int r = 0; r < kPatchHeight; ++r) {
        // pixel-centre alignment between patch and source grids
        const double fy = bbox.y() + (r + 0.5) * sy - 0.5;
        const double y0 = std::floor(fy);
        const double ty = fy - y0;
        const int iy = static_cast<int>(y0);
        for (int c = 0; c < kPatchWidth; ++c) {
            const double fx = bbox.x() + (c + 0.5) * sx - 0.5;
            const double x0 = std::floor(fx);
            const double tx = fx - x0;
            const int ix = static_cast<int>(x0);
            const double a = image.clamped(iy, ix);
            const double b = image.clamped(iy, ix + 1);
            const double cc = image.clamped(iy + 1, ix);
            const double d = image.clamped(iy + 1, ix + 1);
            const double top = a + tx * (b - a);
            const double bottom = cc + tx * (d - cc);
            out[static_cast<std::size_t>(r) * kPatchWidth + c] = std::clamp(top + ty * (bottom - top), 0.0, 1.0);
        }
    }
    return WindowPatch(std::move(out));
}

FeatureVector hog(const WindowPatch& patch) {
    std::vector<double> cells(static_cast<std::size_t>(kCellsX) * kCellsY * kBins, 0.0);
    auto px = [&](int r, int c) {
        return patch.at(std::clamp(r, 0, kPatchHeight - 1), std::clamp(c, 0, kPatchWidth - 1));
    };
    for (int r = 0; r < kPatchHeight; ++r) {
        for (int c = 0; c < kPatchWidth; ++c) {
            const double gx = px(r, c + 1) - px(r, c - 1);
            const double gy = px(r + 1, c) - px(r - 1, c);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) {
                continue;
            }
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) {
                angle += 180.0;
            }
            if (angle >= 180.0) {
                angle -= 180.0;
            }
            // bin k is centred at 20k + 10 degrees
            const double pos = angle / 20.0 - 0.5;
            const double lo = std::floor(pos);
            const double frac = pos - lo;
            const int b0 = (static_cast<int>(lo) + kBins) % kBins;
            const int b1 = (b0 + 1) % kBins;
            double* hist = &cells[(static_cast<std::size_t>(r / kCellSize) * kCellsX + c / kCellSize) * kBins];
            hist[b0] += mag * (1.0 - frac);
            hist[b1] += mag * frac;
        }
    }

    FeatureVector fv{{}, DescriptorTag::Hog};
    fv.values.reserve(kHogLength);
    std::array<double, 4 * kBins> block{};
    for (int by = 0; by + 1 < kCellsY; ++by) {
        for (int bx = 0; bx + 1 < kCellsX; ++bx) {
            std::size_t k = 0;
            for (int cy = by; cy < by + 2; ++cy) {
                for (int cx = bx; cx < bx + 2; ++cx) {
                    const double* hist = &cells[(static_cast<std::size_t>(cy) * kCellsX + cx) * kBins];
                    for (int b = 0; b < kBins; ++b) {
                        block[k++] = hist[b];
                    }
                }
            }
            double ss = 0.0;
            for (double v : block) {
                ss += v * v;
            }
            const double inv = 1.0 / std::sqrt(ss + kBlockEps * kBlockEps);
            for (double v : block) {
                fv.values.push_back(v * inv);
            }
        }
    }
    return fv;
}

GlcmMatrix glcm_matrix(const WindowPatch& patch, int drow, int dcol) {
    auto level = [&](int r, int c) { return std::min(kLevels - 1, static_cast<int>(patch.at(r, c) * kLevels)); };
    GlcmMatrix m{};
    double total = 0.0;
    for (int r = 0; r < kPatchHeight; ++r) {
        const int r2 = r + drow;
        if (r2 < 0 || r2 >= kPatchHeight) {
            continue;
        }
        for (int c = 0; c < kPatchWidth; ++c) {
            const int c2 = c + dcol;
            if (c2 < 0 || c2 >= kPatchWidth) {
                continue;
            }
            const int a = level(r, c);
            const int b = level(r2, c2);
            m[a * kLevels + b] += 1.0;
            m[b * kLevels + a] += 1.0;
            total += 2.0;
        }
    }
    if (total > 0.0) {
        for (double& v : m) {
            v /= total;
        }
    }
    return m;
}

HaralickStats haralick(const GlcmMatrix& m) {
    double mean = 0.0;
    for (int i = 0; i < kLevels; ++i) {
        for (int j = 0; j < kLevels; ++j) {
            mean += i * m[i * kLevels + j];
        }
    }
    HaralickStats s{0.0, 0.0, 0.0, 0.0, 0.0};
    double var = 0.0;
    double cov = 0.0;
    for (int i = 0; i < kLevels; ++i) {
        for (int j = 0; j < kLevels; ++j) {
            const double p = m[i * kLevels + j];
            const double d = i - j;
            s.contrast += d * d * p;
            s.energy += p * p;
            s.homogeneity += p / (1.0 + d * d);
            if (p > 0.0) {
                s.entropy -= p * std::log(p);
            }
            var += (i - mean) * (i - mean) * p;
            cov += (i - mean) * (j - mean) * p;
        }
    }
    // A single occupied level has no spread; treat it as perfectly correlated.
    s.correlation = var > 1e-15 ? cov / var : 1.0;
    return s;
}

FeatureVector glcm(const WindowPatch& patch) {
    static constexpr int offsets[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    FeatureVector fv{{}, DescriptorTag::Glcm};
    fv.values.reserve(kGlcmLength);
    for (const auto& off : offsets) {
        const auto s = haralick(glcm_matrix(patch, off[0], off[1]));
        fv.values.insert(fv.values.end(), {s.contrast, s.correlation, s.energy, s.homogeneity, s.entropy});
    }
    return fv;
}

FeatureVector gray(const WindowPatch& patch) {
    constexpr int kBlock = 4;
    FeatureVector fv{{}, DescriptorTag::Gray};
    fv.values.reserve(kGrayLength);
    for (int br = 0; br < kPatchHeight / kBlock; ++br) {
        for (int bc = 0; bc < kPatchWidth / kBlock; ++bc) {
            double sum = 0.0;
            for (int r = br * kBlock; r < (br + 1) * kBlock; ++r) {
                for (int c = bc * kBlock; c < (bc + 1) * kBlock; ++c) {
                    sum += patch.at(r, c);
                }
            }
            fv.values.push_back(sum / (kBlock * kBlock));
        }
    }
    return fv;
}

FeatureVector concat(const FeatureVector& a, const FeatureVector& b) {
    FeatureVector fv;
    fv.values.reserve(a.values.size() + b.values.size());
    fv.values.insert(fv.values.end(), a.values.begin(), a.values.end());
    fv.values.insert(fv.values.end(), b.values.begin(), b.values.end());
    fv.tag = (a.tag == DescriptorTag::Hog && b.tag == DescriptorTag::Glcm) ? DescriptorTag::HogGlcm
                                                                           : DescriptorTag::External;
    return fv;
}

const std::vector<double>* PrecomputedFeatures::find(std::string_view frame_id, const BoundingBox& bbox) const {
    auto it = table_.find(Key{std::string(frame_id), bbox.x(), bbox.y(), bbox.w(), bbox.h()});
    return it == table_.end() ? nullptr : &it->second;
}

void PrecomputedFeatures::insert(std::string frame_id, const BoundingBox& bbox, std::vector<double> values) {
    if (!table_.empty() && values.size() != dims_) {
        throw FormatError("feature dimension " + std::to_string(values.size()) + " differs from " +
                          std::to_string(dims_));
    }
    Key key{std::move(frame_id), bbox.x(), bbox.y(), bbox.w(), bbox.h()};
    if (table_.contains(key)) {
        throw FormatError("duplicate feature entry for frame '" + std::get<0>(key) + "'");
    }
    dims_ = values.size();
    table_.emplace(std::move(key), std::move(values));
}

PrecomputedFeatures load_precomputed(std::istream& in) {
    PrecomputedFeatures table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_skippable(line)) {
            continue;
        }
        auto fields = text::split_fields(line);
        if (fields.size() < 6) {
            throw FormatError("line " + std::to_string(line_no) + ": expected frame, box and at least one value");
        }
        std::vector<double> nums;
        nums.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto v = text::parse_double(fields[i]);
            if (!v || !std::isfinite(*v)) {
                throw FormatError("line " + std::to_string(line_no) + ": invalid number '" +
                                  std::string(fields[i]) + "'");
            }
            nums.push_back(*v);
        }
        if (nums[2] <= 0.0 || nums[3] <= 0.0) {
            throw FormatError("line " + std::to_string(line_no) + ": box width and height must be positive");
        }
        BoundingBox box(nums[0], nums[1], nums[2], nums[3]);
        try {
            table.insert(std::string(fields[0]), box, std::vector<double>(nums.begin() + 4, nums.end()));
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

PrecomputedFeatures load_precomputed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open feature table '" + path + "'");
    }
    return load_precomputed(in);
}

FeatureExtractor::FeatureExtractor(DescriptorTag tag, bool normalize) : tag_(tag), normalize_(normalize) {
    if (tag == DescriptorTag::External) {
        throw ConfigError("external descriptors need a precomputed feature table");
    }
}

FeatureExtractor::FeatureExtractor(std::shared_ptr<const PrecomputedFeatures> table, bool normalize)
    : tag_(DescriptorTag::External), normalize_(normalize), table_(std::move(table)) {
    if (!table_) {
        throw ConfigError("external descriptors need a precomputed feature table");
    }
}

FeatureVector FeatureExtractor::describe(const WindowPatch& patch) const {
    FeatureVector fv;
    switch (tag_) {
        case DescriptorTag::Hog: fv = hog(patch); break;
        case DescriptorTag::Glcm: fv = glcm(patch); break;
        case DescriptorTag::Gray: fv = gray(patch); break;
        case DescriptorTag::HogGlcm: fv = concat(hog(patch), glcm(patch)); break;
        case DescriptorTag::External:
            throw ConfigError("external descriptors are looked up, not computed from patches");
    }
    if (normalize_) {
        normalize_l2(fv.values);
    }
    return fv;
}

FeatureVector FeatureExtractor::extract(const GrayImage& image, std::string_view frame_id,
                                        const BoundingBox& bbox) const {
    if (tag_ == DescriptorTag::External) {
        const auto* values = table_->find(frame_id, bbox);
        if (values == nullptr) {
            throw InputError("no precomputed features for a window on frame '" + std::string(frame_id) + "'");
        }
        FeatureVector fv{*values, DescriptorTag::External};
        if (normalize_) {
            normalize_l2(fv.values);
        }
        return fv;
    }
    return describe(extract_patch(image, bbox));
}

}  // namespace csbc
