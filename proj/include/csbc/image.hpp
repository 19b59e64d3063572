#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace csbc {

/// Grayscale raster, row-major, intensities in [0, 1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    double at(int row, int col) const { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }
    double& at(int row, int col) { return pixels_[static_cast<std::size_t>(row) * width_ + col]; }

    // Border-replicating access: coordinates are clamped into the raster.
    double clamped(int row, int col) const;

    const std::vector<double>& pixels() const noexcept { return pixels_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

/// Reads a binary netpbm image: P5 gray or P6 rgb (converted with luma weights
/// 0.299, 0.587, 0.114), maxval <= 255. Throws FormatError on bad headers.
GrayImage read_pgm(std::istream& in);
GrayImage read_pgm_file(const std::filesystem::path& path);

/// Writes a binary PGM, quantizing intensities to round(255 * v).
void write_pgm(const GrayImage& image, std::ostream& out);
void write_pgm_file(const GrayImage& image, const std::filesystem::path& path);

/// Frame lookup used by training and content-based fusion.
class ImageSource {
public:
    virtual ~ImageSource() = default;
    // Throws IoError naming the frame when it cannot be resolved.
    virtual GrayImage load(std::string_view frame_id) const = 0;
};

/// Frames stored as `<dir>/<frame_id>.pgm` (or `.ppm`).
class ImageDirectory : public ImageSource {
public:
    explicit ImageDirectory(std::filesystem::path dir);
    GrayImage load(std::string_view frame_id) const override;

private:
    std::filesystem::path dir_;
};

class InMemoryImages : public ImageSource {
public:
    void insert(std::string frame_id, GrayImage image);
    GrayImage load(std::string_view frame_id) const override;

private:
    std::map<std::string, GrayImage, std::less<>> frames_;
};

}  // namespace csbc
