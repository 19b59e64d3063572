#include "csbc/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "csbc/error.hpp"

namespace csbc {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) {
        throw InputError("image dimensions must be non-negative");
    }
}

double GrayImage::clamped(int row, int col) const {
    row = std::clamp(row, 0, height_ - 1);
    col = std::clamp(col, 0, width_ - 1);
    return at(row, col);
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = in.get();
            }
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    // The single whitespace byte after maxval has been consumed here.
    return tok;
}

int header_int(std::istream& in, const char* what) {
    auto tok = header_token(in);
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size() || v <= 0) {
            throw FormatError("");
        }
        return v;
    } catch (const std::exception&) {
        throw FormatError(std::string("pgm: invalid ") + what + " '" + tok + "'");
    }
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
    const auto magic = header_token(in);
    if (magic != "P5" && magic != "P6") {
        throw FormatError("pgm: only binary P5 (gray) and P6 (rgb) images are supported");
    }
    const int channels = magic == "P6" ? 3 : 1;
    const int width = header_int(in, "width");
    const int height = header_int(in, "height");
    const int maxval = header_int(in, "maxval");
    if (maxval > 255) {
        throw FormatError("pgm: only 8-bit images are supported");
    }
    GrayImage img(width, height);
    std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw FormatError("pgm: truncated pixel data");
    }
    const double scale = 1.0 / maxval;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const auto* px = &raw[(static_cast<std::size_t>(r) * width + c) * channels];
            // rgb goes through luma weights
            img.at(r, c) = channels == 1 ? px[0] * scale
                                         : std::min(1.0, (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) * scale);
        }
    }
    return img;
}

GrayImage read_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image '" + path.string() + "'");
    }
    try {
        return read_pgm(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_pgm(const GrayImage& image, std::ostream& out) {
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> raw(image.pixels().size());
    std::transform(image.pixels().begin(), image.pixels().end(), raw.begin(), [](double v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    });
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw IoError("pgm: write failure");
    }
}

void write_pgm_file(const GrayImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write image '" + path.string() + "'");
    }
    write_pgm(image, out);
}

ImageDirectory::ImageDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {}

GrayImage ImageDirectory::load(std::string_view frame_id) const {
    for (const char* ext : {".pgm", ".ppm"}) {
        auto path = dir_ / (std::string(frame_id) + ext);
        if (std::filesystem::exists(path)) {
            return read_pgm_file(path);
        }
    }
    throw IoError("no image for frame '" + std::string(frame_id) + "' in " + dir_.string());
}

void InMemoryImages::insert(std::string frame_id, GrayImage image) {
    frames_.insert_or_assign(std::move(frame_id), std::move(image));
}

GrayImage InMemoryImages::load(std::string_view frame_id) const {
    auto it = frames_.find(frame_id);
    if (it == frames_.end()) {
        throw IoError("no image for frame '" + std::string(frame_id) + "'");
    }
    return it->second;
}

}  // namespace csbc
