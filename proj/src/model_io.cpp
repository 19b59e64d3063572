#include "csbc/model_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "csbc/error.hpp"
#include "csbc/text.hpp"

namespace csbc {

namespace {

struct BoxRecord {
    std::string frame_id;
    BoundingBox bbox;
    std::string_view last;
};

// Shared prefix of both record kinds: `frame_id x y w h <last>`.
BoxRecord parse_box_record(std::string_view line, std::size_t line_no) {
    auto fields = text::split_fields(line);
    if (fields.size() != 6) {
        throw ParseError(line_no, "expected 6 fields, found " + std::to_string(fields.size()));
    }
    double coords[4];
    for (int i = 0; i < 4; ++i) {
        auto v = text::parse_double(fields[1 + i]);
        if (!v || !std::isfinite(*v)) {
            throw ParseError(line_no, "invalid coordinate '" + std::string(fields[1 + i]) + "'");
        }
        coords[i] = *v;
    }
    if (coords[2] <= 0.0 || coords[3] <= 0.0) {
        throw ParseError(line_no, "box width and height must be positive");
    }
    return {std::string(fields[0]), BoundingBox(coords[0], coords[1], coords[2], coords[3]), fields[5]};
}

template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_skippable(line)) {
            continue;
        }
        fn(std::string_view(line), line_no);
    }
    if (in.bad()) {
        throw IoError("read failure after line " + std::to_string(line_no));
    }
}

void write_box(std::ostream& out, const std::string& frame, const BoundingBox& b) {
    out << frame << ' ' << text::format_double(b.x()) << ' ' << text::format_double(b.y()) << ' '
        << text::format_double(b.w()) << ' ' << text::format_double(b.h());
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
}

}  // namespace

DetectionSet read_detections(std::istream& in, const std::string& detector_id) {
    DetectionSet set(detector_id);
    for_each_record(in, [&](std::string_view line, std::size_t line_no) {
        auto rec = parse_box_record(line, line_no);
        auto score = text::parse_double(rec.last);
        if (!score) {
            throw ParseError(line_no, "invalid score '" + std::string(rec.last) + "'");
        }
        if (!std::isfinite(*score)) {
            throw ParseError(line_no, "score must be finite");
        }
        set.add(Detection(std::move(rec.frame_id), rec.bbox, *score, detector_id));
    });
    return set;
}

std::vector<GroundTruthBox> read_ground_truth(std::istream& in) {
    std::vector<GroundTruthBox> gts;
    for_each_record(in, [&](std::string_view line, std::size_t line_no) {
        auto rec = parse_box_record(line, line_no);
        if (rec.last != "0" && rec.last != "1") {
            throw ParseError(line_no, "ignore flag must be 0 or 1, found '" + std::string(rec.last) + "'");
        }
        gts.push_back(GroundTruthBox{std::move(rec.frame_id), rec.bbox, rec.last == "1"});
    });
    return gts;
}

void write_detections(const DetectionSet& set, std::ostream& out) {
    out << "# detector " << set.detector_id() << "\n";
    for (const auto& [frame, dets] : set.frames()) {
        for (const auto& d : dets) {
            write_box(out, frame, d.bbox);
            out << ' ' << text::format_double(d.score) << '\n';
        }
    }
    if (!out) {
        throw IoError("write failure");
    }
}

void write_ground_truth(std::span<const GroundTruthBox> gts, std::ostream& out) {
    for (const auto& gt : gts) {
        write_box(out, gt.frame_id, gt.bbox);
        out << ' ' << (gt.ignore ? 1 : 0) << '\n';
    }
    if (!out) {
        throw IoError("write failure");
    }
}

DetectionSet read_detections_file(const std::filesystem::path& path, const std::string& detector_id) {
    auto in = open_in(path);
    try {
        return read_detections(in, detector_id);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

std::vector<GroundTruthBox> read_ground_truth_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    try {
        return read_ground_truth(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

void write_detections_file(const DetectionSet& set, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_detections(set, out);
}

void write_ground_truth_file(std::span<const GroundTruthBox> gts, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_ground_truth(gts, out);
}

std::string detector_id_from_path(const std::filesystem::path& path) {
    return path.stem().string();
}

}  // namespace csbc
