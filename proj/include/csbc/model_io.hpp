#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "csbc/detection.hpp"

namespace csbc {

// Detection file: one record per line, `frame_id x y w h score`, whitespace
// separated. Blank lines and lines starting with '#' are skipped. Numbers use
// '.' as the decimal point regardless of the process locale.
//
// Ground-truth file: `frame_id x y w h ignore_flag` with ignore_flag in {0, 1}.

/// Parses a detection stream; every record is attributed to detector_id.
/// Throws ParseError (with the 1-based line number) on malformed records,
/// non-finite scores, or non-positive extents.
DetectionSet read_detections(std::istream& in, const std::string& detector_id);

std::vector<GroundTruthBox> read_ground_truth(std::istream& in);

/// Writes frames in lexicographic order, windows in stored order. Numbers use
/// the shortest text that reads back to the same double.
void write_detections(const DetectionSet& set, std::ostream& out);

void write_ground_truth(std::span<const GroundTruthBox> gts, std::ostream& out);

// File variants; IoError when the file cannot be opened or written.
DetectionSet read_detections_file(const std::filesystem::path& path, const std::string& detector_id);
std::vector<GroundTruthBox> read_ground_truth_file(const std::filesystem::path& path);
void write_detections_file(const DetectionSet& set, const std::filesystem::path& path);
void write_ground_truth_file(std::span<const GroundTruthBox> gts, const std::filesystem::path& path);

/// Detector id implied by a detection file name: its stem (`runs/ldcf.det` -> `ldcf`).
std::string detector_id_from_path(const std::filesystem::path& path);

}  // namespace csbc
