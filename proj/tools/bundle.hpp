#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "csbc/fusion.hpp"
#include "csbc/synth.hpp"

namespace csbc::cli {

// Bad flags or a malformed bundle; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Section = std::map<std::string, std::string, std::less<>>;

// Sections keyed by dotted name ("fuse", "profile.root"); multi-valued keys
// are joined with single spaces.
struct Bundle {
    std::map<std::string, Section, std::less<>> sections;

    const Section* find(std::string_view name) const;
    // Sections named "<prefix>.<id>", keyed by id.
    std::map<std::string, const Section*, std::less<>> with_prefix(std::string_view prefix) const;
};

Bundle read_bundle(const std::filesystem::path& path);

SceneConfig bundle_scene(const Bundle& bundle);
std::vector<DetectorProfile> bundle_profiles(const Bundle& bundle);

// [calibration.<id>] sections with slope, intercept, source_low, source_high.
CalibrationTable bundle_calibrations(const Bundle& bundle);
void write_calibrations(const CalibrationTable& table, const std::filesystem::path& path);

}  // namespace csbc::cli
