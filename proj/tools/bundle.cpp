#include "bundle.hpp"

#include <fstream>
#include <functional>
#include <set>

#include <CLI11.hpp>

#include "csbc/error.hpp"
#include "csbc/text.hpp"

namespace csbc::cli {

const Section* Bundle::find(std::string_view name) const {
    auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
}

std::map<std::string, const Section*, std::less<>> Bundle::with_prefix(std::string_view prefix) const {
    std::map<std::string, const Section*, std::less<>> out;
    const std::string lead = std::string(prefix) + ".";
    for (const auto& [name, section] : sections) {
        if (name.size() > lead.size() && name.compare(0, lead.size(), lead) == 0) {
            out.emplace(name.substr(lead.size()), &section);
        }
    }
    return out;
}

namespace {

// The INI reader is lenient; reject lines that are neither a section header
// nor a key-value pair.
void check_syntax(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open config bundle '" + path.string() + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == ';') {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        const bool section = line[first] == '[' && line[last] == ']' && last > first + 1;
        const auto eq = line.find('=', first);
        const bool pair = line[first] != '[' && eq != std::string::npos && eq > first;
        if (!section && !pair) {
            throw UsageError("malformed config bundle '" + path.string() + "': line " + std::to_string(line_no) +
                             ": expected [section] or key = value");
        }
    }
}

}  // namespace

Bundle read_bundle(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw UsageError("config bundle '" + path.string() + "' not found");
    }
    check_syntax(path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(path.string());
    } catch (const CLI::Error& e) {
        throw UsageError("malformed config bundle '" + path.string() + "': " + e.what());
    }
    Bundle bundle;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") {
            continue;
        }
        std::string section;
        for (const auto& p : item.parents) {
            section += section.empty() ? p : "." + p;
        }
        std::string value;
        for (const auto& v : item.inputs) {
            value += value.empty() ? v : " " + v;
        }
        bundle.sections[section][item.name] = value;
    }
    return bundle;
}

namespace {

// Applies known keys of a section, rejecting unknown ones.
class SectionReader {
public:
    SectionReader(const Section& section, std::string name) : section_(section), name_(std::move(name)) {}

    void number(const std::string& key, double& target) {
        if (auto v = lookup(key)) {
            auto parsed = text::parse_double(*v);
            if (!parsed) {
                fail(key, "expected a number, got '" + *v + "'");
            }
            target = *parsed;
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& target) {
        if (auto v = lookup(key)) {
            auto parsed = text::parse_int(*v);
            if (!parsed || *parsed < 0) {
                fail(key, "expected a non-negative integer, got '" + *v + "'");
            }
            target = static_cast<Int>(*parsed);
        }
    }

    void finish() const {
        for (const auto& [key, _] : section_) {
            if (!used_.count(key)) {
                throw UsageError("config bundle [" + name_ + "]: unknown key '" + key + "'");
            }
        }
    }

private:
    const std::string* lookup(const std::string& key) {
        auto it = section_.find(key);
        if (it == section_.end()) {
            return nullptr;
        }
        used_.insert(key);
        return &it->second;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw UsageError("config bundle [" + name_ + "] " + key + ": " + what);
    }

    const Section& section_;
    std::string name_;
    std::set<std::string, std::less<>> used_;
};

}  // namespace

SceneConfig bundle_scene(const Bundle& bundle) {
    SceneConfig cfg;
    if (const auto* s = bundle.find("scene")) {
        SectionReader r(*s, "scene");
        r.integer("width", cfg.width);
        r.integer("height", cfg.height);
        r.integer("pedestrians", cfg.pedestrians);
        r.integer("trees", cfg.distractors[DistractorClass::Tree]);
        r.integer("walls", cfg.distractors[DistractorClass::Wall]);
        r.integer("min_height", cfg.min_box_height);
        r.integer("max_height", cfg.max_box_height);
        r.number("aspect", cfg.aspect);
        r.number("overlap_budget", cfg.overlap_budget);
        r.number("background", cfg.background);
        r.number("noise_sd", cfg.noise_sd);
        r.integer("max_attempts", cfg.max_attempts);
        r.finish();
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(std::string("config bundle [scene]: ") + e.what());
    }
    return cfg;
}

std::vector<DetectorProfile> bundle_profiles(const Bundle& bundle) {
    std::vector<DetectorProfile> profiles;
    for (const auto& [id, section] : bundle.with_prefix("profile")) {
        DetectorProfile p;
        p.detector_id = id;
        double fp_tree = 0.0;
        double fp_wall = 0.0;
        SectionReader r(*section, "profile." + id);
        r.number("tp_rate", p.tp_rate);
        r.number("fp_tree", fp_tree);
        r.number("fp_wall", fp_wall);
        r.number("sigma", p.localization_sigma);
        r.number("tp_mean", p.score_tp.mean);
        r.number("tp_sd", p.score_tp.sd);
        r.number("fp_mean", p.score_fp.mean);
        r.number("fp_sd", p.score_fp.sd);
        r.integer("seed", p.rng_seed);
        r.finish();
        p.fp_rate = {{DistractorClass::Tree, fp_tree}, {DistractorClass::Wall, fp_wall}};
        try {
            p.validate();
        } catch (const Error& e) {
            throw UsageError("config bundle [profile." + id + "]: " + e.what());
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

CalibrationTable bundle_calibrations(const Bundle& bundle) {
    CalibrationTable table;
    for (const auto& [id, section] : bundle.with_prefix("calibration")) {
        double slope = 1.0;
        double intercept = 0.0;
        double low = 0.0;
        double high = 0.0;
        SectionReader r(*section, "calibration." + id);
        r.number("slope", slope);
        r.number("intercept", intercept);
        r.number("source_low", low);
        r.number("source_high", high);
        r.finish();
        try {
            table.emplace(id, CalibrationMap(id, slope, intercept, low, high));
        } catch (const Error& e) {
            throw UsageError("[calibration." + id + "]: " + e.what());
        }
    }
    return table;
}

void write_calibrations(const CalibrationTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    bool first = true;
    for (const auto& [id, map] : table) {
        if (!first) {
            out << '\n';
        }
        first = false;
        out << "[calibration." << id << "]\n";
        out << "slope = " << text::format_double(map.slope) << '\n';
        out << "intercept = " << text::format_double(map.intercept) << '\n';
        out << "source_low = " << text::format_double(map.source_low) << '\n';
        out << "source_high = " << text::format_double(map.source_high) << '\n';
    }
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

}  // namespace csbc::cli
