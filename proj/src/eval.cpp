#include "csbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "csbc/error.hpp"
#include "csbc/text.hpp"

namespace csbc {

namespace {

constexpr double kMissFloor = 1e-5;

void check_iou(double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
        throw ConfigError("iou threshold must lie in (0, 1]");
    }
}

}  // namespace

std::vector<MatchOutcome> match_outcomes(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                                         double iou_threshold) {
    check_iou(iou_threshold);
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> taken(gts.size(), false);
    std::vector<MatchOutcome> outcomes(dets.size(), MatchOutcome::FalsePositive);
    for (std::size_t idx : order) {
        const auto& box = dets[idx].bbox;
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gts[g].ignore || taken[g]) {
                continue;
            }
            const double j = jaccard(box, gts[g].bbox);
            if (j >= iou_threshold && j > best) {
                best = j;
                best_gt = g;
            }
        }
        if (best_gt < gts.size()) {
            taken[best_gt] = true;
            outcomes[idx] = MatchOutcome::TruePositive;
            continue;
        }
        for (const auto& gt : gts) {
            if (gt.ignore && jaccard(box, gt.bbox) >= iou_threshold) {
                outcomes[idx] = MatchOutcome::Ignored;
                break;
            }
        }
    }
    return outcomes;
}

MatchCounts match_frame(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, double iou_threshold) {
    MatchCounts counts;
    for (auto outcome : match_outcomes(dets, gts, iou_threshold)) {
        if (outcome == MatchOutcome::TruePositive) {
            ++counts.tp;
        } else if (outcome == MatchOutcome::FalsePositive) {
            ++counts.fp;
        }
    }
    const auto n_gt = static_cast<std::size_t>(std::count_if(gts.begin(), gts.end(), [](const auto& g) { return !g.ignore; }));
    counts.missed = n_gt - counts.tp;
    return counts;
}

EvalCurve det_curve(const DetectionSet& dets, std::span<const GroundTruthBox> gts, double iou_threshold,
                    std::optional<std::size_t> n_frames) {
    check_iou(iou_threshold);
    const auto gt_index = index_by_frame(gts);

    EvalCurve curve;
    curve.n_gt = static_cast<std::size_t>(std::count_if(gts.begin(), gts.end(), [](const auto& g) { return !g.ignore; }));
    if (curve.n_gt == 0) {
        throw DegenerateError("miss rate is undefined without non-ignored ground truth");
    }
    if (n_frames) {
        curve.n_frames = *n_frames;
    } else {
        std::set<std::string, std::less<>> frames;
        for (const auto& [frame, _] : gt_index) {
            frames.insert(frame);
        }
        for (const auto& [frame, _] : dets.frames()) {
            frames.insert(frame);
        }
        curve.n_frames = frames.size();
    }
    if (curve.n_frames == 0) {
        throw DegenerateError("no frames to evaluate");
    }

    // Greedy matching in score order makes the matching at any threshold the
    // prefix of the full matching, so one pass per frame suffices.
    std::vector<std::pair<double, MatchOutcome>> scored;
    scored.reserve(dets.size());
    for (const auto& [frame, windows] : dets.frames()) {
        auto it = gt_index.find(frame);
        std::span<const GroundTruthBox> frame_gts;
        if (it != gt_index.end()) {
            frame_gts = it->second;
        }
        const auto outcomes = match_outcomes(windows, frame_gts, iou_threshold);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            scored.emplace_back(windows[i].score, outcomes[i]);
        }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    if (scored.empty()) {
        curve.points.push_back({0.0, 1.0});
        return curve;
    }
    const double frames = static_cast<double>(curve.n_frames);
    const double n_gt = static_cast<double>(curve.n_gt);
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < scored.size();) {
        const double threshold = scored[i].first;
        for (; i < scored.size() && scored[i].first == threshold; ++i) {
            tp += scored[i].second == MatchOutcome::TruePositive;
            fp += scored[i].second == MatchOutcome::FalsePositive;
        }
        const CurvePoint p{static_cast<double>(fp) / frames, static_cast<double>(curve.n_gt - tp) / n_gt};
        if (!curve.points.empty() && curve.points.back().fppi == p.fppi) {
            curve.points.back().miss_rate = std::min(curve.points.back().miss_rate, p.miss_rate);
        } else {
            curve.points.push_back(p);
        }
    }
    return curve;
}

std::array<double, 9> reference_fppi() {
    std::array<double, 9> refs{};
    for (int k = 0; k < 9; ++k) {
        refs[static_cast<std::size_t>(k)] = std::pow(10.0, -2.0 + k / 4.0);
    }
    return refs;
}

double log_average_miss_rate(const EvalCurve& curve) {
    if (curve.points.empty()) {
        throw InputError("cannot average an empty curve");
    }
    double log_sum = 0.0;
    for (double ref : reference_fppi()) {
        double miss = curve.points.front().miss_rate;
        for (const auto& p : curve.points) {
            if (p.fppi <= ref) {
                miss = p.miss_rate;
            } else {
                break;
            }
        }
        log_sum += std::log(std::max(miss, kMissFloor));
    }
    return 100.0 * std::exp(log_sum / 9.0);
}

void write_curve_csv(const EvalCurve& curve, std::ostream& out) {
    out << "fppi,miss_rate\n";
    for (const auto& p : curve.points) {
        out << text::format_double(p.fppi) << ',' << text::format_double(p.miss_rate) << '\n';
    }
    out << "lamr," << text::format_fixed(log_average_miss_rate(curve), 2) << '\n';
    if (!out) {
        throw IoError("failed to write curve");
    }
}

EvalCurve read_curve_csv(std::istream& in) {
    EvalCurve curve;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.rfind("fppi,", 0) == 0 || line.rfind("lamr,", 0) == 0) {
            continue;
        }
        const auto comma = line.find(',');
        auto fppi = comma == std::string::npos ? std::nullopt : text::parse_double(std::string_view(line).substr(0, comma));
        auto miss = comma == std::string::npos ? std::nullopt : text::parse_double(std::string_view(line).substr(comma + 1));
        if (!fppi || !miss) {
            throw ParseError(line_no, "expected 'fppi,miss_rate'");
        }
        curve.points.push_back({*fppi, *miss});
    }
    return curve;
}

namespace {

constexpr double kPlotW = 480.0;
constexpr double kPlotH = 360.0;
constexpr double kMargin = 50.0;
constexpr double kXMin = 1e-3;
constexpr double kXMax = 1e1;
constexpr double kYMin = 0.05;
constexpr double kYMax = 1.0;

double plot_x(double fppi) {
    const double v = std::clamp(fppi, kXMin, kXMax);
    return kMargin + (std::log10(v) - std::log10(kXMin)) / (std::log10(kXMax) - std::log10(kXMin)) * kPlotW;
}

double plot_y(double miss) {
    const double v = std::clamp(miss, kYMin, kYMax);
    return kMargin + (std::log10(kYMax) - std::log10(v)) / (std::log10(kYMax) - std::log10(kYMin)) * kPlotH;
}

std::string num(double v) {
    return text::format_fixed(v, 2);
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_curves_svg(std::span<const LabelledCurve> curves, std::ostream& out) {
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const double width = kPlotW + 2 * kMargin;
    const double height = kPlotH + 2 * kMargin;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\">\n";
    out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kPlotW)
        << "\" height=\"" << num(kPlotH) << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (double ref : reference_fppi()) {
        const double x = plot_x(ref);
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(x) << "\" y2=\""
            << num(kMargin + kPlotH) << "\" stroke=\"#cccccc\" stroke-dasharray=\"3,3\"/>\n";
    }
    for (double tick : {1e-3, 1e-2, 1e-1, 1e0, 1e1}) {
        out << "<text x=\"" << num(plot_x(tick)) << "\" y=\"" << num(kMargin + kPlotH + 18)
            << "\" font-size=\"11\" text-anchor=\"middle\">" << text::format_double(tick) << "</text>\n";
    }
    for (double tick : {0.05, 0.1, 0.2, 0.3, 0.5, 0.64, 0.8, 1.0}) {
        out << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(plot_y(tick) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << text::format_double(tick) << "</text>\n";
    }
    out << "<text x=\"" << num(kMargin + kPlotW / 2) << "\" y=\"" << num(height - 8)
        << "\" font-size=\"12\" text-anchor=\"middle\">false positives per image</text>\n";
    out << "<text x=\"14\" y=\"" << num(kMargin + kPlotH / 2) << "\" font-size=\"12\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 14 " << num(kMargin + kPlotH / 2) << ")\">miss rate</text>\n";

    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& c = curves[i];
        const char* color = palette[i % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        // steps: hold each miss rate until the next fppi
        for (std::size_t k = 0; k < c.curve.points.size(); ++k) {
            const auto& p = c.curve.points[k];
            const double next = k + 1 < c.curve.points.size() ? c.curve.points[k + 1].fppi : kXMax;
            out << num(plot_x(p.fppi)) << ',' << num(plot_y(p.miss_rate)) << ' ' << num(plot_x(next)) << ','
                << num(plot_y(p.miss_rate)) << ' ';
        }
        out << "\"/>\n";
        const std::string label =
            c.curve.points.empty() ? c.label : text::format_fixed(log_average_miss_rate(c.curve), 2) + "% " + c.label;
        out << "<text x=\"" << num(kMargin + kPlotW - 8) << "\" y=\"" << num(kMargin + 18 + 16.0 * i)
            << "\" font-size=\"12\" text-anchor=\"end\" fill=\"" << color << "\">" << xml_escape(label) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) {
        throw IoError("failed to write svg");
    }
}

}  // namespace csbc
