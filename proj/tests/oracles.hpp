#pragma once

// Reference implementations written independently of the library, used as
// test oracles.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Box {
    double x, y, w, h;
};

// Overlap over union through per-axis interval lengths.
inline double jaccard(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

// Jaccard of integer boxes by counting unit cells.
inline double jaccard_by_cells(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
    long inter = 0;
    long uni = 0;
    const int x0 = std::min(ax, bx);
    const int x1 = std::max(ax + aw, bx + bw);
    const int y0 = std::min(ay, by);
    const int y1 = std::max(ay + ah, by + bh);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const bool in_a = x >= ax && x < ax + aw && y >= ay && y < ay + ah;
            const bool in_b = x >= bx && x < bx + bw && y >= by && y < by + bh;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Ordinary least squares with intercept, via the normal equations on
// centred data.
inline Eigen::VectorXd ols_fitted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::RowVectorXd mx = X.colwise().mean();
    const double my = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mx;
    const Eigen::VectorXd yc = y.array() - my;
    const Eigen::MatrixXd gram = Xc.transpose() * Xc;
    const Eigen::VectorXd beta = gram.ldlt().solve(Xc.transpose() * yc);
    return (Xc * beta).array() + my;
}

struct Window {
    std::string frame;
    Box box;
    double score;
};

struct Affine {
    double slope;
    double intercept;
};

// Spatially fused score of one root window: its own score plus every other
// detector's overlapping window, calibrated and weighted by overlap; nullopt
// when nothing overlaps enough.
inline std::optional<double> spatial_consensus(const Window& root, const std::vector<std::vector<Window>>& others,
                                               const std::vector<Affine>& cal, double threshold) {
    double score = root.score;
    bool supported = false;
    for (std::size_t d = 0; d < others.size(); ++d) {
        for (const auto& w : others[d]) {
            if (w.frame != root.frame) {
                continue;
            }
            const double j = jaccard(root.box, w.box);
            if (j >= threshold) {
                score += (cal[d].slope * w.score + cal[d].intercept) * j;
                supported = true;
            }
        }
    }
    if (!supported) {
        return std::nullopt;
    }
    return score;
}

struct Truth {
    std::string frame;
    Box box;
    bool ignore = false;
};

struct Point {
    double fppi;
    double miss;
};

// Miss rate and FPPI at every distinct score threshold, re-matching each frame
// from scratch with only the windows at or above the threshold.
inline std::vector<Point> sweep_thresholds(const std::vector<Window>& dets, const std::vector<Truth>& gts,
                                           double iou, std::size_t n_frames) {
    std::vector<double> thresholds;
    for (const auto& d : dets) {
        thresholds.push_back(d.score);
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t n_gt = 0;
    for (const auto& g : gts) {
        n_gt += !g.ignore;
    }
    std::vector<Point> points;
    for (double t : thresholds) {
        std::map<std::string, std::vector<Window>> by_frame;
        for (const auto& d : dets) {
            if (d.score >= t) {
                by_frame[d.frame].push_back(d);
            }
        }
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (auto& [frame, ws] : by_frame) {
            std::stable_sort(ws.begin(), ws.end(), [](const Window& a, const Window& b) { return a.score > b.score; });
            std::vector<const Truth*> free;
            std::vector<const Truth*> ignored;
            for (const auto& g : gts) {
                if (g.frame == frame) {
                    (g.ignore ? ignored : free).push_back(&g);
                }
            }
            for (const auto& w : ws) {
                auto best = free.end();
                double best_j = -1.0;
                for (auto it = free.begin(); it != free.end(); ++it) {
                    const double j = jaccard(w.box, (*it)->box);
                    if (j >= iou && j > best_j) {
                        best_j = j;
                        best = it;
                    }
                }
                if (best != free.end()) {
                    ++tp;
                    free.erase(best);
                    continue;
                }
                const bool neutral = std::any_of(ignored.begin(), ignored.end(),
                                                 [&](const Truth* g) { return jaccard(w.box, g->box) >= iou; });
                fp += !neutral;
            }
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_frames),
                          static_cast<double>(n_gt - tp) / static_cast<double>(n_gt)});
    }
    return points;
}

// Geometric mean of the miss rate at the nine reference FPPI values
// 0.01 .. 1, each the best miss rate among thresholds whose FPPI does not
// exceed the reference (among those at the smallest FPPI when none does),
// floored at 1e-5.
inline double log_average_miss_rate(const std::vector<Point>& sweep) {
    double lowest_fppi = sweep.front().fppi;
    for (const auto& p : sweep) {
        lowest_fppi = std::min(lowest_fppi, p.fppi);
    }
    double product = 1.0;
    for (int k = 0; k < 9; ++k) {
        const double ref = std::pow(10.0, -2.0 + 0.25 * k);
        const double limit = std::max(ref, lowest_fppi);
        double miss = 1.0;
        for (const auto& p : sweep) {
            if (p.fppi <= limit) {
                miss = std::min(miss, p.miss);
            }
        }
        product *= std::max(miss, 1e-5);
    }
    return 100.0 * std::pow(product, 1.0 / 9.0);
}

// Value of a bilinear interpolant of `img` (row-major, edge-replicated) at
// continuous source coordinates (fx, fy), written as a weighted sum of the
// four neighbours.
inline double bilinear(const std::vector<double>& img, int width, int height, double fx, double fy) {
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double ax = fx - x0;
    const double ay = fy - y0;
    auto at = [&](int r, int c) {
        r = std::min(std::max(r, 0), height - 1);
        c = std::min(std::max(c, 0), width - 1);
        return img[static_cast<std::size_t>(r) * width + c];
    };
    return (1 - ax) * (1 - ay) * at(y0, x0) + ax * (1 - ay) * at(y0, x0 + 1) + (1 - ax) * ay * at(y0 + 1, x0) +
           ax * ay * at(y0 + 1, x0 + 1);
}

}  // namespace oracle
