#include "csbc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "csbc/error.hpp"

namespace csbc {

BoundingBox::BoundingBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
        throw InputError("bounding box has non-finite coordinates");
    }
    if (w <= 0.0 || h <= 0.0) {
        throw InputError("bounding box must have positive width and height");
    }
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
    return BoundingBox(x_ + dx, y_ + dy, w_, h_);
}

BoundingBox BoundingBox::scaled(double factor) const {
    return BoundingBox(x_ * factor, y_ * factor, w_ * factor, h_ * factor);
}

namespace {

// Extent measured between edges, so a box intersected with itself yields
// bit-for-bit the same value as its own area in jaccard().
double edge_area(double left, double top, double right, double bottom) noexcept {
    return (right - left) * (bottom - top);
}

}  // namespace

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double left = std::max(a.x(), b.x());
    const double top = std::max(a.y(), b.y());
    const double right = std::min(a.right(), b.right());
    const double bottom = std::min(a.bottom(), b.bottom());
    if (right <= left || bottom <= top) {
        return 0.0;
    }
    return edge_area(left, top, right, bottom);
}

double jaccard(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double inter = intersection_area(a, b);
    if (inter == 0.0) {
        return 0.0;
    }
    const double area_a = edge_area(a.x(), a.y(), a.right(), a.bottom());
    const double area_b = edge_area(b.x(), b.y(), b.right(), b.bottom());
    const double uni = area_a + area_b - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace csbc
