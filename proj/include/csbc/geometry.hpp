#pragma once

namespace csbc {

/// Axis-aligned rectangle in pixel coordinates: (x, y) is the top-left corner.
/// Width and height are strictly positive; degenerate boxes are rejected at
/// construction with InputError.
class BoundingBox {
public:
    BoundingBox(double x, double y, double w, double h);

    double x() const noexcept { return x_; }
    double y() const noexcept { return y_; }
    double w() const noexcept { return w_; }
    double h() const noexcept { return h_; }
    double right() const noexcept { return x_ + w_; }
    double bottom() const noexcept { return y_ + h_; }
    double area() const noexcept { return w_ * h_; }
    double center_x() const noexcept { return x_ + 0.5 * w_; }
    double center_y() const noexcept { return y_ + 0.5 * h_; }

    BoundingBox translated(double dx, double dy) const;
    // Scales position and extent about the origin.
    BoundingBox scaled(double factor) const;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

private:
    double x_;
    double y_;
    double w_;
    double h_;
};

/// Area of a ∩ b with half-open extents; boxes sharing only an edge give 0.
double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Jaccard coefficient area(a∩b) / area(a∪b), in [0, 1].
/// jaccard(a, a) is exactly 1.
double jaccard(const BoundingBox& a, const BoundingBox& b) noexcept;

}  // namespace csbc
