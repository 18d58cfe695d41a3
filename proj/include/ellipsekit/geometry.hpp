#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ellipsekit {

inline constexpr double kPi = 3.14159265358979323846;

/// Reduces an angle to (-pi/2, pi/2], the orientation range of an ellipse.
/// Throws InvalidArgument for non-finite input.
double normalize_angle(double theta);

/// Reduces a value measured in half-turns (units of pi) to (-1/2, 1/2].
/// Exact for inputs already in range and for integer shifts of them.
double wrap_half_turn(double u);

/// Whole-object ellipse: center (x, y), semi-axes a >= b > 0, orientation
/// theta measured from +x to the major axis. The constructor rejects a < b
/// and stores theta normalized to (-pi/2, pi/2].
class Ellipse {
 public:
  Ellipse(double x, double y, double a, double b, double theta);

  double x() const { return x_; }
  double y() const { return y_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double theta() const { return theta_; }

  double area() const { return kPi * a_ * b_; }

  bool operator==(const Ellipse&) const = default;

 private:
  double x_, y_, a_, b_, theta_;
};

/// Axis-aligned rectangle given by center and size.
class BoxRegion {
 public:
  BoxRegion(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }

  bool operator==(const BoxRegion&) const = default;

 private:
  double x_, y_, w_, h_;
};

/// Axis-aligned square given by center and side length.
class SquareRegion {
 public:
  SquareRegion(double x, double y, double l);

  double x() const { return x_; }
  double y() const { return y_; }
  double l() const { return l_; }

  bool operator==(const SquareRegion&) const = default;

 private:
  double x_, y_, l_;
};

struct AaExtent {
  double dx;
  double dy;
};

/// Side lengths of the axis-aligned bounding box, from the horizontal and
/// vertical tangents of the ellipse.
AaExtent aa_extent(const Ellipse& e);

/// Axis-aligned bounding box of the ellipse as a BoxRegion.
BoxRegion aa_box(const Ellipse& e);

/// Square centered on the ellipse whose side is the diagonal of its bounding
/// box, l = 2 sqrt(a^2 + b^2). Independent of orientation.
SquareRegion enclosing_square(const Ellipse& e);

/// Square sharing the box center with side sqrt(w^2 + h^2).
SquareRegion extend_box_to_square(const BoxRegion& p);

/// True iff (px, py) lies inside or on the ellipse.
bool contains(const Ellipse& e, double px, double py);

/// Regular grid of square cells. Cell (col, row) spans
/// [origin_x + col*cell, origin_x + (col+1)*cell) horizontally, likewise in y.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell = 1.0;
  int cols = 0;
  int rows = 0;

  double center_x(int col) const { return origin_x + (col + 0.5) * cell; }
  double center_y(int row) const { return origin_y + (row + 0.5) * cell; }
  void validate() const;
};

/// Row-major boolean grid.
class Mask {
 public:
  Mask() = default;
  Mask(int cols, int rows, bool fill = false);

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  bool empty() const { return cells_.empty(); }

  bool at(int col, int row) const { return cells_[index(col, row)] != 0; }
  void set(int col, int row, bool v) { cells_[index(col, row)] = v ? 1 : 0; }

  std::int64_t count() const;
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  bool operator==(const Mask&) const = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }

  int cols_ = 0;
  int rows_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Marks every cell whose center satisfies contains(e, ...).
Mask rasterize(const Ellipse& e, const GridSpec& grid);

/// Implicit quadratic form x^T m x = 0 over homogeneous image points.
struct Conic {
  Eigen::Matrix3d m;
};

Conic ellipse_to_conic(const Ellipse& e);

/// Inverse of ellipse_to_conic, invariant to the scale (and sign) of the
/// matrix. Throws NotAnEllipse for hyperbolas, parabolas, imaginary and
/// degenerate conics.
Ellipse conic_to_ellipse(const Conic& c);

/// Ellipse with the given center and second-moment shape matrix
/// sigma = R diag(a^2, b^2) R^T. Throws NotAnEllipse unless sigma is positive
/// definite. A circle (equal eigenvalues) gets theta = 0.
Ellipse ellipse_from_shape(double cx, double cy, const Eigen::Matrix2d& sigma);

/// Dual (envelope) form of the ellipse, [[S - c c^T, -c], [-c^T, -1]] with
/// S = R diag(a^2, b^2) R^T.
Eigen::Matrix3d ellipse_to_dual_conic(const Ellipse& e);

/// Inverse of ellipse_to_dual_conic up to scale.
Ellipse dual_conic_to_ellipse(const Eigen::Matrix3d& dual);

}  // namespace ellipsekit
