#include "ellipsekit/geometry.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ellipsekit/errors.hpp"

namespace ellipsekit {
namespace {

constexpr double kHalfPi = kPi / 2.0;

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be finite");
  }
}

// Shared by contains() and rasterize() so both evaluate the exact same
// floating-point expression.
struct InsideTest {
  explicit InsideTest(const Ellipse& e)
      : x(e.x()), y(e.y()), c(std::cos(e.theta())), s(std::sin(e.theta())),
        a2(e.a() * e.a()), b2(e.b() * e.b()) {}

  bool operator()(double px, double py) const {
    const double dx = px - x;
    const double dy = py - y;
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return u * u / a2 + v * v / b2 <= 1.0;
  }

  double x, y, c, s, a2, b2;
};

}  // namespace

double normalize_angle(double theta) {
  require_finite(theta, "angle");
  if (theta > -kHalfPi && theta <= kHalfPi) return theta;
  const double turns = std::ceil(theta / kPi - 0.5);
  double r = theta - turns * kPi;
  while (r <= -kHalfPi) r += kPi;
  while (r > kHalfPi) r -= kPi;
  return r;
}

double wrap_half_turn(double u) {
  require_finite(u, "half-turn value");
  if (u > -0.5 && u <= 0.5) return u;
  double r = u - std::ceil(u - 0.5);
  while (r <= -0.5) r += 1.0;
  while (r > 0.5) r -= 1.0;
  return r;
}

Ellipse::Ellipse(double x, double y, double a, double b, double theta)
    : x_(x), y_(y), a_(a), b_(b), theta_(0.0) {
  require_finite(x, "ellipse x");
  require_finite(y, "ellipse y");
  require_finite(a, "ellipse a");
  require_finite(b, "ellipse b");
  if (!(b > 0.0)) throw InvalidArgument("ellipse semi-minor axis must be > 0");
  if (a < b) {
    std::ostringstream os;
    os << "ellipse requires a >= b (got a=" << a << ", b=" << b << ")";
    throw InvalidArgument(os.str());
  }
  theta_ = normalize_angle(theta);
}

BoxRegion::BoxRegion(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  require_finite(x, "box x");
  require_finite(y, "box y");
  require_finite(w, "box w");
  require_finite(h, "box h");
  if (!(w > 0.0) || !(h > 0.0)) throw InvalidArgument("box width and height must be > 0");
}

SquareRegion::SquareRegion(double x, double y, double l) : x_(x), y_(y), l_(l) {
  require_finite(x, "square x");
  require_finite(y, "square y");
  require_finite(l, "square l");
  if (!(l > 0.0)) throw InvalidArgument("square side must be > 0");
}

AaExtent aa_extent(const Ellipse& e) {
  const double c = std::cos(e.theta());
  const double s = std::sin(e.theta());
  const double a2 = e.a() * e.a();
  const double b2 = e.b() * e.b();
  return {2.0 * std::sqrt(a2 * c * c + b2 * s * s), 2.0 * std::sqrt(a2 * s * s + b2 * c * c)};
}

BoxRegion aa_box(const Ellipse& e) {
  const AaExtent ext = aa_extent(e);
  return {e.x(), e.y(), ext.dx, ext.dy};
}

SquareRegion enclosing_square(const Ellipse& e) {
  return {e.x(), e.y(), 2.0 * std::sqrt(e.a() * e.a() + e.b() * e.b())};
}

SquareRegion extend_box_to_square(const BoxRegion& p) {
  return {p.x(), p.y(), std::sqrt(p.w() * p.w() + p.h() * p.h())};
}

bool contains(const Ellipse& e, double px, double py) { return InsideTest(e)(px, py); }

void GridSpec::validate() const {
  if (!(cell > 0.0) || !std::isfinite(cell)) throw InvalidArgument("grid cell size must be > 0");
  if (cols <= 0 || rows <= 0) throw InvalidArgument("grid must have at least one row and column");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
    throw InvalidArgument("grid origin must be finite");
  }
}

Mask::Mask(int cols, int rows, bool fill) : cols_(cols), rows_(rows) {
  if (cols < 0 || rows < 0) throw InvalidArgument("mask dimensions must be non-negative");
  cells_.assign(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows), fill ? 1 : 0);
}

std::int64_t Mask::count() const {
  return std::count(cells_.begin(), cells_.end(), std::uint8_t{1});
}

Mask rasterize(const Ellipse& e, const GridSpec& grid) {
  grid.validate();
  Mask mask(grid.cols, grid.rows);
  const AaExtent ext = aa_extent(e);
  // Only cells near the bounding box can be inside; one cell of slack covers
  // rounding in the index computation.
  auto clamp_index = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(hi)));
  };
  const int c0 = clamp_index(std::floor((e.x() - ext.dx / 2 - grid.origin_x) / grid.cell) - 1, grid.cols);
  const int c1 = clamp_index(std::ceil((e.x() + ext.dx / 2 - grid.origin_x) / grid.cell) + 1, grid.cols);
  const int r0 = clamp_index(std::floor((e.y() - ext.dy / 2 - grid.origin_y) / grid.cell) - 1, grid.rows);
  const int r1 = clamp_index(std::ceil((e.y() + ext.dy / 2 - grid.origin_y) / grid.cell) + 1, grid.rows);
  const InsideTest inside(e);
  for (int row = std::max(r0, 0); row < std::min(r1, grid.rows); ++row) {
    const double cy = grid.center_y(row);
    for (int col = std::max(c0, 0); col < std::min(c1, grid.cols); ++col) {
      if (inside(grid.center_x(col), cy)) mask.set(col, row, true);
    }
  }
  return mask;
}

Conic ellipse_to_conic(const Ellipse& e) {
  const double c = std::cos(e.theta());
  const double s = std::sin(e.theta());
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  const Eigen::Matrix2d inv_axes =
      Eigen::Vector2d(1.0 / (e.a() * e.a()), 1.0 / (e.b() * e.b())).asDiagonal();
  const Eigen::Matrix2d shape = rot * inv_axes * rot.transpose();
  const Eigen::Vector2d center(e.x(), e.y());
  Conic out;
  out.m.topLeftCorner<2, 2>() = shape;
  out.m.topRightCorner<2, 1>() = -shape * center;
  out.m.bottomLeftCorner<1, 2>() = (-shape * center).transpose();
  out.m(2, 2) = center.dot(shape * center) - 1.0;
  return out;
}

Ellipse ellipse_from_shape(double cx, double cy, const Eigen::Matrix2d& sigma) {
  const double s00 = sigma(0, 0);
  const double s11 = sigma(1, 1);
  const double s01 = 0.5 * (sigma(0, 1) + sigma(1, 0));
  const double det = s00 * s11 - s01 * s01;
  if (!std::isfinite(det) || !(det > 0.0) || !(s00 > 0.0)) {
    throw NotAnEllipse("shape matrix is not positive definite");
  }
  const double mean = 0.5 * (s00 + s11);
  const double half_diff = 0.5 * (s00 - s11);
  const double big = mean + std::hypot(half_diff, s01);
  const double small = det / big;
  const double theta = 0.5 * std::atan2(2.0 * s01, s00 - s11);
  const double a = std::sqrt(big);
  const double b = std::min(std::sqrt(small), a);
  return {cx, cy, a, b, theta};
}

Ellipse conic_to_ellipse(const Conic& conic) {
  const Eigen::Matrix3d m = 0.5 * (conic.m + conic.m.transpose());
  if (!m.allFinite()) throw NotAnEllipse("conic has non-finite entries");
  const Eigen::Matrix2d quad = m.topLeftCorner<2, 2>();
  const double det = quad.determinant();
  if (!(det > 0.0)) throw NotAnEllipse("conic is a hyperbola, parabola or degenerate");
  // The constant term cancels heavily for small ellipses far from the
  // origin, so the center and residual are formed in extended precision.
  using Ext = long double;
  const Ext p = m(0, 0), q = m(0, 1), r = m(1, 1), u = m(0, 2), v = m(1, 2);
  const Ext det_ext = p * r - q * q;
  const Ext cx = (q * v - r * u) / det_ext;
  const Ext cy = (q * u - p * v) / det_ext;
  const Ext k_ext = static_cast<Ext>(m(2, 2)) + u * cx + v * cy;
  const double k = static_cast<double>(k_ext);
  if (!(k != 0.0) || !std::isfinite(k)) throw NotAnEllipse("conic degenerates to a point");
  if (!(p / -k_ext > 0)) throw NotAnEllipse("conic has no real points");
  // sigma = (quad / -k)^-1 = -k adj(quad) / det(quad)
  const Ext scale = -k_ext / det_ext;
  Eigen::Matrix2d sigma;
  sigma << static_cast<double>(scale * r), static_cast<double>(-scale * q),
      static_cast<double>(-scale * q), static_cast<double>(scale * p);
  return ellipse_from_shape(static_cast<double>(cx), static_cast<double>(cy), sigma);
}

Eigen::Matrix3d ellipse_to_dual_conic(const Ellipse& e) {
  const double c = std::cos(e.theta());
  const double s = std::sin(e.theta());
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  const Eigen::Matrix2d sigma =
      rot * Eigen::Vector2d(e.a() * e.a(), e.b() * e.b()).asDiagonal() * rot.transpose();
  const Eigen::Vector2d center(e.x(), e.y());
  Eigen::Matrix3d d;
  d.topLeftCorner<2, 2>() = sigma - center * center.transpose();
  d.topRightCorner<2, 1>() = -center;
  d.bottomLeftCorner<1, 2>() = -center.transpose();
  d(2, 2) = -1.0;
  return d;
}

Ellipse dual_conic_to_ellipse(const Eigen::Matrix3d& dual) {
  Eigen::Matrix3d d = 0.5 * (dual + dual.transpose());
  if (!d.allFinite()) throw NotAnEllipse("dual conic has non-finite entries");
  if (!(d(2, 2) != 0.0)) throw NotAnEllipse("dual conic has no finite center");
  d /= -d(2, 2);
  const Eigen::Vector2d center = -d.topRightCorner<2, 1>();
  const Eigen::Matrix2d sigma = d.topLeftCorner<2, 2>() + center * center.transpose();
  return ellipse_from_shape(center.x(), center.y(), sigma);
}

}  // namespace ellipsekit
