#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "ellipsekit/geometry.hpp"

namespace ellipsekit {

using Point2 = Eigen::Vector2d;

inline constexpr double kMveeDefaultTol = 1e-7;
inline constexpr int kMveeDefaultMaxIter = 1000;

struct MveeFit {
  Ellipse ellipse;
  Eigen::Vector2d center;
  // Points p inside satisfy (p - center)^T shape (p - center) <= 1.
  Eigen::Matrix2d shape;
  int iterations = 0;
  // max over inputs of (p - c)^T shape (p - c), at most 1 + tol.
  double max_containment = 0.0;
};

/// Minimum-volume enclosing ellipse by Khachiyan's barycentric ascent
/// (with Todd-Yildirim away steps) over the convex hull vertices. Once every
/// point lies within the ellipse inflated by 1%, a log-barrier Newton stage
/// finishes the solve; both stages draw on the same max_iter budget. Stops
/// once every point lies within the ellipse inflated by (1 + tol).
///
/// Throws DegenerateInput for fewer than three points or collinear input,
/// and ConvergenceFailure (carrying the iterate's residual) when max_iter is
/// exhausted.
MveeFit mvee_fit(std::span<const Point2> points, double tol = kMveeDefaultTol,
                 int max_iter = kMveeDefaultMaxIter);

inline Ellipse mvee(std::span<const Point2> points, double tol = kMveeDefaultTol,
                    int max_iter = kMveeDefaultMaxIter) {
  return mvee_fit(points, tol, max_iter).ellipse;
}

/// Centers of the boundary cells of a mask: true cells with at least one
/// false (or off-grid) 4-neighbor. Throws DegenerateInput for an empty mask.
std::vector<Point2> mask_to_points(const Mask& mask, const GridSpec& grid);

}  // namespace ellipsekit
