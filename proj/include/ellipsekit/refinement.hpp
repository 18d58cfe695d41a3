#pragma once

#include <vector>

#include "ellipsekit/geometry.hpp"

namespace ellipsekit {

/// Integer limits of a resized rectangle centered at the origin.
struct PadBounds {
  int x_min = 0;
  int x_max = 0;
  int y_min = 0;
  int y_max = 0;
};

/// floor(-w / 2r), ceil(w / 2r) and likewise for h.
PadBounds pad_bounds(double w, double h, double r);

/// Default side length of the occlusion mask grid.
inline constexpr int kDefaultMaskSize = 28;

/// Probability clamp used by bce_mask_loss.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// m x m grid over the square. A cell is valid when its center lies in the
/// visible rectangle, left/top edges inclusive and right/bottom exclusive.
/// Throws when the visible box is wider or taller than the square.
Mask validity_mask(const SquareRegion& square, const BoxRegion& visible, int m);

/// Grid of cell centers spanning the square with m cells per side.
GridSpec square_grid(const SquareRegion& square, int m);

struct OcclusionTarget {
  Mask whole_mask;
  Mask visible_mask;
};

/// Whole ellipse sampled over the extended square of the visible box, and
/// its restriction to the visible box.
OcclusionTarget occlusion_target(const Ellipse& e, const BoxRegion& visible,
                                 int m = kDefaultMaskSize);

/// Row-major probability grid.
struct ProbabilityGrid {
  int cols = 0;
  int rows = 0;
  std::vector<double> values;
};

/// Mean binary cross-entropy with predictions clamped to
/// [kProbabilityEpsilon, 1 - kProbabilityEpsilon].
double bce_mask_loss(const ProbabilityGrid& pred, const Mask& target);

}  // namespace ellipsekit
