#include "ellipsekit/refinement.hpp"

#include <algorithm>
#include <cmath>

#include "ellipsekit/errors.hpp"

namespace ellipsekit {

PadBounds pad_bounds(double w, double h, double r) {
  if (!(w > 0.0) || !(h > 0.0) || !(r > 0.0) || !std::isfinite(w) || !std::isfinite(h) ||
      !std::isfinite(r)) {
    throw InvalidArgument("pad_bounds requires positive finite w, h and r");
  }
  const double half_w = w / (2.0 * r);
  const double half_h = h / (2.0 * r);
  return {static_cast<int>(std::floor(-half_w)), static_cast<int>(std::ceil(half_w)),
          static_cast<int>(std::floor(-half_h)), static_cast<int>(std::ceil(half_h))};
}

GridSpec square_grid(const SquareRegion& square, int m) {
  GridSpec grid;
  grid.cell = square.l() / m;
  grid.cols = m;
  grid.rows = m;
  grid.origin_x = square.x() - square.l() / 2.0;
  grid.origin_y = square.y() - square.l() / 2.0;
  grid.validate();
  return grid;
}

Mask validity_mask(const SquareRegion& square, const BoxRegion& visible, int m) {
  if (m < 2) throw InvalidArgument("validity mask needs m >= 2");
  if (visible.w() > square.l() || visible.h() > square.l()) {
    throw InvalidArgument("visible box does not fit in the extended square");
  }
  const GridSpec grid = square_grid(square, m);
  const double left = visible.x() - visible.w() / 2.0;
  const double right = visible.x() + visible.w() / 2.0;
  const double top = visible.y() - visible.h() / 2.0;
  const double bottom = visible.y() + visible.h() / 2.0;
  Mask mask(m, m);
  for (int row = 0; row < m; ++row) {
    const double cy = grid.center_y(row);
    if (cy < top || cy >= bottom) continue;
    for (int col = 0; col < m; ++col) {
      const double cx = grid.center_x(col);
      if (cx >= left && cx < right) mask.set(col, row, true);
    }
  }
  return mask;
}

OcclusionTarget occlusion_target(const Ellipse& e, const BoxRegion& visible, int m) {
  if (m < 8) throw InvalidArgument("occlusion target needs m >= 8");
  const SquareRegion square = extend_box_to_square(visible);
  OcclusionTarget out;
  out.whole_mask = rasterize(e, square_grid(square, m));
  const Mask valid = validity_mask(square, visible, m);
  out.visible_mask = Mask(m, m);
  for (int row = 0; row < m; ++row) {
    for (int col = 0; col < m; ++col) {
      out.visible_mask.set(col, row, out.whole_mask.at(col, row) && valid.at(col, row));
    }
  }
  return out;
}

double bce_mask_loss(const ProbabilityGrid& pred, const Mask& target) {
  if (pred.cols != target.cols() || pred.rows != target.rows() ||
      pred.values.size() != target.cells().size()) {
    throw InvalidArgument("prediction and target shapes differ");
  }
  if (pred.values.empty()) throw InvalidArgument("empty mask");
  double total = 0.0;
  const auto& t = target.cells();
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const double raw = pred.values[i];
    if (!(raw >= 0.0 && raw <= 1.0)) throw InvalidArgument("predictions must lie in [0, 1]");
    const double p = std::clamp(raw, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    total -= t[i] ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.values.size());
}

}  // namespace ellipsekit
