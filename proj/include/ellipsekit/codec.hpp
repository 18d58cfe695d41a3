#pragma once

#include <array>
#include <span>

#include "ellipsekit/geometry.hpp"

namespace ellipsekit {

/// Normalized offsets between a proposal box and a target box.
struct BoxOffsets {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

/// The six ellipse regression offsets relative to an extended square.
struct EllipseOffsets {
  double dx = 0.0;
  double dy = 0.0;
  double da = 0.0;
  double db = 0.0;
  double ds = 0.0;
  double dtheta = 0.0;

  std::array<double, 6> as_array() const { return {dx, dy, da, db, ds, dtheta}; }
  static EllipseOffsets from_array(const std::array<double, 6>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  bool operator==(const EllipseOffsets&) const = default;
};

/// Ratio between the visible-part square and the whole-object square, in (0, 1].
class VisibilityScale {
 public:
  explicit VisibilityScale(double s);
  double value() const { return s_; }

 private:
  double s_;
};

/// Lower clamp applied to the decoded visibility scale.
inline constexpr double kMinDecodedScale = 1e-3;

BoxOffsets encode_box(const BoxRegion& proposal, const BoxRegion& target);
BoxRegion decode_box(const BoxRegion& proposal, const BoxOffsets& t);

/// Visibility scale of a visible-part square against the whole ellipse:
/// q.l / (2 sqrt(a^2 + b^2)), clamped to at most 1.
VisibilityScale visibility_scale(const SquareRegion& q, const Ellipse& e);

/// Occlusion-aware targets. With s = 1 this is exactly encode_ellipse_unoccluded.
EllipseOffsets encode_ellipse(const SquareRegion& q, const Ellipse& e, VisibilityScale s);

/// Five-offset targets for a fully visible ellipse; ds is always 0.
EllipseOffsets encode_ellipse_unoccluded(const SquareRegion& q, const Ellipse& e);

struct DecodedEllipse {
  Ellipse ellipse;
  double scale;
};

/// Inverse transform. The decoded scale is clamped to [kMinDecodedScale, 1],
/// the orientation is rectified to (-pi/2, pi/2], and swapped axes (a < b)
/// are repaired by exchanging them and rotating by pi/2.
DecodedEllipse decode_ellipse(const SquareRegion& q, const EllipseOffsets& d);

/// Orientation residual between two normalized angle offsets, rectified so
/// that antipodal orientations give zero. Result in (-pi/2, pi/2].
double angle_residual(double d, double d_star);

double smooth_l1(double x);
double smooth_l1_grad(double x);

/// Per-region regression loss: sum of smooth-L1 over the six components,
/// the orientation component taken on angle_residual / pi. Zero for
/// non-positive regions.
double ellipse_loss(const EllipseOffsets& d, const EllipseOffsets& d_star, bool positive);

/// Gradient of ellipse_loss (positive region) with respect to d.
EllipseOffsets ellipse_loss_grad(const EllipseOffsets& d, const EllipseOffsets& d_star);

struct RegionSample {
  EllipseOffsets predicted;
  EllipseOffsets target;
  bool positive = false;
};

/// Mean per-region loss over the positive regions; 0 when none is positive.
double batch_ellipse_loss(std::span<const RegionSample> regions);

}  // namespace ellipsekit
