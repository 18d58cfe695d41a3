#include "ellipsekit/codec.hpp"

#include <algorithm>
#include <cmath>

#include "ellipsekit/errors.hpp"

namespace ellipsekit {

VisibilityScale::VisibilityScale(double s) : s_(s) {
  if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("visibility scale must lie in (0, 1]");
}

BoxOffsets encode_box(const BoxRegion& p, const BoxRegion& g) {
  return {(g.x() - p.x()) / p.w(), (g.y() - p.y()) / p.h(), std::log(g.w() / p.w()),
          std::log(g.h() / p.h())};
}

BoxRegion decode_box(const BoxRegion& p, const BoxOffsets& t) {
  return {p.x() + t.tx * p.w(), p.y() + t.ty * p.h(), p.w() * std::exp(t.tw),
          p.h() * std::exp(t.th)};
}

VisibilityScale visibility_scale(const SquareRegion& q, const Ellipse& e) {
  return VisibilityScale(std::min(1.0, q.l() / enclosing_square(e).l()));
}

EllipseOffsets encode_ellipse(const SquareRegion& q, const Ellipse& e, VisibilityScale scale) {
  const double s = scale.value();
  EllipseOffsets d;
  d.dx = s * (e.x() - q.x()) / q.l();
  d.dy = s * (e.y() - q.y()) / q.l();
  d.da = std::log(2.0 * s * e.a() / q.l());
  d.db = std::log(2.0 * s * e.b() / q.l());
  d.ds = std::log((s + 1.0) / 2.0);
  d.dtheta = e.theta() / kPi;
  return d;
}

EllipseOffsets encode_ellipse_unoccluded(const SquareRegion& q, const Ellipse& e) {
  EllipseOffsets d;
  d.dx = (e.x() - q.x()) / q.l();
  d.dy = (e.y() - q.y()) / q.l();
  d.da = std::log(2.0 * e.a() / q.l());
  d.db = std::log(2.0 * e.b() / q.l());
  d.ds = 0.0;
  d.dtheta = e.theta() / kPi;
  return d;
}

DecodedEllipse decode_ellipse(const SquareRegion& q, const EllipseOffsets& d) {
  for (double v : d.as_array()) {
    if (!std::isfinite(v)) throw InvalidArgument("ellipse offsets must be finite");
  }
  const double s = std::clamp(2.0 * std::exp(d.ds) - 1.0, kMinDecodedScale, 1.0);
  const double x = q.l() / s * d.dx + q.x();
  const double y = q.l() / s * d.dy + q.y();
  double a = q.l() / (2.0 * s) * std::exp(d.da);
  double b = q.l() / (2.0 * s) * std::exp(d.db);
  double theta = kPi * wrap_half_turn(d.dtheta);
  if (a < b) {
    std::swap(a, b);
    theta += kPi / 2.0;
  }
  return {Ellipse(x, y, a, b, theta), s};
}

double angle_residual(double d, double d_star) { return kPi * wrap_half_turn(d - d_star); }

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double smooth_l1_grad(double x) {
  if (std::abs(x) < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

double ellipse_loss(const EllipseOffsets& d, const EllipseOffsets& d_star, bool positive) {
  if (!positive) return 0.0;
  const auto p = d.as_array();
  const auto t = d_star.as_array();
  double loss = 0.0;
  for (std::size_t i = 0; i < 5; ++i) loss += smooth_l1(p[i] - t[i]);
  // angle_residual / pi, computed directly in half-turn units.
  loss += smooth_l1(wrap_half_turn(d.dtheta - d_star.dtheta));
  return loss;
}

EllipseOffsets ellipse_loss_grad(const EllipseOffsets& d, const EllipseOffsets& d_star) {
  const auto p = d.as_array();
  const auto t = d_star.as_array();
  std::array<double, 6> g{};
  for (std::size_t i = 0; i < 5; ++i) g[i] = smooth_l1_grad(p[i] - t[i]);
  // The rectification is a shift by an integer, locally constant.
  g[5] = smooth_l1_grad(wrap_half_turn(d.dtheta - d_star.dtheta));
  return EllipseOffsets::from_array(g);
}

double batch_ellipse_loss(std::span<const RegionSample> regions) {
  double total = 0.0;
  std::size_t positives = 0;
  for (const auto& r : regions) {
    if (!r.positive) continue;
    total += ellipse_loss(r.predicted, r.target, true);
    ++positives;
  }
  return positives == 0 ? 0.0 : total / static_cast<double>(positives);
}

}  // namespace ellipsekit
