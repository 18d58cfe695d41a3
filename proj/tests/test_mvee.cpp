#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "ellipsekit/errors.hpp"
#include "ellipsekit/mvee.hpp"

using namespace ellipsekit;

namespace {

std::vector<Point2> boundary_samples(const Ellipse& e, int n, double phase = 0.0) {
  std::vector<Point2> pts;
  for (int k = 0; k < n; ++k) {
    const double t = phase + 2 * kPi * k / n;
    const double px = e.a() * std::cos(t), py = e.b() * std::sin(t);
    pts.emplace_back(e.x() + px * std::cos(e.theta()) - py * std::sin(e.theta()),
                     e.y() + px * std::sin(e.theta()) + py * std::cos(e.theta()));
  }
  return pts;
}

double containment(const MveeFit& fit, const Point2& p) {
  const Point2 d = p - fit.center;
  return d.dot(fit.shape * d);
}

// Largest (p - c)^T M (p - c) for a candidate shape M; scaling M by its
// inverse makes the candidate enclosing.
double enclosing_area(const Eigen::Matrix2d& m, const Point2& c, const std::vector<Point2>& pts) {
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, (p - c).dot(m * (p - c)));
  return kPi * worst / std::sqrt(m.determinant());
}

}  // namespace

TEST(Mvee, SquareCornersGiveCircle) {
  const std::vector<Point2> pts{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  const MveeFit fit = mvee_fit(pts);
  EXPECT_NEAR(fit.ellipse.x(), 0.0, 1e-9);
  EXPECT_NEAR(fit.ellipse.y(), 0.0, 1e-9);
  EXPECT_NEAR(fit.ellipse.a(), std::sqrt(2.0), 1e-5);
  EXPECT_NEAR(fit.ellipse.b(), std::sqrt(2.0), 1e-5);
  EXPECT_EQ(fit.ellipse.theta(), 0.0);
}

TEST(Mvee, RecoversSampledEllipse) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pos(-50, 50), axis(2, 40), ratio(0.2, 0.9),
      ang(-kPi / 2, kPi / 2), phase(0, 1);
  for (int i = 0; i < 50; ++i) {
    const double a = axis(rng);
    const Ellipse e(pos(rng), pos(rng), a, a * ratio(rng), ang(rng));
    const MveeFit fit = mvee_fit(boundary_samples(e, 200, phase(rng)));
    EXPECT_NEAR(fit.ellipse.a(), e.a(), 1e-3 * e.a());
    EXPECT_NEAR(fit.ellipse.b(), e.b(), 1e-3 * e.b());
    EXPECT_NEAR(std::abs(std::remainder(fit.ellipse.theta() - e.theta(), kPi)), 0.0, 1e-3);
    EXPECT_NEAR(fit.ellipse.x(), e.x(), 1e-3 * e.a());
  }
}

TEST(Mvee, ContainsAllPoints) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 1);
  const double tol = 1e-7;
  for (int i = 0; i < 50; ++i) {
    std::vector<Point2> pts;
    const int n = 5 + i * 4;
    for (int k = 0; k < n; ++k) pts.emplace_back(3 * g(rng) + 10, g(rng) - 4);
    const MveeFit fit = mvee_fit(pts, tol);
    EXPECT_LE(fit.max_containment, 1 + tol);
    for (const auto& p : pts) EXPECT_LE(containment(fit, p), 1 + tol);
  }
}

TEST(Mvee, NoSmallerThanRandomEnclosingEllipses) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-5, 5), ang(-kPi / 2, kPi / 2), ax(0.2, 3);
  for (int i = 0; i < 20; ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < 8; ++k) pts.emplace_back(u(rng), u(rng));
    const MveeFit fit = mvee_fit(pts);
    const double fitted = fit.ellipse.area();
    for (int trial = 0; trial < 100; ++trial) {
      const double t = ang(rng);
      Eigen::Matrix2d rot;
      rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
      const Eigen::Matrix2d m = rot * Eigen::Vector2d(ax(rng), ax(rng)).asDiagonal() * rot.transpose();
      const Point2 c = fit.center + Point2(u(rng), u(rng)) * 0.3;
      EXPECT_LE(fitted, enclosing_area(m, c, pts) * (1 + 1e-9));
    }
  }
}

TEST(Mvee, WithinToleranceOfGridSearchOnFivePoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  const double tol = 1e-7;
  for (int i = 0; i < 5; ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < 5; ++k) pts.emplace_back(u(rng), u(rng));
    const MveeFit fit = mvee_fit(pts, tol);
    // Coarse-to-fine search over (center, shape) around the fitted solution.
    double best = enclosing_area(fit.shape, fit.center, pts);
    Eigen::Matrix2d m = fit.shape;
    Point2 c = fit.center;
    for (double step : {0.05, 0.01, 0.002, 0.0004}) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int dim = 0; dim < 5; ++dim) {
          for (double sgn : {-1.0, 1.0}) {
            Eigen::Matrix2d m2 = m;
            Point2 c2 = c;
            if (dim == 0) c2.x() += sgn * step;
            if (dim == 1) c2.y() += sgn * step;
            if (dim == 2) m2(0, 0) *= 1 + sgn * step;
            if (dim == 3) m2(1, 1) *= 1 + sgn * step;
            if (dim == 4) m2(0, 1) = m2(1, 0) = m2(0, 1) + sgn * step * std::sqrt(m(0, 0) * m(1, 1));
            if (m2.determinant() <= 0 || m2(0, 0) <= 0) continue;
            const double area = enclosing_area(m2, c2, pts);
            if (area < best * (1 - 1e-12)) {
              best = area, m = m2, c = c2, improved = true;
            }
          }
        }
      }
    }
    EXPECT_LE(fit.ellipse.area(), std::pow(1 + 2 * tol, 2) * best);
  }
}

TEST(Mvee, AffineEquivariance) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 20; ++i) {
    std::vector<Point2> pts;
    for (int k = 0; k < 12; ++k) pts.emplace_back(u(rng), u(rng));
    Eigen::Matrix2d t;
    do {
      t << u(rng), u(rng), u(rng), u(rng);
    } while (std::abs(t.determinant()) < 0.5);
    const Point2 shift(u(rng) * 10, u(rng) * 10);
    std::vector<Point2> moved;
    for (const auto& p : pts) moved.push_back(t * p + shift);
    const MveeFit base = mvee_fit(pts, 1e-9, 5000);
    const MveeFit image = mvee_fit(moved, 1e-9, 5000);
    // Compare supports: the transformed base shape is T^-T A T^-1.
    const Eigen::Matrix2d ti = t.inverse();
    const Eigen::Matrix2d expected_shape = ti.transpose() * base.shape * ti;
    const Point2 expected_center = t * base.center + shift;
    EXPECT_NEAR((image.center - expected_center).norm(), 0.0, 1e-5 * (1 + expected_center.norm()));
    EXPECT_NEAR((image.shape - expected_shape).norm() / expected_shape.norm(), 0.0, 1e-5);
  }
}

TEST(Mvee, DegenerateInputs) {
  EXPECT_THROW(mvee_fit(std::vector<Point2>{{0, 0}, {1, 1}}), DegenerateInput);
  EXPECT_THROW(mvee_fit(std::vector<Point2>{{0, 0}, {1, 1}, {2, 2}, {3, 3}}), DegenerateInput);
  EXPECT_THROW(mvee_fit(std::vector<Point2>{{0, 0}, {1, std::nan("")}, {2, 0}}), DegenerateInput);
}

TEST(Mvee, ReportsNonConvergence) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  std::vector<Point2> pts;
  for (int k = 0; k < 300; ++k) pts.emplace_back(g(rng), 2 * g(rng));
  try {
    mvee_fit(pts, 1e-9, 3);
    FAIL() << "expected ConvergenceFailure";
  } catch (const ConvergenceFailure& err) {
    EXPECT_EQ(err.iterations(), 3);
    EXPECT_GT(err.residual(), 0.0);
  }
}

TEST(MaskToPoints, FullGridBoundary) {
  const GridSpec grid{0, 0, 1, 6, 4};
  const std::vector<Point2> pts = mask_to_points(Mask(6, 4, true), grid);
  EXPECT_EQ(pts.size(), 2u * 6 + 2u * 2);
  for (const auto& p : pts) {
    const bool edge = p.x() == 0.5 || p.x() == 5.5 || p.y() == 0.5 || p.y() == 3.5;
    EXPECT_TRUE(edge);
  }
}

TEST(MaskToPoints, CircleBoundaryWithinOneCell) {
  const double cell = 0.1;
  const GridSpec grid{-6, -6, cell, 120, 120};
  const Ellipse circle(0.03, -0.02, 4.0, 4.0, 0.0);
  const std::vector<Point2> pts = mask_to_points(rasterize(circle, grid), grid);
  ASSERT_FALSE(pts.empty());
  for (const auto& p : pts) {
    EXPECT_LE(std::abs((p - Point2(0.03, -0.02)).norm() - 4.0), cell * std::sqrt(2.0));
  }
  const MveeFit fit_state = mvee_fit(pts);
  EXPECT_LT(fit_state.iterations, 200);
  const Ellipse& fit = fit_state.ellipse;
  EXPECT_NEAR(fit.a(), 4.0, 2 * cell);
  EXPECT_NEAR(fit.b(), 4.0, 2 * cell);
  EXPECT_THROW(mask_to_points(Mask(5, 5), GridSpec{0, 0, 1, 5, 5}), DegenerateInput);
}
