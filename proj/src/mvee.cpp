#include "ellipsekit/mvee.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "ellipsekit/errors.hpp"

namespace ellipsekit {
namespace {

constexpr int kDim = 2;

void check_spread(std::span<const Point2> points) {
  if (points.size() < 3) throw DegenerateInput("MVEE needs at least three points");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) {
    if (!p.allFinite()) throw DegenerateInput("MVEE input contains non-finite points");
    mean += p;
  }
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  if (!(ev(1) > 0.0) || ev(0) <= 1e-12 * ev(1)) {
    throw DegenerateInput("MVEE input points are collinear or coincident");
  }
}

// Convex hull vertices (Andrew's monotone chain); the enclosing ellipse
// depends on the hull only, and interior points slow the iteration down.
std::vector<Point2> hull_vertices(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Khachiyan's ascent stalls on smooth or rasterized outlines, where many
// points are nearly tied for the support. Below this containment it hands
// over to the barrier polish.
constexpr double kPolishSwitch = 1e-2;

struct Enclosing {
  Eigen::Matrix2d shape;
  Eigen::Vector2d center;
};

using Vector5d = Eigen::Matrix<double, 5, 1>;
using Matrix5d = Eigen::Matrix<double, 5, 5>;

// Log-barrier Newton method for
//   min -log det M  s.t. |M p_i - b| <= 1,  M symmetric,
// over z = (m11, m12, m22, b1, b2). The ellipse is {p : |M p - b| <= 1}.
class BarrierPolish {
 public:
  explicit BarrierPolish(const Eigen::Matrix2Xd& pts) : pts_(pts) {}

  Enclosing run(const Enclosing& start, double tol, int budget, int& steps) const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < pts_.cols(); ++i) {
      const Eigen::Vector2d d = pts_.col(i) - start.center;
      worst = std::max(worst, d.dot(start.shape * d));
    }
    const Eigen::Matrix2d a = start.shape / (worst * (1.0 + 1e-3));
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
    const Eigen::Matrix2d root =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const Eigen::Vector2d b = root * start.center;
    Vector5d z;
    z << root(0, 0), root(0, 1), root(1, 1), b.x(), b.y();

    const double constraints = static_cast<double>(pts_.cols());
    const double gap_goal = 0.5 * std::log1p(tol);
    double t = constraints / kPolishSwitch;
    for (;;) {
      center(z, t, budget, steps);
      if (constraints / t <= gap_goal) break;
      t *= 10.0;
    }
    Eigen::Matrix2d m;
    m << z(0), z(1), z(1), z(2);
    return {m * m, m.inverse() * z.tail<2>()};
  }

 private:
  bool feasible(const Vector5d& z) const {
    if (!(z(0) > 0.0) || !(z(0) * z(2) - z(1) * z(1) > 0.0)) return false;
    for (Eigen::Index i = 0; i < pts_.cols(); ++i) {
      if (!(residual(z, pts_.col(i)).squaredNorm() < 1.0)) return false;
    }
    return true;
  }

  static Eigen::Vector2d residual(const Vector5d& z, const Eigen::Vector2d& p) {
    return {z(0) * p.x() + z(1) * p.y() - z(3), z(1) * p.x() + z(2) * p.y() - z(4)};
  }

  void center(Vector5d& z, double t, int budget, int& steps) const {
    for (;;) {
      Eigen::Matrix2d m;
      m << z(0), z(1), z(1), z(2);
      const Eigen::Matrix2d mi = m.inverse();
      // d(-log det M) and its Hessian in the (m11, m12, m22) coordinates.
      Vector5d grad = Vector5d::Zero();
      Matrix5d hess = Matrix5d::Zero();
      grad.head<3>() << -mi(0, 0), -2.0 * mi(0, 1), -mi(1, 1);
      const std::array<Eigen::Matrix2d, 3> basis{
          (Eigen::Matrix2d() << 1, 0, 0, 0).finished(), (Eigen::Matrix2d() << 0, 1, 1, 0).finished(),
          (Eigen::Matrix2d() << 0, 0, 0, 1).finished()};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) hess(r, c) = (mi * basis[r] * mi * basis[c]).trace();
      }
      grad *= t;
      hess *= t;
      for (Eigen::Index i = 0; i < pts_.cols(); ++i) {
        const Eigen::Vector2d p = pts_.col(i);
        const Eigen::Vector2d r = residual(z, p);
        const double g = 1.0 - r.squaredNorm();
        Eigen::Matrix<double, 2, 5> jac;
        jac << p.x(), p.y(), 0.0, -1.0, 0.0, 0.0, p.x(), p.y(), 0.0, -1.0;
        const Vector5d jr = jac.transpose() * r;
        grad += 2.0 * jr / g;
        hess += 2.0 * jac.transpose() * jac / g + 4.0 * jr * jr.transpose() / (g * g);
      }
      const Vector5d step = -hess.ldlt().solve(grad);
      const double decrement = -grad.dot(step);
      if (!(decrement > 1e-6)) return;
      if (++steps > budget) {
        std::ostringstream os;
        os << "MVEE did not converge in " << budget << " iterations (barrier decrement "
           << decrement << ")";
        throw ConvergenceFailure(os.str(), budget, decrement);
      }
      // The objective is self-concordant: the damped step stays feasible and
      // needs no function comparisons, which lose precision as t grows.
      const double lambda = std::sqrt(decrement);
      double s = lambda > 0.25 ? 1.0 / (1.0 + lambda) : 1.0;
      while (!feasible(z + s * step)) {
        s *= 0.5;
        if (s < 1e-12) return;
      }
      z += s * step;
    }
  }

  const Eigen::Matrix2Xd& pts_;
};

}  // namespace

MveeFit mvee_fit(std::span<const Point2> points, double tol, int max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("MVEE tolerance must be positive");
  check_spread(points);
  const std::vector<Point2> hull = hull_vertices(points);
  const auto n = static_cast<Eigen::Index>(hull.size());

  // Work in coordinates centered on the mean and scaled to unit size; both
  // stages are affine invariant and this keeps the solves well scaled.
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  for (const auto& p : hull) origin += p;
  origin /= static_cast<double>(n);
  double scale = 0.0;
  for (const auto& p : hull) scale = std::max(scale, (p - origin).norm());

  Eigen::Matrix2Xd pts(kDim, n);
  for (Eigen::Index i = 0; i < n; ++i) pts.col(i) = (hull[static_cast<std::size_t>(i)] - origin) / scale;
  // Lifted points q_i = (p_i, 1).
  Eigen::Matrix<double, kDim + 1, Eigen::Dynamic> lifted(kDim + 1, n);
  lifted.topRows<kDim>() = pts;
  lifted.row(kDim).setOnes();

  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const double target = kDim * (1.0 + tol) + 1.0;
  const double handover = kDim * (1.0 + kPolishSwitch) + 1.0;
  Eigen::VectorXd m(n);
  int iter = 0;
  double m_max = 0.0;
  for (;; ++iter) {
    const Eigen::Matrix3d x = lifted * u.asDiagonal() * lifted.transpose();
    const Eigen::LDLT<Eigen::Matrix3d> solver(x);
    m = (lifted.array() * solver.solve(lifted).array()).colwise().sum().transpose();
    Eigen::Index j = 0;
    m_max = m.maxCoeff(&j);
    if (m_max <= target || m_max <= handover) break;
    if (iter >= max_iter) {
      std::ostringstream os;
      os << "MVEE did not converge in " << max_iter << " iterations (containment "
         << (m_max - 1.0) / kDim << ")";
      throw ConvergenceFailure(os.str(), iter, (m_max - 1.0) / kDim - 1.0);
    }
    // Harman-Pronzato bound: points below it carry no weight at the optimum.
    const double eps = m_max / (kDim + 1) - 1.0;
    const double keep = (kDim + 1) * (1.0 + eps / 2 - std::sqrt(eps * (4.0 + eps - 4.0 / (kDim + 1))) / 2);
    double dropped = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(i) > 0.0 && m(i) < keep) {
        dropped += u(i);
        u(i) = 0.0;
      }
    }
    if (dropped > 0.0) u /= 1.0 - dropped;

    // Away candidate: the supported point with the smallest M.
    Eigen::Index k = -1;
    double m_min = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(i) > 0.0 && (k < 0 || m(i) < m_min)) {
        k = i;
        m_min = m(i);
      }
    }
    const double forward_gain = m_max - (kDim + 1);
    const double away_gain = (kDim + 1) - m_min;
    if (k >= 0 && away_gain > forward_gain && m_min > 1.0) {
      const double drop = u(k) / (1.0 - u(k));
      const double step = std::min((kDim + 1 - m_min) / ((kDim + 1) * (m_min - 1.0)), drop);
      u *= (1.0 + step);
      u(k) -= step;
      if (step == drop) u(k) = 0.0;
    } else {
      const double step = (m_max - kDim - 1) / ((kDim + 1) * (m_max - 1.0));
      u *= (1.0 - step);
      u(j) += step;
    }
  }

  const Eigen::Vector2d offset = pts * u;
  const Eigen::Matrix2d second = pts * u.asDiagonal() * pts.transpose();
  Enclosing fit{(kDim * (second - offset * offset.transpose())).inverse(), offset};
  if (m_max > target) {
    fit = BarrierPolish(pts).run(fit, tol, max_iter - iter, iter);
  }

  const Eigen::Vector2d center = origin + scale * fit.center;
  const Eigen::Matrix2d shape = fit.shape / (scale * scale);
  Ellipse e = ellipse_from_shape(center.x(), center.y(), shape.inverse());
  if (e.a() - e.b() <= 1e-9 * e.a()) e = Ellipse(e.x(), e.y(), e.a(), e.b(), 0.0);
  double worst = 0.0;
  for (const auto& p : points) {
    worst = std::max(worst, (p - center).dot(shape * (p - center)));
  }
  return {e, center, shape, iter, worst};
}

std::vector<Point2> mask_to_points(const Mask& mask, const GridSpec& grid) {
  if (mask.cols() != grid.cols || mask.rows() != grid.rows) {
    throw InvalidArgument("mask and grid dimensions differ");
  }
  auto filled = [&](int c, int r) {
    return c >= 0 && r >= 0 && c < mask.cols() && r < mask.rows() && mask.at(c, r);
  };
  std::vector<Point2> out;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask.at(c, r)) continue;
      if (!filled(c - 1, r) || !filled(c + 1, r) || !filled(c, r - 1) || !filled(c, r + 1)) {
        out.emplace_back(grid.center_x(c), grid.center_y(r));
      }
    }
  }
  if (out.empty()) throw DegenerateInput("mask has no filled cells");
  return out;
}

}  // namespace ellipsekit
