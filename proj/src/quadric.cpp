#include "ellipsekit/quadric.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ellipsekit/errors.hpp"

namespace ellipsekit {
namespace {

// Upper-triangle index pairs of a symmetric 4x4 matrix.
constexpr std::array<std::array<int, 2>, 10> kQuadricParams{{
    {0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 2}, {2, 3}, {3, 3}}};

// Upper-triangle index pairs of a symmetric 3x3 matrix.
constexpr std::array<std::array<int, 2>, 6> kConicEntries{{
    {0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

Eigen::Matrix3d hartley_transform(std::span<const View> views) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& v : views) mean += Eigen::Vector2d(v.ellipse.x(), v.ellipse.y());
  mean /= static_cast<double>(views.size());
  double spread = 0.0;
  for (const auto& v : views) {
    const Eigen::Vector2d c(v.ellipse.x(), v.ellipse.y());
    const double a = v.ellipse.a();
    const double b = v.ellipse.b();
    spread += (c - mean).squaredNorm() + 0.5 * (a * a + b * b);
  }
  const double scale = std::sqrt(2.0) / std::sqrt(spread / static_cast<double>(views.size()));
  Eigen::Matrix3d t;
  t << scale, 0.0, -scale * mean.x(), 0.0, scale, -scale * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

}  // namespace

CameraMatrix::CameraMatrix(const Matrix34d& p) : p_(p) {
  if (!p.allFinite()) throw InvalidArgument("camera matrix has non-finite entries");
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> gram(p * p.transpose(),
                                                            Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = gram.eigenvalues();
  if (!(ev(0) > 1e-24 * ev(2))) throw InvalidArgument("camera matrix must have rank 3");
}

double CameraMatrix::depth(const Eigen::Vector3d& point) const {
  const double w = p_.row(2).head<3>().dot(point) + p_(2, 3);
  const double sign = p_.leftCols<3>().determinant() >= 0.0 ? 1.0 : -1.0;
  return sign * w;
}

CameraMatrix look_at_camera(double focal, double cx, double cy, const Eigen::Vector3d& eye,
                            const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d down = (forward * forward.dot(up) - up).normalized();
  const Eigen::Vector3d right = down.cross(forward);
  Eigen::Matrix3d rot;
  rot.row(0) = right.transpose();
  rot.row(1) = down.transpose();
  rot.row(2) = forward.transpose();
  Eigen::Matrix3d k;
  k << focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0;
  Matrix34d rt;
  rt.leftCols<3>() = rot;
  rt.col(3) = -rot * eye;
  return CameraMatrix(k * rt);
}

DualQuadric ellipsoid_to_quadric(const EllipsoidPose& pose) {
  if (!(pose.semi_axes.array() > 0.0).all()) {
    throw InvalidArgument("ellipsoid semi-axes must be positive");
  }
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = pose.rotation;
  t.topRightCorner<3, 1>() = pose.center;
  Eigen::Vector4d d;
  d << pose.semi_axes.array().square(), -1.0;
  DualQuadric out{t * d.asDiagonal() * t.transpose()};
  out.q = 0.5 * (out.q + out.q.transpose());
  return out;
}

EllipsoidPose decompose_quadric(const DualQuadric& dual) {
  Eigen::Matrix4d q = 0.5 * (dual.q + dual.q.transpose());
  if (!q.allFinite()) throw NotAnEllipsoid("quadric has non-finite entries");
  if (!(q(3, 3) != 0.0)) throw NotAnEllipsoid("quadric has no finite center");
  q /= -q(3, 3);
  EllipsoidPose pose;
  pose.center = -q.topRightCorner<3, 1>();
  const Eigen::Matrix3d shape = q.topLeftCorner<3, 3>() + pose.center * pose.center.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(shape);
  const Eigen::Vector3d ev = eig.eigenvalues();
  if (!(ev(0) > 0.0)) throw NotAnEllipsoid("quadric shape matrix is not positive definite");
  for (int i = 0; i < 3; ++i) {
    pose.semi_axes(i) = std::sqrt(ev(2 - i));
    pose.rotation.col(i) = eig.eigenvectors().col(2 - i);
  }
  if (pose.rotation.determinant() < 0.0) pose.rotation.col(2) *= -1.0;
  return pose;
}

DualConic project_dual(const DualQuadric& q, const CameraMatrix& cam) {
  DualConic out{cam.p() * q.q * cam.p().transpose()};
  out.c = 0.5 * (out.c + out.c.transpose());
  return out;
}

Ellipse project(const DualQuadric& q, const CameraMatrix& cam) {
  const Eigen::Matrix4d& m = q.q;
  if (!(m(3, 3) != 0.0)) throw NotAnEllipse("quadric has no finite center");
  const Eigen::Vector3d center = m.topRightCorner<3, 1>() / m(3, 3);
  if (!(cam.depth(center) > 0.0)) throw BehindCamera("ellipsoid center is behind the camera");
  return dual_conic_to_ellipse(project_dual(q, cam).c);
}

DualQuadric reconstruct(std::span<const View> views) {
  if (views.size() < 3) throw InvalidArgument("reconstruction needs at least three views");
  const Eigen::Matrix3d norm = hartley_transform(views);
  const auto k_views = static_cast<Eigen::Index>(views.size());
  const Eigen::Index cols = 10 + k_views;
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(6 * k_views, cols);
  const double off_diag_weight = std::sqrt(2.0);

  for (Eigen::Index v = 0; v < k_views; ++v) {
    Matrix34d p = norm * views[v].camera.p();
    p /= p.norm();
    Eigen::Matrix3d c = norm * ellipse_to_dual_conic(views[v].ellipse) * norm.transpose();
    c /= c.norm();
    for (std::size_t r = 0; r < kConicEntries.size(); ++r) {
      const int i = kConicEntries[r][0];
      const int j = kConicEntries[r][1];
      const double w = i == j ? 1.0 : off_diag_weight;
      const Eigen::Index row = 6 * v + static_cast<Eigen::Index>(r);
      for (std::size_t col = 0; col < kQuadricParams.size(); ++col) {
        const int k = kQuadricParams[col][0];
        const int l = kQuadricParams[col][1];
        const double coef = k == l ? p(i, k) * p(j, k) : p(i, k) * p(j, l) + p(i, l) * p(j, k);
        system(row, static_cast<Eigen::Index>(col)) = w * coef;
      }
      system(row, 10 + v) = -w * c(i, j);
    }
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double gap = sv(cols - 2) / sv(0);
  if (!(gap > kMinSingularGap)) {
    std::ostringstream os;
    os << "reconstruction system is rank deficient (singular value gap " << gap << ")";
    throw IllConditioned(os.str(), gap);
  }
  const Eigen::VectorXd x = svd.matrixV().col(cols - 1);
  DualQuadric out{Eigen::Matrix4d::Zero()};
  for (std::size_t col = 0; col < kQuadricParams.size(); ++col) {
    const int k = kQuadricParams[col][0];
    const int l = kQuadricParams[col][1];
    out.q(k, l) = x(static_cast<Eigen::Index>(col));
    out.q(l, k) = x(static_cast<Eigen::Index>(col));
  }
  return out;
}

double rotation_angle_deg(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  // 2 asin(|R1 - R2|_F / sqrt(8)) is accurate near zero, unlike acos of the trace.
  const double chord = (r1 - r2).norm() / std::sqrt(8.0);
  return 2.0 * std::asin(std::min(1.0, chord)) * 180.0 / kPi;
}

PoseErrors pose_errors(const EllipsoidPose& est, const EllipsoidPose& gt) {
  PoseErrors out;
  out.position = (est.center - gt.center).norm();
  double size = 0.0;
  for (int i = 0; i < 3; ++i) size += std::abs(est.semi_axes(i) - gt.semi_axes(i)) / gt.semi_axes(i);
  out.relative_size = size / 3.0;

  auto interchangeable = [&](int i, int j) {
    const double si = gt.semi_axes(i);
    const double sj = gt.semi_axes(j);
    return i == j || std::abs(si - sj) <= 0.01 * std::max(si, sj);
  };
  std::array<int, 3> perm{0, 1, 2};
  double best = 180.0;
  do {
    if (!interchangeable(0, perm[0]) || !interchangeable(1, perm[1]) ||
        !interchangeable(2, perm[2])) {
      continue;
    }
    for (int signs = 0; signs < 8; ++signs) {
      Eigen::Matrix3d sym = Eigen::Matrix3d::Zero();
      for (int i = 0; i < 3; ++i) sym(perm[i], i) = (signs >> i) & 1 ? -1.0 : 1.0;
      if (sym.determinant() < 0.0) continue;
      best = std::min(best, rotation_angle_deg(est.rotation, gt.rotation * sym));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  out.rotation_deg = best;
  return out;
}

}  // namespace ellipsekit
