#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "ellipsekit/geometry.hpp"

namespace ellipsekit {

using Matrix34d = Eigen::Matrix<double, 3, 4>;

/// Rank-3 projection from homogeneous world points to homogeneous image points.
class CameraMatrix {
 public:
  explicit CameraMatrix(const Matrix34d& p);

  const Matrix34d& p() const { return p_; }

  /// Signed depth of a world point; positive in front of the camera.
  double depth(const Eigen::Vector3d& point) const;

 private:
  Matrix34d p_;
};

/// Pinhole camera with square pixels at `eye` looking at `target`. Image x
/// points right and image y points down.
CameraMatrix look_at_camera(double focal, double cx, double cy, const Eigen::Vector3d& eye,
                            const Eigen::Vector3d& target,
                            const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

struct DualQuadric {
  Eigen::Matrix4d q;
};

struct DualConic {
  Eigen::Matrix3d c;
};

/// Ellipsoid pose and size. Decomposition always returns semi-axes sorted in
/// descending order and a proper rotation whose columns are the axis directions.
struct EllipsoidPose {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// Q* = T diag(s1^2, s2^2, s3^2, -1) T^T with T = [[R, t], [0, 1]].
DualQuadric ellipsoid_to_quadric(const EllipsoidPose& pose);

/// Normalizes q(3,3) to -1, reads the center from the last column and
/// eigendecomposes the shape block. Throws NotAnEllipsoid when the shape is
/// not positive definite.
EllipsoidPose decompose_quadric(const DualQuadric& q);

/// Dual conic image C* = P Q* P^T.
DualConic project_dual(const DualQuadric& q, const CameraMatrix& cam);

/// Image ellipse of the ellipsoid. Throws BehindCamera when the center is
/// not in front of the camera and NotAnEllipse when the outline is not an
/// ellipse (e.g. the ellipsoid crosses the principal plane).
Ellipse project(const DualQuadric& q, const CameraMatrix& cam);

struct View {
  CameraMatrix camera;
  Ellipse ellipse;
};

/// Threshold on sigma_{n-2} / sigma_max below which the reconstruction
/// nullspace is considered more than one-dimensional.
inline constexpr double kMinSingularGap = 1e-9;

/// Linear multi-view reconstruction of the dual quadric from at least three
/// ellipse observations. Per-view scale factors are solved jointly with the
/// ten quadric parameters as the nullspace of one homogeneous system.
/// Throws InvalidArgument for fewer than three views and IllConditioned when
/// the system has no unique nullspace.
DualQuadric reconstruct(std::span<const View> views);

struct PoseErrors {
  double rotation_deg = 0.0;
  double position = 0.0;
  double relative_size = 0.0;
};

/// Rotation error is the smallest geodesic angle over the ellipsoid's
/// symmetry rotations; axes within 1% of each other may also be exchanged.
PoseErrors pose_errors(const EllipsoidPose& est, const EllipsoidPose& gt);

/// Geodesic angle between two rotations, in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2);

}  // namespace ellipsekit
