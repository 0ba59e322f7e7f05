#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace arpps::cam {

/// Zero-skew pinhole intrinsics.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws InvalidArgument unless fx, fy > 0 and all values finite.
  CameraIntrinsics(double fx, double fy, double cx, double cy);
  CameraIntrinsics() = default;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse() const;
};

/// Rigid transform taking world (or reference-camera) coordinates into the
/// camera frame: X_cam = R X + t.
class Pose {
 public:
  Pose();
  /// Throws InvalidArgument unless R'R = I and det R = +1 within 1e-9.
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  const Eigen::Matrix3d& rotation() const noexcept { return r_; }
  const Eigen::Vector3d& translation() const noexcept { return t_; }
  Eigen::Vector3d transform(const Eigen::Vector3d& x) const { return r_ * x + t_; }
  /// Camera centre in world coordinates, -R't.
  Eigen::Vector3d center() const { return -r_.transpose() * t_; }

 private:
  Eigen::Matrix3d r_;
  Eigen::Vector3d t_;
};

/// Throws InvalidArgument unless the matrix is a proper rotation within 1e-9.
void check_rotation(const Eigen::Matrix3d& r);

/// Plane n'X + d = 0 with unit normal.
struct PlaneCoords {
  Eigen::Vector3d n;
  double d = 0.0;

  /// Throws InvalidArgument unless |n| = 1 within 1e-9.
  PlaneCoords(const Eigen::Vector3d& normal, double offset);
};

/// 3x3 projective map, stored normalised so the largest-magnitude entry is +1.
class Homography {
 public:
  /// Normalises; throws InvalidArgument for a singular or non-finite matrix.
  explicit Homography(const Eigen::Matrix3d& h);

  const Eigen::Matrix3d& matrix() const noexcept { return h_; }
  Homography inverse() const;
  Homography operator*(const Homography& other) const;
  /// Largest absolute entry difference after normalisation.
  double distance(const Homography& other) const;

 private:
  Eigen::Matrix3d h_;
};

/// Scales h so that its largest-magnitude entry becomes +1.
Eigen::Matrix3d normalize(const Eigen::Matrix3d& h);

/// Pixel of world point X. Throws InvalidArgument when the camera-frame
/// depth is not positive.
Eigen::Vector2d project(const CameraIntrinsics& k, const Pose& pose, const Eigen::Vector3d& x);

/// Unit ray direction (world frame) through a pixel.
Eigen::Vector3d back_project(const CameraIntrinsics& k, const Pose& pose, const Eigen::Vector2d& px);

/// Homography induced by a plane: H = K_i (R - t n'/d) K_j^-1, where
/// (R, t) maps camera-j coordinates into camera-i and the plane is in the
/// camera-j frame. Maps pixels of camera j to pixels of camera i. Throws
/// InvalidArgument when d = 0.
Homography plane_homography(const CameraIntrinsics& k_i, const CameraIntrinsics& k_j,
                            const Pose& relative, const PlaneCoords& plane);

/// Homography of a camera rotating about its centre: H = K_i R_i R_j' K_j^-1.
Homography rotation_homography(const CameraIntrinsics& k_i, const CameraIntrinsics& k_j,
                               const Eigen::Matrix3d& r_i, const Eigen::Matrix3d& r_j);

/// Throws InvalidArgument when the point maps to infinity.
Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& px);

}  // namespace arpps::cam
