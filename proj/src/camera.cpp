#include "arpps/camera.hpp"

#include <cmath>

#include <Eigen/LU>

#include "arpps/error.hpp"

namespace arpps::cam {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  require(std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0,
          "intrinsics: focal lengths must be positive");
  require(std::isfinite(cx) && std::isfinite(cy), "intrinsics: principal point not finite");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d CameraIntrinsics::inverse() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

void check_rotation(const Eigen::Matrix3d& r) {
  require(r.allFinite(), "rotation: non-finite entries");
  require((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9,
          "rotation: R'R differs from identity");
  require(std::abs(r.determinant() - 1.0) <= 1e-9, "rotation: det R differs from +1");
}

Pose::Pose() : r_(Eigen::Matrix3d::Identity()), t_(Eigen::Vector3d::Zero()) {}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : r_(rotation), t_(translation) {
  check_rotation(r_);
  require(t_.allFinite(), "pose: translation not finite");
}

PlaneCoords::PlaneCoords(const Eigen::Vector3d& normal, double offset) : n(normal), d(offset) {
  require(n.allFinite() && std::isfinite(d), "plane: non-finite coordinates");
  require(std::abs(n.norm() - 1.0) <= 1e-9, "plane: normal must be unit length");
}

Eigen::Matrix3d normalize(const Eigen::Matrix3d& h) {
  Eigen::Index r = 0, c = 0;
  h.cwiseAbs().maxCoeff(&r, &c);
  return h / h(r, c);
}

Homography::Homography(const Eigen::Matrix3d& h) {
  require(h.allFinite(), "homography: non-finite entries");
  const double scale = h.cwiseAbs().maxCoeff();
  require(scale > 0.0, "homography: zero matrix");
  h_ = normalize(h);
  require(std::abs(h_.determinant()) > 1e-15, "homography: singular matrix");
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Homography Homography::operator*(const Homography& other) const {
  return Homography(h_ * other.h_);
}

double Homography::distance(const Homography& other) const {
  return (h_ - other.h_).cwiseAbs().maxCoeff();
}

Eigen::Vector2d project(const CameraIntrinsics& k, const Pose& pose, const Eigen::Vector3d& x) {
  const Eigen::Vector3d xc = pose.transform(x);
  if (!(xc.z() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "project: point is not in front of the camera");
  }
  return {k.fx * xc.x() / xc.z() + k.cx, k.fy * xc.y() / xc.z() + k.cy};
}

Eigen::Vector3d back_project(const CameraIntrinsics& k, const Pose& pose,
                             const Eigen::Vector2d& px) {
  const Eigen::Vector3d ray_cam = k.inverse() * Eigen::Vector3d(px.x(), px.y(), 1.0);
  return (pose.rotation().transpose() * ray_cam).normalized();
}

Homography plane_homography(const CameraIntrinsics& k_i, const CameraIntrinsics& k_j,
                            const Pose& relative, const PlaneCoords& plane) {
  require(plane.d != 0.0, "plane_homography: plane passes through the camera centre (d = 0)");
  const Eigen::Matrix3d m =
      relative.rotation() - relative.translation() * plane.n.transpose() / plane.d;
  return Homography(k_i.matrix() * m * k_j.inverse());
}

Homography rotation_homography(const CameraIntrinsics& k_i, const CameraIntrinsics& k_j,
                               const Eigen::Matrix3d& r_i, const Eigen::Matrix3d& r_j) {
  check_rotation(r_i);
  check_rotation(r_j);
  return Homography(k_i.matrix() * r_i * r_j.transpose() * k_j.inverse());
}

Eigen::Vector2d apply_homography(const Homography& h, const Eigen::Vector2d& px) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(px.x(), px.y(), 1.0);
  // The matrix is normalised to unit max entry, so this threshold is scale-free.
  if (std::abs(q.z()) <= 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "apply_homography: point maps to infinity");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace arpps::cam
