#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "arpps/camera.hpp"
#include "arpps/pipe_model.hpp"
#include "arpps/pose_tracker.hpp"
#include "arpps/spatial_store.hpp"

namespace arpps::overlay {

enum class TrenchMode { RectangularAllSight, CircularFrontSight180 };

const char* to_string(TrenchMode m) noexcept;
std::optional<TrenchMode> parse_trench_mode(std::string_view s) noexcept;

/// Virtual excavation. `size` is the square side (rectangular) or the
/// sector radius (circular). Unset depth resolves to the deepest queried
/// pipe plus one meter; unset ground elevation to the nearest queried pipe
/// point's ground elevation, else camera altitude minus 1.5 m.
struct TrenchSpec {
  TrenchMode mode = TrenchMode::RectangularAllSight;
  double size = 4.0;
  std::optional<double> depth;
  std::optional<double> ground_elevation;
  int arc_segments = 16;

  void validate() const;
};

struct Face {
  enum class Role { Wall, Floor, GroundMask };
  Role role = Role::Wall;
  std::vector<Eigen::Vector3d> vertices;  // ENU, polygon order
};

/// Trench faces in the ENU frame whose origin is the pose position at zero
/// altitude (so u is absolute elevation). Depth and ground elevation must be
/// resolved.
std::vector<Face> build_trench(const TrenchSpec& spec, const track::TrackedPose& pose);

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0;
  double a = 1.0;

  bool operator==(const Rgba&) const = default;
};

/// Fixed colour per category, indexed by pipe::index_of.
const std::array<Rgba, pipe::kCategoryCount>& palette() noexcept;

enum class PrimitiveKind { TrenchWall, TrenchFloor, GroundMask, PipeTube, PipePointMarker };
const char* to_string(PrimitiveKind k) noexcept;

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::TrenchWall;
  std::optional<store::FeatureId> feature;
  std::optional<pipe::PipeCategory> category;
  /// Pipes: projected centreline endpoints. Markers: the lid point.
  /// Trench faces: the clipped, projected polygon.
  std::vector<Eigen::Vector2d> vertices;
  /// Pipes: convex outline of the tessellated tube.
  std::vector<Eigen::Vector2d> outline;
  double depth_key = 0.0;  // mean camera-frame depth
  Rgba color;
  bool clipped = false;  // some geometry was cut by the near plane or viewport
  bool culled = false;   // entirely behind the camera, nothing to draw

  bool operator==(const Primitive&) const = default;
};

struct Viewport {
  int width = 1280;
  int height = 720;
  bool operator==(const Viewport&) const = default;
};

struct RenderOptions {
  int tube_sides = 8;
  double near_plane = 0.05;  // meters
};

struct OverlayFrame {
  double timestamp = 0.0;
  Viewport viewport;
  cam::CameraIntrinsics intrinsics;
  geo::GeoPoint camera_position;
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  TrenchSpec trench;  // resolved
  /// Back to front: depth_key non-increasing.
  std::vector<Primitive> primitives;
};

/// World (ENU about the pose, u absolute) to camera transform for a tracked
/// body pose. The camera looks along body x with image y pointing down body z.
cam::Pose camera_pose(const track::TrackedPose& pose);

/// ENU position of a geographic point in the frame used by render_frame.
Eigen::Vector3d enu_of(const track::TrackedPose& pose, double lon, double lat, double elevation);

OverlayFrame render_frame(const store::SpatialStore& store, const track::TrackedPose& pose,
                          const cam::CameraIntrinsics& k, const TrenchSpec& trench,
                          const Viewport& viewport, const RenderOptions& options = {});

/// Canonical JSON with sorted keys; byte-stable through parse_frame.
std::string serialize_frame(const OverlayFrame& frame);
/// Throws Error(Data) on a malformed document.
OverlayFrame parse_frame(const std::string& json_text);
std::string frame_to_svg(const OverlayFrame& frame);

}  // namespace arpps::overlay
