#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "arpps/geodesy.hpp"
#include "arpps/sensor_filter.hpp"

namespace arpps::track {

// Body frame: x forward (camera axis when level), y left, z up.
// Orientation quaternions rotate body vectors into ENU.

struct SensorFrame {
  double timestamp = 0.0;
  filter::Vec3 accel;            // specific force, m/s^2, body frame
  filter::Vec3 gyro;             // body rates, rad/s
  double compass_heading = 0.0;  // degrees clockwise from north, [0, 360)
  std::optional<geo::GeoPoint> gps;
};

struct PoseSample {
  double timestamp = 0.0;
  geo::GeoPoint position;
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct TrackedPose {
  double timestamp = 0.0;
  geo::GeoPoint position;
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  geo::BBox load_bbox;
};

enum class MotionProfile { Stationary, ConstantRotation, WalkPath };

const char* to_string(MotionProfile p) noexcept;
std::optional<MotionProfile> parse_motion_profile(std::string_view s) noexcept;

struct NoiseSpec {
  double gyro = 0.0;     // rad/s per axis
  double accel = 0.0;    // m/s^2 per axis
  double compass = 0.0;  // degrees
  double gps = 0.0;      // meters per horizontal axis
};

struct TrajectorySpec {
  std::uint64_t seed = 1;
  double duration = 1.0;  // s
  double rate = 100.0;    // Hz
  MotionProfile profile = MotionProfile::Stationary;
  NoiseSpec noise;
  geo::GeoPoint origin{120.4, 36.1, 11.5};
  double initial_heading = 0.0;  // degrees clockwise from north
  double yaw_rate = 1.5707963267948966;  // rad/s, constant-rotation profile
  double walk_speed = 1.4;       // m/s, walk-path profile
  double gps_rate = 1.0;         // Hz; 0 gives a single fix at t = 0

  /// Throws InvalidArgument on non-positive duration or rate.
  void validate() const;
};

struct Trajectory {
  std::vector<PoseSample> truth;
  std::vector<SensorFrame> frames;
};

inline constexpr double kGravity = 9.80665;

/// Ground truth plus sensor readings with seeded Gaussian noise. Frames are
/// at t = k / rate for k = 0 .. round(duration * rate).
Trajectory simulate_trajectory(const TrajectorySpec& spec);

struct TrackerConfig {
  filter::FilterParams gyro{0.05, 0.5};
  filter::FilterParams accel{1.0, 2.0};
  filter::FilterParams compass{2.0, 10.0};  // degrees
  bool filtering = true;
  double heading_blend = 0.02;
  double tilt_blend = 0.02;
  double load_radius = 10.0;  // m
};

/// Filters each channel, integrates gyro rates, blends toward compass
/// heading and accelerometer tilt (less the centripetal term from GPS ground
/// speed), holds the latest GPS fix. Frames before
/// the first fix use that first fix. Throws InvalidArgument for an empty
/// stream, a stream without any fix, or non-increasing timestamps.
std::vector<TrackedPose> track(const std::vector<SensorFrame>& frames, const TrackerConfig& config);

struct ErrorReport {
  std::vector<double> angular_deg;
  std::vector<double> position_m;
  double angular_rms = 0.0;
  double angular_max = 0.0;
  double position_rms = 0.0;
  double position_max = 0.0;
};

/// Throws InvalidArgument when the sequences differ in length.
ErrorReport tracking_error(const std::vector<PoseSample>& truth,
                           const std::vector<TrackedPose>& tracked);

/// Geodesic angle between two orientations, degrees.
double angular_distance_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);
/// Counter-clockwise angle of the body x axis from east, degrees.
double yaw_deg(const Eigen::Quaterniond& q);
/// RMS of the angle between consecutive orientations, degrees.
double orientation_jitter_rms(const std::vector<TrackedPose>& poses);

Eigen::Quaterniond from_yaw_pitch_roll(double yaw_rad, double pitch_rad, double roll_rad);

/// Replay files: accel/gyro as `timestamp,x,y,z`, compass as
/// `timestamp,x,y,z` with the heading in x, and a `timestamp,lon,lat` GPS
/// sidecar.
struct StreamFiles {
  std::string accel;
  std::string gyro;
  std::string compass;
  std::string gps;
};
StreamFiles write_streams(const std::vector<SensorFrame>& frames);
std::vector<SensorFrame> read_streams(const StreamFiles& files);

}  // namespace arpps::track
