#include "arpps/pose_tracker.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "arpps/error.hpp"
#include "arpps/rng.hpp"
#include "csv.hpp"

namespace arpps::track {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = 180.0 / kPi;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

double wrap360(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

// Into [-180, 180).
double wrap180(double deg) {
  double h = std::fmod(deg + 180.0, 360.0);
  if (h < 0.0) h += 360.0;
  return h - 180.0;
}

Eigen::Vector3d to_eigen(const filter::Vec3& v) { return {v.x, v.y, v.z}; }

double heading_from_yaw(double yaw_deg_ccw) { return wrap360(90.0 - yaw_deg_ccw); }

constexpr double kSpeedTimeConstant = 2.0;  // s

// Walk-path yaw rate and its integral.
constexpr double kWalkTurnAmp = 0.3;      // rad/s
constexpr double kWalkTurnPeriod = 20.0;  // s

double walk_yaw_rate(double t) { return kWalkTurnAmp * std::sin(2.0 * kPi * t / kWalkTurnPeriod); }
double walk_yaw_offset(double t) {
  return kWalkTurnAmp * kWalkTurnPeriod / (2.0 * kPi) * (1.0 - std::cos(2.0 * kPi * t / kWalkTurnPeriod));
}

}  // namespace

const char* to_string(MotionProfile p) noexcept {
  switch (p) {
    case MotionProfile::ConstantRotation:
      return "constant-rotation";
    case MotionProfile::WalkPath:
      return "walk-path";
    default:
      return "stationary";
  }
}

std::optional<MotionProfile> parse_motion_profile(std::string_view s) noexcept {
  if (s == "stationary") return MotionProfile::Stationary;
  if (s == "constant-rotation") return MotionProfile::ConstantRotation;
  if (s == "walk-path") return MotionProfile::WalkPath;
  return std::nullopt;
}

void TrajectorySpec::validate() const {
  require(std::isfinite(duration) && duration > 0.0, "trajectory: duration must be > 0");
  require(std::isfinite(rate) && rate > 0.0, "trajectory: rate must be > 0");
  require(std::isfinite(gps_rate) && gps_rate >= 0.0, "trajectory: gps_rate must be >= 0");
  require(noise.gyro >= 0.0 && noise.accel >= 0.0 && noise.compass >= 0.0 && noise.gps >= 0.0,
          "trajectory: noise sigmas must be >= 0");
  require(geo::valid_geo(origin) && std::abs(origin.lat) < 89.0, "trajectory: origin out of range");
  require(std::isfinite(initial_heading) && std::isfinite(yaw_rate) && std::isfinite(walk_speed),
          "trajectory: non-finite motion parameter");
}

Eigen::Quaterniond from_yaw_pitch_roll(double yaw, double pitch, double roll) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
}

Trajectory simulate_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto count = static_cast<std::size_t>(std::llround(spec.duration * spec.rate)) + 1;
  const double yaw0 = (90.0 - spec.initial_heading) / kDeg;
  const std::size_t gps_every =
      spec.gps_rate > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.rate / spec.gps_rate)))
          : 0;

  Trajectory traj;
  traj.truth.reserve(count);
  traj.frames.reserve(count);
  Eigen::Vector2d walk_en(0.0, 0.0);
  double prev_t = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / spec.rate;
    double yaw = yaw0;
    double rate_z = 0.0;
    Eigen::Vector3d accel_world = Eigen::Vector3d::Zero();
    switch (spec.profile) {
      case MotionProfile::Stationary:
        break;
      case MotionProfile::ConstantRotation:
        yaw = yaw0 + spec.yaw_rate * t;
        rate_z = spec.yaw_rate;
        break;
      case MotionProfile::WalkPath: {
        // Integrate the walked path between frames with fine substeps.
        constexpr int kSub = 20;
        for (int s = 0; s < kSub && k > 0; ++s) {
          const double ta = prev_t + (t - prev_t) * s / kSub;
          const double tb = prev_t + (t - prev_t) * (s + 1) / kSub;
          const double ym = yaw0 + walk_yaw_offset(0.5 * (ta + tb));
          walk_en += spec.walk_speed * (tb - ta) * Eigen::Vector2d(std::cos(ym), std::sin(ym));
        }
        yaw = yaw0 + walk_yaw_offset(t);
        rate_z = walk_yaw_rate(t);
        // Centripetal acceleration of the turning walker.
        const Eigen::Vector2d left(-std::sin(yaw), std::cos(yaw));
        accel_world.head<2>() = spec.walk_speed * rate_z * left;
        break;
      }
    }
    prev_t = t;

    PoseSample truth;
    truth.timestamp = t;
    truth.orientation = from_yaw_pitch_roll(yaw, 0.0, 0.0);
    truth.position = geo::geo_from_enu(spec.origin, {walk_en.x(), walk_en.y(), 0.0});
    traj.truth.push_back(truth);

    SensorFrame f;
    f.timestamp = t;
    const Eigen::Vector3d specific =
        truth.orientation.conjugate() * (accel_world + Eigen::Vector3d(0.0, 0.0, kGravity));
    f.accel = {specific.x() + rng.normal(0.0, spec.noise.accel),
               specific.y() + rng.normal(0.0, spec.noise.accel),
               specific.z() + rng.normal(0.0, spec.noise.accel)};
    f.gyro = {rng.normal(0.0, spec.noise.gyro), rng.normal(0.0, spec.noise.gyro),
              rate_z + rng.normal(0.0, spec.noise.gyro)};
    f.compass_heading = wrap360(heading_from_yaw(yaw * kDeg) + rng.normal(0.0, spec.noise.compass));
    if (k == 0 || (gps_every > 0 && k % gps_every == 0)) {
      const double de = rng.normal(0.0, spec.noise.gps);
      const double dn = rng.normal(0.0, spec.noise.gps);
      f.gps = geo::geo_from_enu(spec.origin, {walk_en.x() + de, walk_en.y() + dn, 0.0});
    }
    traj.frames.push_back(f);
  }
  return traj;
}

double yaw_deg(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d f = q * Eigen::Vector3d::UnitX();
  return std::atan2(f.y(), f.x()) * kDeg;
}

double angular_distance_deg(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w())) * kDeg;
}

std::vector<TrackedPose> track(const std::vector<SensorFrame>& frames, const TrackerConfig& config) {
  require(!frames.empty(), "track: empty stream");
  config.gyro.validate();
  config.accel.validate();
  config.compass.validate();
  require(config.heading_blend >= 0.0 && config.heading_blend <= 1.0 && config.tilt_blend >= 0.0 &&
              config.tilt_blend <= 1.0,
          "track: blend weights must lie in [0, 1]");

  std::optional<geo::GeoPoint> fix;
  for (const auto& f : frames) {
    if (f.gps) {
      fix = f.gps;
      break;
    }
  }
  require(fix.has_value(), "track: stream contains no GPS fix");

  filter::FilterState gyro_state, accel_state, compass_state;
  auto run = [&](filter::FilterState& st, const filter::Vec3& v, double ts,
                 const filter::FilterParams& p) {
    if (!config.filtering) return v;
    auto r = filter::filter_step(st, {v, ts}, p);
    st = r.state;
    return r.output.value;
  };

  std::vector<TrackedPose> out;
  out.reserve(frames.size());
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d prev_rate = Eigen::Vector3d::Zero();
  double prev_t = 0.0;
  double prev_raw_heading = 0.0;
  double unwrapped_heading = 0.0;
  std::optional<double> fix_time;
  double speed = 0.0;
  bool speed_known = false;

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const SensorFrame& f = frames[k];
    require(std::isfinite(f.timestamp), "track: non-finite timestamp");
    if (k > 0) require(f.timestamp > prev_t, "track: timestamps must strictly increase");
    if (f.gps) {
      // Ground speed from successive fixes, smoothed over a few seconds.
      if (fix_time && f.timestamp > *fix_time) {
        const double dt_fix = f.timestamp - *fix_time;
        const double inst = geo::haversine(*fix, *f.gps) / dt_fix;
        speed = speed_known ? speed + (1.0 - std::exp(-dt_fix / kSpeedTimeConstant)) * (inst - speed) : inst;
        speed_known = true;
      }
      fix = f.gps;
      fix_time = f.timestamp;
    }

    const Eigen::Vector3d rate = to_eigen(run(gyro_state, f.gyro, f.timestamp, config.gyro));
    const Eigen::Vector3d accel = to_eigen(run(accel_state, f.accel, f.timestamp, config.accel));

    // Compass heading on a continuous (unwrapped) scale.
    if (k == 0) {
      unwrapped_heading = f.compass_heading;
    } else {
      unwrapped_heading += wrap180(f.compass_heading - prev_raw_heading);
    }
    prev_raw_heading = f.compass_heading;

    if (k == 0) {
      const Eigen::Vector3d g = accel.norm() > 0.0 ? accel.normalized() : Eigen::Vector3d::UnitZ();
      const double roll = std::atan2(g.y(), g.z());
      const double pitch = std::atan2(-g.x(), std::hypot(g.y(), g.z()));
      const double heading =
          to_eigen(run(compass_state, {unwrapped_heading, 0.0, 0.0}, f.timestamp, config.compass)).x();
      q = from_yaw_pitch_roll((90.0 - heading) / kDeg, pitch, roll);
    } else {
      const double dt = f.timestamp - prev_t;
      const double yaw_before = yaw_deg(q);
      // First-order quaternion update with the trapezoidal body rate.
      const Eigen::Vector3d w = 0.5 * (prev_rate + rate);
      Eigen::Quaterniond dq(1.0, 0.5 * w.x() * dt, 0.5 * w.y() * dt, 0.5 * w.z() * dt);
      q = q * dq;
      q.normalize();
      const double heading_change = -wrap180(yaw_deg(q) - yaw_before);

      // Tilt: rotate the body so predicted gravity moves toward the
      // measured specific-force direction.
      // Centripetal part of the specific force, rate x forward velocity.
      const Eigen::Vector3d gravity_obs = accel - rate.cross(Eigen::Vector3d(speed, 0.0, 0.0));
      if (config.tilt_blend > 0.0 && gravity_obs.norm() > 0.0) {
        const Eigen::Vector3d g_obs = gravity_obs.normalized();
        const Eigen::Vector3d g_pred = q.conjugate() * Eigen::Vector3d::UnitZ();
        const Eigen::Vector3d axis = g_obs.cross(g_pred);
        const double s = axis.norm();
        if (s > 0.0) {
          const double angle = std::atan2(s, g_obs.dot(g_pred));
          q = q * Eigen::Quaterniond(Eigen::AngleAxisd(config.tilt_blend * angle, axis / s));
          q.normalize();
        }
      }

      // Compass: the retained filter value is carried forward by the gyro's
      // heading change so steady turns do not read as shake.
      if (config.filtering && compass_state.initialized) {
        compass_state.current.value.x += heading_change;
      }
      const double heading =
          to_eigen(run(compass_state, {unwrapped_heading, 0.0, 0.0}, f.timestamp, config.compass)).x();
      const double err = wrap180((90.0 - heading) - yaw_deg(q));
      q = Eigen::Quaterniond(Eigen::AngleAxisd(config.heading_blend * err / kDeg,
                                               Eigen::Vector3d::UnitZ())) *
          q;
      q.normalize();
    }
    prev_rate = rate;
    prev_t = f.timestamp;

    TrackedPose p;
    p.timestamp = f.timestamp;
    p.position = *fix;
    p.orientation = q;
    p.load_bbox = geo::bbox_from_fix(*fix, config.load_radius);
    out.push_back(p);
  }
  return out;
}

ErrorReport tracking_error(const std::vector<PoseSample>& truth,
                           const std::vector<TrackedPose>& tracked) {
  require(truth.size() == tracked.size(), "tracking_error: sequences differ in length");
  ErrorReport r;
  double sa = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double a = angular_distance_deg(truth[i].orientation, tracked[i].orientation);
    const double p = geo::haversine(truth[i].position, tracked[i].position);
    r.angular_deg.push_back(a);
    r.position_m.push_back(p);
    sa += a * a;
    sp += p * p;
    r.angular_max = std::max(r.angular_max, a);
    r.position_max = std::max(r.position_max, p);
  }
  if (!truth.empty()) {
    r.angular_rms = std::sqrt(sa / static_cast<double>(truth.size()));
    r.position_rms = std::sqrt(sp / static_cast<double>(truth.size()));
  }
  return r;
}

double orientation_jitter_rms(const std::vector<TrackedPose>& poses) {
  if (poses.size() < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    const double a = angular_distance_deg(poses[i - 1].orientation, poses[i].orientation);
    s += a * a;
  }
  return std::sqrt(s / static_cast<double>(poses.size() - 1));
}

StreamFiles write_streams(const std::vector<SensorFrame>& frames) {
  std::vector<filter::Vec3Sample> accel, gyro, compass;
  std::string gps = "timestamp,lon,lat\n";
  for (const auto& f : frames) {
    accel.push_back({f.accel, f.timestamp});
    gyro.push_back({f.gyro, f.timestamp});
    compass.push_back({{f.compass_heading, 0.0, 0.0}, f.timestamp});
    if (f.gps) {
      csv::append_row(gps, {csv::format_double(f.timestamp), csv::format_double(f.gps->lon),
                            csv::format_double(f.gps->lat)});
    }
  }
  return {filter::write_stream_csv(accel), filter::write_stream_csv(gyro),
          filter::write_stream_csv(compass), gps};
}

std::vector<SensorFrame> read_streams(const StreamFiles& files) {
  const auto accel = filter::parse_stream_csv(files.accel);
  const auto gyro = filter::parse_stream_csv(files.gyro);
  const auto compass = filter::parse_stream_csv(files.compass);
  if (accel.size() != gyro.size() || accel.size() != compass.size()) {
    throw Error(ErrorKind::Data, "streams: accel, gyro and compass lengths differ");
  }
  std::vector<SensorFrame> frames(accel.size());
  for (std::size_t i = 0; i < accel.size(); ++i) {
    if (gyro[i].timestamp != accel[i].timestamp || compass[i].timestamp != accel[i].timestamp) {
      throw Error(ErrorKind::Data, "streams: timestamps differ at row " + std::to_string(i + 1));
    }
    frames[i].timestamp = accel[i].timestamp;
    frames[i].accel = accel[i].value;
    frames[i].gyro = gyro[i].value;
    frames[i].compass_heading = compass[i].value.x;
  }
  const auto rows = csv::parse(files.gps);
  if (rows.empty() || rows[0] != csv::Row{"timestamp", "lon", "lat"}) {
    throw Error(ErrorKind::Data, "gps csv: header must be timestamp,lon,lat");
  }
  std::size_t cursor = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() == 1 && rows[r][0].empty()) continue;
    double t, lon, lat;
    if (rows[r].size() != 3 || !csv::parse_double(rows[r][0], t) ||
        !csv::parse_double(rows[r][1], lon) || !csv::parse_double(rows[r][2], lat)) {
      throw Error(ErrorKind::Data, "gps csv: malformed row " + std::to_string(r));
    }
    // Attach to the first frame at or after the fix time.
    while (cursor < frames.size() && frames[cursor].timestamp < t) ++cursor;
    if (cursor == frames.size()) break;
    frames[cursor].gps = geo::GeoPoint{lon, lat, 0.0};
  }
  return frames;
}

}  // namespace arpps::track
