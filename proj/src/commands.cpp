#include "arpps/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "arpps/error.hpp"
#include "arpps/geo_service.hpp"

namespace arpps::commands {
namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); }

// Reads optional keys from one JSON object and rejects unknown ones.
class Section {
 public:
  Section(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(label() + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  void read(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) bad(label(key) + ": expected a number");
    out = v.get<double>();
  }
  void read(const char* key, std::optional<double>& out) {
    double v = 0.0;
    if (!has(key)) return;
    read(key, v);
    out = v;
  }
  void read(const char* key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) bad(label(key) + ": expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      bad(label(key) + ": out of range");
    }
    out = static_cast<int>(x);
  }
  void read(const char* key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      bad(label(key) + ": expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }
  void read(const char* key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) bad(label(key) + ": expected true or false");
    out = v.get<bool>();
  }
  std::optional<std::string> string(const char* key) {
    if (!has(key)) return std::nullopt;
    const auto& v = j_.at(key);
    if (!v.is_string()) bad(label(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::optional<Section> child(const char* key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), label(key));
  }
  const ordered_json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) bad(label(item.key().c_str()) + ": unknown key");
    }
  }

  std::string label(const char* key = nullptr) const {
    std::string s = path_.empty() ? "config" : path_;
    if (key) s += std::string(".") + key;
    return s;
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_filter(Section s, filter::FilterParams& p) {
  s.read("low", p.low);
  s.read("high", p.high);
  s.read("alpha_small", p.alpha_small);
  s.read("alpha_mid", p.alpha_mid);
  s.read("alpha_large", p.alpha_large);
  s.finish();
}

ordered_json filter_json(const filter::FilterParams& p) {
  return {{"low", p.low},
          {"high", p.high},
          {"alpha_small", p.alpha_small},
          {"alpha_mid", p.alpha_mid},
          {"alpha_large", p.alpha_large}};
}

ordered_json bbox_json(const geo::BBox& b) {
  return ordered_json::array({b.lon_min, b.lat_min, b.lon_max, b.lat_max});
}

double wrap180(double deg) {
  double h = std::fmod(deg + 180.0, 360.0);
  if (h < 0.0) h += 360.0;
  return h - 180.0;
}

ordered_json error_summary(const std::vector<track::PoseSample>& truth,
                           const std::vector<track::TrackedPose>& poses) {
  const track::ErrorReport e = track::tracking_error(truth, poses);
  double yaw_max = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = wrap180(track::yaw_deg(poses[i].orientation) - track::yaw_deg(truth[i].orientation));
    yaw_max = std::max(yaw_max, std::abs(d));
  }
  return {{"angular_rms_deg", e.angular_rms},
          {"angular_max_deg", e.angular_max},
          {"yaw_error_max_deg", yaw_max},
          {"position_rms_m", e.position_rms},
          {"position_max_m", e.position_max},
          {"jitter_rms_deg", track::orientation_jitter_rms(poses)}};
}

}  // namespace

pipe::NetworkSpec network_spec_from_json(const ordered_json& j) {
  pipe::NetworkSpec spec;
  Section s(j, "gen");
  s.read("seed", spec.seed);
  std::uint64_t count = spec.point_count;
  s.read("points", count);
  spec.point_count = static_cast<std::size_t>(count);
  s.read("extent", spec.extent);
  s.read("center_lon", spec.center.lon);
  s.read("center_lat", spec.center.lat);
  if (s.has("category_mix")) {
    const auto& mix = s.raw("category_mix");
    if (mix.is_array()) {
      if (mix.size() != pipe::kCategoryCount) bad("gen.category_mix: expected 13 weights");
      for (std::size_t i = 0; i < mix.size(); ++i) {
        if (!mix[i].is_number()) bad("gen.category_mix: expected numbers");
        spec.category_mix[i] = mix[i].get<double>();
      }
    } else if (mix.is_object()) {
      spec.category_mix.fill(0.0);
      for (const auto& item : mix.items()) {
        const auto c = pipe::parse_category(item.key());
        if (!c) bad("gen.category_mix: unknown category '" + item.key() + "'");
        if (!item.value().is_number()) bad("gen.category_mix." + item.key() + ": expected a number");
        spec.category_mix[pipe::index_of(*c)] = item.value().get<double>();
      }
    } else {
      bad("gen.category_mix: expected an array or an object");
    }
  }
  s.finish();
  return spec;
}

ordered_json to_json(const pipe::NetworkSpec& spec) {
  ordered_json mix = ordered_json::object();
  for (auto c : pipe::kAllCategories) mix[std::string(pipe::to_string(c))] = spec.category_mix[pipe::index_of(c)];
  return {{"seed", spec.seed},
          {"points", spec.point_count},
          {"extent", spec.extent},
          {"center_lon", spec.center.lon},
          {"center_lat", spec.center.lat},
          {"category_mix", std::move(mix)}};
}

tcnn::BenchConfig bench_config_from_json(const ordered_json& j) {
  tcnn::BenchConfig c;
  Section s(j, "match_bench");
  s.read("seed", c.seed);
  s.read("instances", c.instances);
  s.read("m", c.instance.m);
  s.read("n", c.instance.n);
  s.read("dim", c.instance.dim);
  s.read("spread", c.instance.spread);
  s.read("noise", c.instance.noise);
  s.read("sigma", c.instance.sigma);
  s.read("min_margin", c.instance.min_margin);
  s.read("ratio_threshold", c.ratio_threshold);
  if (auto o = s.string("oracle")) {
    if (*o == "auto") c.oracle = tcnn::OracleMode::Auto;
    else if (*o == "exhaustive") c.oracle = tcnn::OracleMode::Exhaustive;
    else if (*o == "one_to_one") c.oracle = tcnn::OracleMode::OneToOne;
    else bad("match_bench.oracle: expected auto, exhaustive or one_to_one");
  }
  if (auto t = s.child("tcnn")) {
    t->read("k", c.params.k);
    t->read("alpha", c.params.alpha);
    t->read("beta", c.params.beta);
    t->read("i0", c.params.i0);
    t->read("epsilon", c.params.epsilon);
    t->read("z0", c.params.z0);
    t->read("max_steps", c.params.max_steps);
    t->read("binarize_threshold", c.params.binarize_threshold);
    t->read("stable_steps", c.params.stable_steps);
    t->read("init_perturbation", c.params.init_perturbation);
    if (auto a = t->string("activation")) {
      if (*a == "canonical") c.params.activation = tcnn::Activation::Canonical;
      else if (*a == "as_printed") c.params.activation = tcnn::Activation::AsPrinted;
      else bad("match_bench.tcnn.activation: expected canonical or as_printed");
    }
    t->finish();
  }
  if (auto k = s.child("coefficients")) {
    k->read("a_row", c.coeff.a_row);
    k->read("a_col", c.coeff.a_col);
    k->read("b_data", c.coeff.b_data);
    k->finish();
  }
  s.finish();
  return c;
}

TrackSimConfig track_sim_config_from_json(const ordered_json& j) {
  TrackSimConfig c;
  Section s(j, "track_sim");
  s.read("frame_every", c.frame_every);
  if (auto t = s.child("trajectory")) {
    auto& tr = c.trajectory;
    t->read("seed", tr.seed);
    t->read("duration", tr.duration);
    t->read("rate", tr.rate);
    if (auto p = t->string("profile")) {
      auto prof = track::parse_motion_profile(*p);
      if (!prof) bad("track_sim.trajectory.profile: expected stationary, constant-rotation or walk-path");
      tr.profile = *prof;
    }
    if (auto n = t->child("noise")) {
      n->read("gyro", tr.noise.gyro);
      n->read("accel", tr.noise.accel);
      n->read("compass", tr.noise.compass);
      n->read("gps", tr.noise.gps);
      n->finish();
    }
    if (auto o = t->child("origin")) {
      o->read("lon", tr.origin.lon);
      o->read("lat", tr.origin.lat);
      o->read("alt", tr.origin.alt);
      o->finish();
    }
    t->read("initial_heading", tr.initial_heading);
    t->read("yaw_rate", tr.yaw_rate);
    t->read("walk_speed", tr.walk_speed);
    t->read("gps_rate", tr.gps_rate);
    t->finish();
  }
  if (auto t = s.child("tracker")) {
    auto& tk = c.tracker;
    if (auto f = t->child("gyro")) read_filter(*f, tk.gyro);
    if (auto f = t->child("accel")) read_filter(*f, tk.accel);
    if (auto f = t->child("compass")) read_filter(*f, tk.compass);
    t->read("filtering", tk.filtering);
    t->read("heading_blend", tk.heading_blend);
    t->read("tilt_blend", tk.tilt_blend);
    t->read("load_radius", tk.load_radius);
    t->finish();
  }
  s.finish();
  if (c.frame_every < 1) bad("track_sim.frame_every: must be >= 1");
  return c;
}

ordered_json to_json(const TrackSimConfig& c) {
  const auto& tr = c.trajectory;
  const auto& tk = c.tracker;
  return {
      {"frame_every", c.frame_every},
      {"trajectory",
       {{"seed", tr.seed},
        {"duration", tr.duration},
        {"rate", tr.rate},
        {"profile", track::to_string(tr.profile)},
        {"noise", {{"gyro", tr.noise.gyro}, {"accel", tr.noise.accel}, {"compass", tr.noise.compass}, {"gps", tr.noise.gps}}},
        {"origin", {{"lon", tr.origin.lon}, {"lat", tr.origin.lat}, {"alt", tr.origin.alt}}},
        {"initial_heading", tr.initial_heading},
        {"yaw_rate", tr.yaw_rate},
        {"walk_speed", tr.walk_speed},
        {"gps_rate", tr.gps_rate}}},
      {"tracker",
       {{"gyro", filter_json(tk.gyro)},
        {"accel", filter_json(tk.accel)},
        {"compass", filter_json(tk.compass)},
        {"filtering", tk.filtering},
        {"heading_blend", tk.heading_blend},
        {"tilt_blend", tk.tilt_blend},
        {"load_radius", tk.load_radius}}},
  };
}

RenderConfig render_config_from_json(const ordered_json& j) {
  RenderConfig c;
  Section s(j, "render");
  if (auto p = s.child("pose")) {
    p->read("timestamp", c.pose.timestamp);
    p->read("lon", c.pose.lon);
    p->read("lat", c.pose.lat);
    p->read("alt", c.pose.alt);
    p->read("heading", c.pose.heading);
    p->read("pitch", c.pose.pitch);
    p->read("roll", c.pose.roll);
    p->finish();
  }
  if (auto k = s.child("camera")) {
    double fx = c.camera.fx, fy = c.camera.fy, cx = c.camera.cx, cy = c.camera.cy;
    k->read("fx", fx);
    k->read("fy", fy);
    k->read("cx", cx);
    k->read("cy", cy);
    k->finish();
    c.camera = cam::CameraIntrinsics(fx, fy, cx, cy);
  }
  if (auto v = s.child("viewport")) {
    v->read("width", c.viewport.width);
    v->read("height", c.viewport.height);
    v->finish();
  }
  if (auto t = s.child("trench")) {
    if (auto m = t->string("mode")) {
      auto mode = overlay::parse_trench_mode(*m);
      if (!mode) bad("render.trench.mode: expected rectangular_all_sight or circular_front_sight_180");
      c.trench.mode = *mode;
    }
    t->read("size", c.trench.size);
    t->read("depth", c.trench.depth);
    t->read("ground_elevation", c.trench.ground_elevation);
    t->read("arc_segments", c.trench.arc_segments);
    t->finish();
  }
  s.read("tube_sides", c.options.tube_sides);
  s.read("near_plane", c.options.near_plane);
  s.read("load_radius", c.load_radius);
  s.finish();
  c.trench.validate();
  if (c.viewport.width <= 0 || c.viewport.height <= 0) bad("render.viewport: must be positive");
  if (!(c.load_radius > 0.0)) bad("render.load_radius: must be > 0");
  return c;
}

ordered_json to_json(const RenderConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  return {
      {"pose",
       {{"timestamp", c.pose.timestamp},
        {"lon", opt(c.pose.lon)},
        {"lat", opt(c.pose.lat)},
        {"alt", opt(c.pose.alt)},
        {"heading", c.pose.heading},
        {"pitch", c.pose.pitch},
        {"roll", c.pose.roll}}},
      {"camera", {{"fx", c.camera.fx}, {"fy", c.camera.fy}, {"cx", c.camera.cx}, {"cy", c.camera.cy}}},
      {"viewport", {{"width", c.viewport.width}, {"height", c.viewport.height}}},
      {"trench",
       {{"mode", overlay::to_string(c.trench.mode)},
        {"size", c.trench.size},
        {"depth", opt(c.trench.depth)},
        {"ground_elevation", opt(c.trench.ground_elevation)},
        {"arc_segments", c.trench.arc_segments}}},
      {"tube_sides", c.options.tube_sides},
      {"near_plane", c.options.near_plane},
      {"load_radius", c.load_radius},
  };
}

Eigen::Quaterniond orientation_of(double heading_deg, double pitch_deg, double roll_deg) {
  constexpr double d2r = std::numbers::pi / 180.0;
  return track::from_yaw_pitch_roll((90.0 - heading_deg) * d2r, pitch_deg * d2r, roll_deg * d2r);
}

void resolve_pose(RenderPose& pose, const store::SpatialStore& store) {
  const auto& pts = store.points();
  if (!pose.lon || !pose.lat) {
    if (pts.empty()) bad("render.pose: lon and lat are required for a store without points");
    pose.lon = pts.front().x;
    pose.lat = pts.front().y;
  }
  if (!pose.alt) {
    double ground = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
      const double d = geo::haversine({*pose.lon, *pose.lat, 0.0}, {p.x, p.y, 0.0});
      if (d < best) {
        best = d;
        ground = p.ground_elevation;
      }
    }
    pose.alt = ground + 1.5;
  }
}

GenOutput run_gen(const ordered_json& config) {
  const pipe::NetworkSpec spec = network_spec_from_json(config);
  const pipe::Network net = pipe::generate_network(spec);
  GenOutput out;
  ordered_json r;
  r["command"] = "gen";
  r["config"] = to_json(spec);
  r["points"] = net.points.size();
  r["lines"] = net.lines.size();
  out.report = r.dump(2);
  out.points_csv = pipe::write_points_csv(net.points);
  out.lines_csv = pipe::write_lines_csv(net.lines);
  return out;
}

std::string run_validate(std::string_view points_csv, std::string_view lines_csv) {
  const pipe::Network net = pipe::parse_csv(points_csv, lines_csv);
  const auto violations = pipe::validate_network(net.points, net.lines);
  ordered_json r;
  r["command"] = "validate";
  r["valid"] = violations.empty();
  r["points"] = net.points.size();
  r["lines"] = net.lines.size();
  ordered_json v = ordered_json::array();
  for (const auto& x : violations) v.push_back({{"record", x.record}, {"rule", x.rule}, {"detail", x.detail}});
  r["violations"] = std::move(v);
  return r.dump(2);
}

std::string run_match_bench(const ordered_json& config) {
  return tcnn::to_json(tcnn::run_match_bench(bench_config_from_json(config)));
}

TrackSimOutput run_track_sim(const ordered_json& config, const store::SpatialStore* store) {
  const TrackSimConfig c = track_sim_config_from_json(config);
  const track::Trajectory traj = track::simulate_trajectory(c.trajectory);
  track::TrackerConfig raw_cfg = c.tracker;
  raw_cfg.filtering = false;
  const auto poses = track::track(traj.frames, c.tracker);
  const auto raw = track::track(traj.frames, raw_cfg);

  TrackSimOutput out;
  ordered_json r;
  r["command"] = "track-sim";
  r["config"] = to_json(c);
  r["frames"] = traj.frames.size();
  r["tracked"] = error_summary(traj.truth, poses);
  r["unfiltered"] = error_summary(traj.truth, raw);
  const auto& last = poses.back();
  r["final_pose"] = {
      {"timestamp", last.timestamp},
      {"lon", last.position.lon},
      {"lat", last.position.lat},
      {"alt", last.position.alt},
      {"orientation_wxyz", {last.orientation.w(), last.orientation.x(), last.orientation.y(), last.orientation.z()}},
      {"load_bbox", bbox_json(last.load_bbox)},
  };
  r["overlay_frames"] = 0;
  if (store) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < poses.size(); i += static_cast<std::size_t>(c.frame_every)) {
      out.frames += overlay::serialize_frame(overlay::render_frame(
          *store, poses[i], cam::CameraIntrinsics(1000.0, 1000.0, 640.0, 360.0), {}, {}));
      out.frames += '\n';
      ++n;
    }
    r["overlay_frames"] = n;
  }
  out.report = r.dump(2);
  return out;
}

RenderOutput run_render(const ordered_json& config, const store::SpatialStore& store) {
  RenderConfig c = render_config_from_json(config);
  resolve_pose(c.pose, store);
  track::TrackedPose pose;
  pose.timestamp = c.pose.timestamp;
  pose.position = {*c.pose.lon, *c.pose.lat, *c.pose.alt};
  if (!geo::valid_geo(pose.position)) bad("render.pose: coordinates out of range");
  pose.orientation = orientation_of(c.pose.heading, c.pose.pitch, c.pose.roll);
  pose.load_bbox = geo::bbox_from_fix(pose.position, c.load_radius);
  const auto frame = overlay::render_frame(store, pose, c.camera, c.trench, c.viewport, c.options);
  return {overlay::serialize_frame(frame), overlay::frame_to_svg(frame)};
}

}  // namespace arpps::commands
