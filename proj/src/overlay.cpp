#include "arpps/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "arpps/error.hpp"
#include "csv.hpp"

namespace arpps::overlay {
namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr Rgba kWallColor{139, 90, 43, 0.9};
constexpr Rgba kFloorColor{101, 67, 33, 0.9};
constexpr Rgba kGroundMaskColor{128, 128, 128, 0.35};
constexpr Rgba kMarkerColor{255, 255, 255, 1.0};
constexpr double kFallbackTrenchDepth = 2.0;
constexpr double kCameraHeight = 1.5;

// Camera axes from body axes: x right = -y_body, y down = -z_body,
// z forward = x_body.
Eigen::Matrix3d camera_from_body() {
  Eigen::Matrix3d m;
  m << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return m;
}

// Sutherland-Hodgman against z >= near in camera coordinates.
std::vector<Eigen::Vector3d> clip_near(const std::vector<Eigen::Vector3d>& poly, double near) {
  std::vector<Eigen::Vector3d> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d& a = poly[i];
    const Eigen::Vector3d& b = poly[(i + 1) % n];
    const bool ina = a.z() >= near;
    const bool inb = b.z() >= near;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double s = (near - a.z()) / (b.z() - a.z());
      Eigen::Vector3d p = a + s * (b - a);
      p.z() = near;
      out.push_back(p);
    }
  }
  return out;
}

Eigen::Vector2d pixel_of_camera_point(const cam::CameraIntrinsics& k, const Eigen::Vector3d& xc) {
  return {k.fx * xc.x() / xc.z() + k.cx, k.fy * xc.y() / xc.z() + k.cy};
}

bool outside(const Viewport& vp, const Eigen::Vector2d& p) {
  return !(p.x() >= 0.0 && p.x() <= vp.width && p.y() >= 0.0 && p.y() <= vp.height);
}

// Andrew's monotone chain; returns counter-clockwise hull.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  return h;
}

double mean_depth(const std::vector<Eigen::Vector3d>& pts) {
  double s = 0.0;
  for (const auto& p : pts) s += p.z();
  return pts.empty() ? 0.0 : s / static_cast<double>(pts.size());
}

}  // namespace

const char* to_string(TrenchMode m) noexcept {
  return m == TrenchMode::RectangularAllSight ? "rectangular_all_sight" : "circular_front_sight_180";
}

std::optional<TrenchMode> parse_trench_mode(std::string_view s) noexcept {
  if (s == "rectangular_all_sight" || s == "rectangular") return TrenchMode::RectangularAllSight;
  if (s == "circular_front_sight_180" || s == "circular") return TrenchMode::CircularFrontSight180;
  return std::nullopt;
}

const char* to_string(PrimitiveKind k) noexcept {
  switch (k) {
    case PrimitiveKind::TrenchWall:
      return "trench_wall";
    case PrimitiveKind::TrenchFloor:
      return "trench_floor";
    case PrimitiveKind::GroundMask:
      return "ground_mask";
    case PrimitiveKind::PipeTube:
      return "pipe_tube";
    default:
      return "pipe_point_marker";
  }
}

void TrenchSpec::validate() const {
  if (!(std::isfinite(size) && size > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "trench: size must be > 0");
  }
  if (depth && !(std::isfinite(*depth) && *depth > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "trench: depth must be > 0");
  }
  if (ground_elevation && !std::isfinite(*ground_elevation)) {
    throw Error(ErrorKind::InvalidArgument, "trench: ground elevation not finite");
  }
  if (arc_segments < 2) throw Error(ErrorKind::InvalidArgument, "trench: arc_segments must be >= 2");
}

const std::array<Rgba, pipe::kCategoryCount>& palette() noexcept {
  static constexpr std::array<Rgba, pipe::kCategoryCount> kPalette = {{
      {139, 69, 19, 1.0},    // CoveredChannel
      {255, 99, 71, 1.0},    // PowerLineCarrier
      {220, 20, 60, 1.0},    // PowerSupply
      {0, 206, 209, 1.0},    // MonitoringSignal
      {255, 105, 180, 1.0},  // StreetLamp
      {255, 140, 0, 1.0},    // HotWater
      {30, 60, 220, 1.0},    // FeedWater
      {255, 215, 0, 1.0},    // NaturalGas
      {34, 139, 34, 1.0},    // Communication
      {128, 0, 0, 1.0},      // Sewage
      {70, 130, 180, 1.0},   // Rainwater
      {128, 128, 0, 1.0},    // Integrated
      {0, 191, 255, 1.0},    // ReclaimedWater
  }};
  return kPalette;
}

std::vector<Face> build_trench(const TrenchSpec& spec, const track::TrackedPose& pose) {
  spec.validate();
  if (!spec.depth || !spec.ground_elevation) {
    throw Error(ErrorKind::InvalidArgument, "build_trench: depth and ground elevation must be resolved");
  }
  const double top = *spec.ground_elevation;
  const double bottom = top - *spec.depth;
  std::vector<Eigen::Vector2d> footprint;
  if (spec.mode == TrenchMode::RectangularAllSight) {
    const double h = spec.size / 2.0;
    footprint = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
  } else {
    // Half disc ahead of the camera heading, from heading -90 to +90 degrees.
    const double yaw = track::yaw_deg(pose.orientation) * kPi / 180.0;
    for (int s = 0; s <= spec.arc_segments; ++s) {
      const double a = yaw - kPi / 2.0 + kPi * s / spec.arc_segments;
      footprint.emplace_back(spec.size * std::cos(a), spec.size * std::sin(a));
    }
  }

  std::vector<Face> faces;
  const std::size_t n = footprint.size();
  // For the sector, the last wall closes the loop along the diameter.
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = footprint[i];
    const Eigen::Vector2d& b = footprint[(i + 1) % n];
    faces.push_back({Face::Role::Wall,
                     {{a.x(), a.y(), top}, {b.x(), b.y(), top}, {b.x(), b.y(), bottom},
                      {a.x(), a.y(), bottom}}});
  }
  Face floor{Face::Role::Floor, {}};
  Face mask{Face::Role::GroundMask, {}};
  for (const auto& p : footprint) {
    floor.vertices.emplace_back(p.x(), p.y(), bottom);
    mask.vertices.emplace_back(p.x(), p.y(), top);
  }
  faces.push_back(std::move(floor));
  faces.push_back(std::move(mask));
  return faces;
}

cam::Pose camera_pose(const track::TrackedPose& pose) {
  const Eigen::Matrix3d r = camera_from_body() * pose.orientation.normalized().toRotationMatrix().transpose();
  const Eigen::Vector3d center(0.0, 0.0, pose.position.alt);
  return cam::Pose(r, -r * center);
}

Eigen::Vector3d enu_of(const track::TrackedPose& pose, double lon, double lat, double elevation) {
  const geo::GeoPoint origin{pose.position.lon, pose.position.lat, 0.0};
  const geo::EnuPoint e = geo::enu_from_geo(origin, {lon, lat, elevation});
  return {e.e, e.n, e.u};
}

OverlayFrame render_frame(const store::SpatialStore& store, const track::TrackedPose& pose,
                          const cam::CameraIntrinsics& k, const TrenchSpec& trench_in,
                          const Viewport& viewport, const RenderOptions& options) {
  trench_in.validate();
  if (viewport.width <= 0 || viewport.height <= 0) {
    throw Error(ErrorKind::InvalidArgument, "render_frame: viewport must be positive");
  }
  if (options.tube_sides < 3 || !(options.near_plane > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "render_frame: bad render options");
  }
  const auto ids = store.query_bbox(pose.load_bbox);
  const cam::Pose cp = camera_pose(pose);

  TrenchSpec trench = trench_in;
  if (!trench.ground_elevation) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& id : ids) {
      if (id.kind != store::FeatureKind::Point) continue;
      const auto* p = store.point(id.object_id);
      const Eigen::Vector3d e = enu_of(pose, p->x, p->y, 0.0);
      const double d = e.head<2>().norm();
      if (d < best) {
        best = d;
        trench.ground_elevation = p->ground_elevation;
      }
    }
    if (!trench.ground_elevation) trench.ground_elevation = pose.position.alt - kCameraHeight;
  }
  if (!trench.depth) {
    double deepest = -1.0;
    for (const auto& id : ids) {
      if (id.kind != store::FeatureKind::Line) continue;
      const auto* l = store.line(id.object_id);
      deepest = std::max({deepest, l->start_depth, l->end_depth});
    }
    trench.depth = deepest >= 0.0 ? deepest + 1.0 : kFallbackTrenchDepth;
  }

  OverlayFrame frame;
  frame.timestamp = pose.timestamp;
  frame.viewport = viewport;
  frame.intrinsics = k;
  frame.camera_position = pose.position;
  frame.orientation = pose.orientation;
  frame.trench = trench;

  for (const Face& face : build_trench(trench, pose)) {
    Primitive prim;
    prim.kind = face.role == Face::Role::Wall    ? PrimitiveKind::TrenchWall
                : face.role == Face::Role::Floor ? PrimitiveKind::TrenchFloor
                                                 : PrimitiveKind::GroundMask;
    prim.color = face.role == Face::Role::Wall    ? kWallColor
                 : face.role == Face::Role::Floor ? kFloorColor
                                                  : kGroundMaskColor;
    std::vector<Eigen::Vector3d> cam_pts;
    for (const auto& v : face.vertices) cam_pts.push_back(cp.transform(v));
    prim.depth_key = mean_depth(cam_pts);
    const auto clipped = clip_near(cam_pts, options.near_plane);
    prim.clipped = clipped.size() != cam_pts.size() ||
                   !std::equal(clipped.begin(), clipped.end(), cam_pts.begin());
    prim.culled = clipped.size() < 3;
    if (!prim.culled) {
      for (const auto& c : clipped) {
        prim.vertices.push_back(pixel_of_camera_point(k, c));
        prim.clipped = prim.clipped || outside(viewport, prim.vertices.back());
      }
    }
    frame.primitives.push_back(std::move(prim));
  }

  for (const auto& id : ids) {
    Primitive prim;
    prim.feature = id;
    if (id.kind == store::FeatureKind::Point) {
      const auto* p = store.point(id.object_id);
      prim.kind = PrimitiveKind::PipePointMarker;
      prim.color = kMarkerColor;
      const Eigen::Vector3d w = enu_of(pose, p->x, p->y, p->ground_elevation);
      const Eigen::Vector3d c = cp.transform(w);
      prim.depth_key = c.z();
      if (c.z() > options.near_plane) {
        prim.vertices.push_back(cam::project(k, cp, w));
        prim.clipped = outside(viewport, prim.vertices.back());
      } else {
        prim.culled = true;
        prim.clipped = true;
      }
      frame.primitives.push_back(std::move(prim));
      continue;
    }

    const auto* l = store.line(id.object_id);
    prim.kind = PrimitiveKind::PipeTube;
    prim.category = l->line_type;
    prim.color = palette()[pipe::index_of(l->line_type)];
    Eigen::Vector3d w0 = enu_of(pose, l->start_x, l->start_y, l->start_elevation - l->start_depth);
    Eigen::Vector3d w1 = enu_of(pose, l->end_x, l->end_y, l->end_elevation - l->end_depth);
    const double z0 = cp.transform(w0).z();
    const double z1 = cp.transform(w1).z();
    prim.depth_key = 0.5 * (z0 + z1);
    const double near = options.near_plane;
    if (z0 <= near && z1 <= near) {
      prim.culled = true;
      prim.clipped = true;
      frame.primitives.push_back(std::move(prim));
      continue;
    }
    if (z0 <= near || z1 <= near) {
      // Move the hidden endpoint onto the near plane.
      const double s = (near - z0) / (z1 - z0);
      const Eigen::Vector3d cut = w0 + s * (w1 - w0);
      (z0 <= near ? w0 : w1) = cut;
      prim.clipped = true;
    }
    prim.vertices.push_back(cam::project(k, cp, w0));
    prim.vertices.push_back(cam::project(k, cp, w1));

    // Tube rings around both ends.
    const double radius = l->diameter / 2000.0;
    Eigen::Vector3d axis = w1 - w0;
    if (axis.norm() > 0.0) {
      axis.normalize();
      const Eigen::Vector3d helper =
          std::abs(axis.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
      const Eigen::Vector3d u = axis.cross(helper).normalized();
      const Eigen::Vector3d v = axis.cross(u);
      std::vector<Eigen::Vector2d> ring_px;
      for (const Eigen::Vector3d& end : {w0, w1}) {
        for (int s = 0; s < options.tube_sides; ++s) {
          const double a = 2.0 * kPi * s / options.tube_sides;
          const Eigen::Vector3d q = end + radius * (std::cos(a) * u + std::sin(a) * v);
          if (cp.transform(q).z() > near) {
            ring_px.push_back(cam::project(k, cp, q));
          } else {
            prim.clipped = true;
          }
        }
      }
      prim.outline = convex_hull(std::move(ring_px));
    }
    for (const auto& px : prim.vertices) prim.clipped = prim.clipped || outside(viewport, px);
    for (const auto& px : prim.outline) prim.clipped = prim.clipped || outside(viewport, px);
    frame.primitives.push_back(std::move(prim));
  }

  std::stable_sort(frame.primitives.begin(), frame.primitives.end(),
                   [](const Primitive& a, const Primitive& b) { return a.depth_key > b.depth_key; });
  return frame;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json points_json(const std::vector<Eigen::Vector2d>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Eigen::Vector2d> points_from(const json& a) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& p : a) out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return out;
}

std::string feature_ref(const store::FeatureId& id) {
  return (id.kind == store::FeatureKind::Point ? "point." : "line.") + std::to_string(id.object_id);
}

store::FeatureId parse_feature_ref(const std::string& s) {
  const auto dot = s.find('.');
  std::int64_t id = 0;
  if (dot == std::string::npos || !csv::parse_int(std::string_view(s).substr(dot + 1), id)) {
    throw Error(ErrorKind::Data, "frame: bad feature reference '" + s + "'");
  }
  const std::string kind = s.substr(0, dot);
  if (kind == "point") return {store::FeatureKind::Point, id};
  if (kind == "line") return {store::FeatureKind::Line, id};
  throw Error(ErrorKind::Data, "frame: bad feature reference '" + s + "'");
}

PrimitiveKind parse_kind(const std::string& s) {
  for (auto k : {PrimitiveKind::TrenchWall, PrimitiveKind::TrenchFloor, PrimitiveKind::GroundMask,
                 PrimitiveKind::PipeTube, PrimitiveKind::PipePointMarker}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::Data, "frame: unknown primitive kind '" + s + "'");
}

}  // namespace

std::string serialize_frame(const OverlayFrame& f) {
  json j;
  j["schema"] = "arpps-overlay-frame/1";
  j["timestamp"] = f.timestamp;
  j["viewport"] = {{"width", f.viewport.width}, {"height", f.viewport.height}};
  j["camera"] = {
      {"fx", f.intrinsics.fx},
      {"fy", f.intrinsics.fy},
      {"cx", f.intrinsics.cx},
      {"cy", f.intrinsics.cy},
      {"position",
       {{"lon", f.camera_position.lon}, {"lat", f.camera_position.lat}, {"alt", f.camera_position.alt}}},
      {"orientation_wxyz",
       {f.orientation.w(), f.orientation.x(), f.orientation.y(), f.orientation.z()}},
  };
  j["trench"] = {
      {"mode", to_string(f.trench.mode)},
      {"size", f.trench.size},
      {"depth", f.trench.depth ? json(*f.trench.depth) : json(nullptr)},
      {"ground_elevation",
       f.trench.ground_elevation ? json(*f.trench.ground_elevation) : json(nullptr)},
      {"arc_segments", f.trench.arc_segments},
  };
  json prims = json::array();
  for (const auto& p : f.primitives) {
    json o;
    o["kind"] = to_string(p.kind);
    o["feature"] = p.feature ? json(feature_ref(*p.feature)) : json(nullptr);
    o["category"] = p.category ? json(std::string(pipe::to_string(*p.category))) : json(nullptr);
    o["vertices"] = points_json(p.vertices);
    o["outline"] = points_json(p.outline);
    o["depth_key"] = p.depth_key;
    o["color"] = {p.color.r, p.color.g, p.color.b, p.color.a};
    o["clipped"] = p.clipped;
    o["culled"] = p.culled;
    prims.push_back(std::move(o));
  }
  j["primitives"] = std::move(prims);
  return j.dump();
}

OverlayFrame parse_frame(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != "arpps-overlay-frame/1") {
      throw Error(ErrorKind::Data, "frame: unsupported schema");
    }
    OverlayFrame f;
    f.timestamp = j.at("timestamp").get<double>();
    f.viewport = {j.at("viewport").at("width").get<int>(), j.at("viewport").at("height").get<int>()};
    const json& c = j.at("camera");
    f.intrinsics = cam::CameraIntrinsics(c.at("fx").get<double>(), c.at("fy").get<double>(),
                                         c.at("cx").get<double>(), c.at("cy").get<double>());
    f.camera_position = {c.at("position").at("lon").get<double>(),
                         c.at("position").at("lat").get<double>(),
                         c.at("position").at("alt").get<double>()};
    const json& q = c.at("orientation_wxyz");
    f.orientation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                       q.at(2).get<double>(), q.at(3).get<double>());
    const json& t = j.at("trench");
    auto mode = parse_trench_mode(t.at("mode").get<std::string>());
    if (!mode) throw Error(ErrorKind::Data, "frame: unknown trench mode");
    f.trench.mode = *mode;
    f.trench.size = t.at("size").get<double>();
    if (!t.at("depth").is_null()) f.trench.depth = t.at("depth").get<double>();
    if (!t.at("ground_elevation").is_null()) f.trench.ground_elevation = t.at("ground_elevation").get<double>();
    f.trench.arc_segments = t.at("arc_segments").get<int>();
    for (const json& o : j.at("primitives")) {
      Primitive p;
      p.kind = parse_kind(o.at("kind").get<std::string>());
      if (!o.at("feature").is_null()) p.feature = parse_feature_ref(o.at("feature").get<std::string>());
      if (!o.at("category").is_null()) {
        p.category = pipe::parse_category(o.at("category").get<std::string>());
        if (!p.category) throw Error(ErrorKind::Data, "frame: unknown category");
      }
      p.vertices = points_from(o.at("vertices"));
      p.outline = points_from(o.at("outline"));
      p.depth_key = o.at("depth_key").get<double>();
      const json& col = o.at("color");
      p.color = {col.at(0).get<std::uint8_t>(), col.at(1).get<std::uint8_t>(),
                 col.at(2).get<std::uint8_t>(), col.at(3).get<double>()};
      p.clipped = o.at("clipped").get<bool>();
      p.culled = o.at("culled").get<bool>();
      f.primitives.push_back(std::move(p));
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Data, std::string("frame: ") + e.what());
  }
}

std::string frame_to_svg(const OverlayFrame& f) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(f.viewport.width) + "\" height=\"" +
                    std::to_string(f.viewport.height) + "\" viewBox=\"0 0 " +
                    std::to_string(f.viewport.width) + " " + std::to_string(f.viewport.height) +
                    "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#202020\"/>\n";
  auto pts = [](const std::vector<Eigen::Vector2d>& v) {
    std::string s;
    for (const auto& p : v) {
      if (!s.empty()) s += ' ';
      s += csv::format_double(p.x()) + "," + csv::format_double(p.y());
    }
    return s;
  };
  for (const auto& p : f.primitives) {
    if (p.culled) continue;
    char color[16];
    std::snprintf(color, sizeof(color), "#%02x%02x%02x", p.color.r, p.color.g, p.color.b);
    const std::string opacity = csv::format_double(p.color.a);
    if (p.kind == PrimitiveKind::PipeTube) {
      if (p.outline.size() >= 3) {
        out += "<polygon points=\"" + pts(p.outline) + "\" fill=\"" + color + "\" fill-opacity=\"" +
               opacity + "\"/>\n";
      } else {
        out += "<polyline points=\"" + pts(p.vertices) + "\" stroke=\"" + color +
               "\" stroke-width=\"3\" fill=\"none\"/>\n";
      }
    } else if (p.kind == PrimitiveKind::PipePointMarker) {
      out += "<circle cx=\"" + csv::format_double(p.vertices[0].x()) + "\" cy=\"" +
             csv::format_double(p.vertices[0].y()) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
    } else {
      out += "<polygon points=\"" + pts(p.vertices) + "\" fill=\"" + color + "\" fill-opacity=\"" +
             opacity + "\" stroke=\"#000000\" stroke-opacity=\"0.3\"/>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace arpps::overlay
