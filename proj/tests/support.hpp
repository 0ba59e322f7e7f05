#pragma once

#include <filesystem>
#include <string>

#include "arpps/geodesy.hpp"
#include "arpps/pipe_model.hpp"

namespace support {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("arpps_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline arpps::pipe::PipePoint make_point(std::int64_t id, double lon, double lat, double ground = 10.0) {
  arpps::pipe::PipePoint p;
  p.object_id = id;
  p.point_number = "P" + std::to_string(id);
  p.x = lon;
  p.y = lat;
  p.ground_elevation = ground;
  p.feature_kind = "junction";
  p.attached_object = "well";
  p.well_bottom_depth = 3.0;
  p.lid_type = "round";
  p.lid_spec = "D700";
  p.lid_material = "iron";
  p.offset_distance = 0.2;
  p.rotation_angle = 45.0;
  return p;
}

inline arpps::pipe::PipeLine make_line(std::int64_t id, const arpps::pipe::PipePoint& a,
                                       const arpps::pipe::PipePoint& b,
                                       arpps::pipe::PipeCategory c = arpps::pipe::PipeCategory::FeedWater) {
  arpps::pipe::PipeLine l;
  l.object_id = id;
  l.start_point_id = a.object_id;
  l.end_point_id = b.object_id;
  l.start_depth = 1.5;
  l.end_depth = 1.8;
  l.start_elevation = a.ground_elevation;
  l.end_elevation = b.ground_elevation;
  l.start_x = a.x;
  l.start_y = a.y;
  l.end_x = b.x;
  l.end_y = b.y;
  l.material = "PE";
  l.burial_method = "direct";
  l.line_type = c;
  l.diameter = 300.0;
  l.length = arpps::geo::haversine({a.x, a.y, 0}, {b.x, b.y, 0});
  return l;
}

}  // namespace support
