#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "arpps/match_bench.hpp"
#include "arpps/overlay.hpp"
#include "arpps/pipe_model.hpp"
#include "arpps/pose_tracker.hpp"
#include "arpps/spatial_store.hpp"

// JSON configuration for the operator commands and the reports they produce.
// Parsers are strict: unknown keys and wrong types throw
// Error(InvalidArgument) naming the key path. Missing keys keep defaults.
namespace arpps::commands {

using nlohmann::ordered_json;

pipe::NetworkSpec network_spec_from_json(const ordered_json& j);
ordered_json to_json(const pipe::NetworkSpec& spec);

tcnn::BenchConfig bench_config_from_json(const ordered_json& j);

struct TrackSimConfig {
  track::TrajectorySpec trajectory;
  track::TrackerConfig tracker;
  /// Emit an overlay frame for every n-th pose when a store is supplied.
  int frame_every = 10;
};
TrackSimConfig track_sim_config_from_json(const ordered_json& j);
ordered_json to_json(const TrackSimConfig& c);

/// Camera heading is clockwise from north; pitch is positive nose down.
struct RenderPose {
  double timestamp = 0.0;
  std::optional<double> lon;
  std::optional<double> lat;
  std::optional<double> alt;
  double heading = 0.0;  // degrees
  double pitch = 0.0;    // degrees
  double roll = 0.0;     // degrees
};

struct RenderConfig {
  RenderPose pose;
  cam::CameraIntrinsics camera{1000.0, 1000.0, 640.0, 360.0};
  overlay::Viewport viewport;
  overlay::TrenchSpec trench;
  overlay::RenderOptions options;
  double load_radius = 10.0;
};
RenderConfig render_config_from_json(const ordered_json& j);
ordered_json to_json(const RenderConfig& c);

/// Body orientation for a heading/pitch/roll in degrees.
Eigen::Quaterniond orientation_of(double heading_deg, double pitch_deg, double roll_deg);

/// Fills unset pose fields: lon/lat default to the first pipe point in the
/// store; alt to the ground elevation of the nearest pipe point plus 1.5 m.
void resolve_pose(RenderPose& pose, const store::SpatialStore& store);

// Command bodies. Each returns a JSON report embedding the resolved config.

/// {"command","config","points","lines"} plus the two CSV documents.
struct GenOutput {
  std::string report;
  std::string points_csv;
  std::string lines_csv;
};
GenOutput run_gen(const ordered_json& config);

/// {"valid","points","lines","violations":[{"record","rule","detail"}]}.
/// Throws Error(Data) when the CSV itself does not parse.
std::string run_validate(std::string_view points_csv, std::string_view lines_csv);

std::string run_match_bench(const ordered_json& config);

struct TrackSimOutput {
  std::string report;
  /// One serialized overlay frame per line; empty without a store.
  std::string frames;
};
TrackSimOutput run_track_sim(const ordered_json& config, const store::SpatialStore* store);

struct RenderOutput {
  std::string frame;
  std::string svg;
};
RenderOutput run_render(const ordered_json& config, const store::SpatialStore& store);

}  // namespace arpps::commands
