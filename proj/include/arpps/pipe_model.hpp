#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arpps/geodesy.hpp"

namespace arpps::pipe {

/// Functional taxonomy of the pipe network. Exactly 13 categories.
enum class PipeCategory : std::uint8_t {
  CoveredChannel,
  PowerLineCarrier,
  PowerSupply,
  MonitoringSignal,
  StreetLamp,
  HotWater,
  FeedWater,
  NaturalGas,
  Communication,
  Sewage,
  Rainwater,
  Integrated,
  ReclaimedWater,
};

inline constexpr std::size_t kCategoryCount = 13;

inline constexpr std::array<PipeCategory, kCategoryCount> kAllCategories = {
    PipeCategory::CoveredChannel, PipeCategory::PowerLineCarrier, PipeCategory::PowerSupply,
    PipeCategory::MonitoringSignal, PipeCategory::StreetLamp,      PipeCategory::HotWater,
    PipeCategory::FeedWater,        PipeCategory::NaturalGas,      PipeCategory::Communication,
    PipeCategory::Sewage,           PipeCategory::Rainwater,       PipeCategory::Integrated,
    PipeCategory::ReclaimedWater,
};

std::string_view to_string(PipeCategory c) noexcept;
std::optional<PipeCategory> parse_category(std::string_view code) noexcept;
constexpr std::size_t index_of(PipeCategory c) noexcept { return static_cast<std::size_t>(c); }

/// Manhole / fitting record. Coordinates in degrees, lengths in meters.
struct PipePoint {
  std::int64_t object_id = 0;
  std::string point_number;
  double x = 0.0;  // longitude
  double y = 0.0;  // latitude
  double ground_elevation = 0.0;
  std::string feature_kind;
  std::string attached_object;
  double well_bottom_depth = 0.0;
  std::string lid_type;
  std::string lid_spec;
  std::string lid_material;
  double offset_distance = 0.0;
  double rotation_angle = 0.0;  // degrees, [0, 360)

  bool operator==(const PipePoint&) const = default;
};

/// Straight pipe segment between two PipePoints. Elevations are ground
/// elevations at the endpoints; the centreline sits `depth` meters below.
/// Diameter in millimeters.
struct PipeLine {
  std::int64_t object_id = 0;
  std::int64_t start_point_id = 0;
  std::int64_t end_point_id = 0;
  double start_depth = 0.0;
  double end_depth = 0.0;
  double start_elevation = 0.0;
  double end_elevation = 0.0;
  double start_x = 0.0;
  double start_y = 0.0;
  double end_x = 0.0;
  double end_y = 0.0;
  std::string material;
  std::string burial_method;
  PipeCategory line_type = PipeCategory::CoveredChannel;
  double diameter = 0.0;
  double length = 0.0;

  bool operator==(const PipeLine&) const = default;
};

struct Network {
  std::vector<PipePoint> points;
  std::vector<PipeLine> lines;

  bool operator==(const Network&) const = default;
};

struct NetworkSpec {
  std::uint64_t seed = 1;
  geo::GeoPoint center{120.4, 36.1, 0.0};
  double extent = 1000.0;  // side of the covered square, meters
  std::size_t point_count = 1000;
  std::array<double, kCategoryCount> category_mix = uniform_mix();

  static constexpr std::array<double, kCategoryCount> uniform_mix() {
    std::array<double, kCategoryCount> w{};
    for (auto& v : w) v = 1.0 / kCategoryCount;
    return w;
  }
};

/// Deterministic jittered-grid street network. Points are manholes on a grid
/// of street intersections; lines connect horizontally and vertically
/// adjacent manholes. Throws InvalidArgument on a bad spec.
Network generate_network(const NetworkSpec& spec);

struct Violation {
  std::string record;  // e.g. "line 12"
  std::string rule;    // e.g. "dangling-reference"
  std::string detail;
};

std::vector<Violation> validate_network(const std::vector<PipePoint>& points,
                                        const std::vector<PipeLine>& lines);

// CSV ingestion. Column order is fixed; see docs/schema.md.
extern const std::vector<std::string_view> kPointColumns;
extern const std::vector<std::string_view> kLineColumns;

/// Throws Error(Data) naming the row and column on any malformed input.
Network parse_csv(std::string_view points_text, std::string_view lines_text);
std::string write_points_csv(const std::vector<PipePoint>& points);
std::string write_lines_csv(const std::vector<PipeLine>& lines);

Network read_network_files(const std::string& points_path, const std::string& lines_path);
void write_network_files(const Network& net, const std::string& points_path,
                         const std::string& lines_path);

}  // namespace arpps::pipe
