#include "arpps/pipe_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "arpps/error.hpp"
#include "arpps/rng.hpp"
#include "csv.hpp"

namespace arpps::pipe {
namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryCodes = {
    "CoveredChannel", "PowerLineCarrier", "PowerSupply", "MonitoringSignal", "StreetLamp",
    "HotWater",       "FeedWater",        "NaturalGas",  "Communication",    "Sewage",
    "Rainwater",      "Integrated",       "ReclaimedWater",
};

// Rounds to a decimal step given as 10^-k, so the result prints exactly.
double round_to(double v, double step) {
  const double inv = std::round(1.0 / step);
  return std::round(v * inv) / inv;
}

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& options) {
  return std::string(options[rng.below(N)]);
}

std::string material_for(PipeCategory c, Rng& rng) {
  switch (c) {
    case PipeCategory::PowerLineCarrier:
    case PipeCategory::PowerSupply:
    case PipeCategory::MonitoringSignal:
    case PipeCategory::StreetLamp:
    case PipeCategory::Communication:
      return pick(rng, std::array<std::string_view, 3>{"PVC", "HDPE", "steel"});
    case PipeCategory::HotWater:
    case PipeCategory::NaturalGas:
      return pick(rng, std::array<std::string_view, 2>{"steel", "PE"});
    case PipeCategory::FeedWater:
    case PipeCategory::ReclaimedWater:
      return pick(rng, std::array<std::string_view, 2>{"ductile_iron", "PE"});
    default:
      return pick(rng, std::array<std::string_view, 3>{"concrete", "HDPE", "brick"});
  }
}

void validate_spec(const NetworkSpec& spec) {
  if (spec.point_count == 0) {
    throw Error(ErrorKind::InvalidArgument, "network spec: point_count must be > 0");
  }
  if (!(spec.extent > 0.0) || !std::isfinite(spec.extent)) {
    throw Error(ErrorKind::InvalidArgument, "network spec: extent must be positive");
  }
  if (!geo::valid_geo(spec.center) || std::abs(spec.center.lat) >= 89.0) {
    throw Error(ErrorKind::InvalidArgument, "network spec: center out of range");
  }
  double sum = 0.0;
  for (double w : spec.category_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::InvalidArgument, "network spec: category weights must be >= 0");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "network spec: category weights must sum to 1");
  }
}

PipeCategory draw_category(const NetworkSpec& spec, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (spec.category_mix[i] <= 0.0) continue;
    last_nonzero = i;
    acc += spec.category_mix[i];
    if (u < acc) return kAllCategories[i];
  }
  return kAllCategories[last_nonzero];
}

}  // namespace

std::string_view to_string(PipeCategory c) noexcept { return kCategoryCodes[index_of(c)]; }

std::optional<PipeCategory> parse_category(std::string_view code) noexcept {
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (kCategoryCodes[i] == code) return kAllCategories[i];
  }
  return std::nullopt;
}

Network generate_network(const NetworkSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);

  const std::size_t n = spec.point_count;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const double step_e = spec.extent / static_cast<double>(cols);
  const double step_n = spec.extent / static_cast<double>(rows);
  const double half = spec.extent / 2.0;

  Network net;
  net.points.reserve(n);
  // grid index -> position in net.points
  std::vector<std::vector<std::ptrdiff_t>> grid(rows, std::vector<std::ptrdiff_t>(cols, -1));

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = k / cols;
    const std::size_t c = k % cols;
    const double e = -half + (static_cast<double>(c) + 0.5) * step_e +
                     rng.uniform(-0.2, 0.2) * step_e;
    const double nn = -half + (static_cast<double>(r) + 0.5) * step_n +
                      rng.uniform(-0.2, 0.2) * step_n;
    const geo::GeoPoint g = geo::geo_from_enu(spec.center, {e, nn, 0.0});

    PipePoint p;
    p.object_id = static_cast<std::int64_t>(k + 1);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "P%07zu", k + 1);
    p.point_number = buf;
    p.x = g.lon;
    p.y = g.lat;
    p.ground_elevation =
        round_to(10.0 + 3.0 * std::sin(e / 200.0) + 2.0 * std::cos(nn / 300.0) +
                     rng.normal(0.0, 0.05),
                 0.001);
    p.feature_kind =
        pick(rng, std::array<std::string_view, 5>{"manhole", "valve", "junction", "inlet", "tee"});
    p.attached_object =
        pick(rng, std::array<std::string_view, 4>{"well", "none", "meter", "hydrant"});
    p.well_bottom_depth = round_to(rng.uniform(1.0, 4.0), 0.01);
    p.lid_type = pick(rng, std::array<std::string_view, 2>{"round", "square"});
    p.lid_spec = pick(rng, std::array<std::string_view, 3>{"D700", "600x600", "D800"});
    p.lid_material =
        pick(rng, std::array<std::string_view, 3>{"cast_iron", "concrete", "composite"});
    p.offset_distance = round_to(rng.uniform(0.0, 0.5), 0.01);
    p.rotation_angle = std::floor(rng.uniform(0.0, 360.0) * 10.0) / 10.0;
    grid[r][c] = static_cast<std::ptrdiff_t>(net.points.size());
    net.points.push_back(std::move(p));
  }

  std::int64_t next_line_id = 1;
  auto connect = [&](std::ptrdiff_t a, std::ptrdiff_t b) {
    const PipePoint& pa = net.points[static_cast<std::size_t>(a)];
    const PipePoint& pb = net.points[static_cast<std::size_t>(b)];
    PipeLine l;
    l.object_id = next_line_id++;
    l.start_point_id = pa.object_id;
    l.end_point_id = pb.object_id;
    l.start_depth = round_to(rng.uniform(0.8, 3.0), 0.01);
    l.end_depth = round_to(rng.uniform(0.8, 3.0), 0.01);
    l.start_elevation = pa.ground_elevation;
    l.end_elevation = pb.ground_elevation;
    l.start_x = pa.x;
    l.start_y = pa.y;
    l.end_x = pb.x;
    l.end_y = pb.y;
    l.line_type = draw_category(spec, rng);
    l.material = material_for(l.line_type, rng);
    l.burial_method =
        pick(rng, std::array<std::string_view, 4>{"direct", "trench", "pipe_jacking", "culvert"});
    l.diameter = std::array<double, 7>{100, 150, 200, 300, 400, 600, 800}[rng.below(7)];
    const double dist = geo::haversine({pa.x, pa.y, 0.0}, {pb.x, pb.y, 0.0});
    l.length = std::max(round_to(dist, 0.001), 0.001);
    net.lines.push_back(std::move(l));
  };

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (grid[r][c] < 0) continue;
      if (c + 1 < cols && grid[r][c + 1] >= 0) connect(grid[r][c], grid[r][c + 1]);
      if (r + 1 < rows && grid[r + 1][c] >= 0) connect(grid[r][c], grid[r + 1][c]);
    }
  }
  return net;
}

std::vector<Violation> validate_network(const std::vector<PipePoint>& points,
                                        const std::vector<PipeLine>& lines) {
  std::vector<Violation> out;
  auto add = [&](std::string record, std::string rule, std::string detail) {
    out.push_back({std::move(record), std::move(rule), std::move(detail)});
  };

  std::unordered_map<std::int64_t, const PipePoint*> by_id;
  for (const auto& p : points) {
    const std::string rec = "point " + std::to_string(p.object_id);
    if (!by_id.emplace(p.object_id, &p).second) add(rec, "duplicate-id", "object_id repeated");
    if (!(p.x >= -180.0 && p.x <= 180.0)) add(rec, "lon-range", "x outside [-180, 180]");
    if (!(p.y >= -90.0 && p.y <= 90.0)) add(rec, "lat-range", "y outside [-90, 90]");
    if (!std::isfinite(p.ground_elevation) || !std::isfinite(p.offset_distance)) {
      add(rec, "non-finite", "elevation or offset not finite");
    }
    if (!(p.well_bottom_depth >= 0.0)) add(rec, "negative-depth", "well_bottom_depth < 0");
    if (!(p.rotation_angle >= 0.0 && p.rotation_angle < 360.0)) {
      add(rec, "rotation-range", "rotation_angle outside [0, 360)");
    }
  }

  std::set<std::int64_t> line_ids;
  for (const auto& l : lines) {
    const std::string rec = "line " + std::to_string(l.object_id);
    if (!line_ids.insert(l.object_id).second) add(rec, "duplicate-id", "object_id repeated");
    if (l.start_point_id == l.end_point_id) {
      add(rec, "self-loop", "start_point_id equals end_point_id");
    }
    const auto check_end = [&](std::int64_t id, double x, double y, const char* which) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        add(rec, "dangling-reference",
            std::string(which) + " point " + std::to_string(id) + " does not exist");
        return;
      }
      if (!(std::abs(it->second->x - x) <= 1e-9 && std::abs(it->second->y - y) <= 1e-9)) {
        add(rec, "coordinate-mismatch",
            std::string(which) + " coordinates differ from point " + std::to_string(id));
      }
    };
    check_end(l.start_point_id, l.start_x, l.start_y, "start");
    check_end(l.end_point_id, l.end_x, l.end_y, "end");
    for (double c : {l.start_x, l.end_x}) {
      if (!(c >= -180.0 && c <= 180.0)) add(rec, "lon-range", "endpoint x outside [-180, 180]");
    }
    for (double c : {l.start_y, l.end_y}) {
      if (!(c >= -90.0 && c <= 90.0)) add(rec, "lat-range", "endpoint y outside [-90, 90]");
    }
    if (!(l.start_depth >= 0.0 && l.end_depth >= 0.0)) add(rec, "negative-depth", "depth < 0");
    if (!std::isfinite(l.start_elevation) || !std::isfinite(l.end_elevation)) {
      add(rec, "non-finite", "elevation not finite");
    }
    if (!(l.diameter > 0.0)) add(rec, "diameter", "diameter must be > 0");
    if (!(l.length > 0.0)) {
      add(rec, "length", "length must be > 0");
    } else if (std::abs(l.start_y) <= 90.0 && std::abs(l.end_y) <= 90.0) {
      const double geodesic = geo::haversine({l.start_x, l.start_y, 0}, {l.end_x, l.end_y, 0});
      // Sub-millimeter segments are dominated by length rounding.
      if (geodesic > 0.01 && std::abs(l.length - geodesic) > 0.05 * geodesic) {
        add(rec, "length-mismatch",
            "length " + csv::format_double(l.length) + " vs geodesic " +
                csv::format_double(geodesic));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

const std::vector<std::string_view> kPointColumns = {
    "object_id",       "point_number", "x",        "y",
    "ground_elevation", "feature_kind", "attached_object", "well_bottom_depth",
    "lid_type",        "lid_spec",     "lid_material",    "offset_distance",
    "rotation_angle",
};

const std::vector<std::string_view> kLineColumns = {
    "object_id",     "start_point_id", "end_point_id", "start_depth", "end_depth",
    "start_elevation", "end_elevation", "start_x",     "start_y",     "end_x",
    "end_y",         "material",       "burial_method", "line_type",  "diameter",
    "length",
};

namespace {

class RowReader {
 public:
  RowReader(const char* file, std::size_t row, const csv::Row& cells,
            const std::vector<std::string_view>& cols)
      : file_(file), row_(row), cells_(cells), cols_(cols) {}

  const std::string& str(std::size_t col) const { return cells_[col]; }

  double num(std::size_t col) const {
    double v;
    if (!csv::parse_double(cells_[col], v)) fail(col, "unparseable number '" + cells_[col] + "'");
    return v;
  }

  std::int64_t integer(std::size_t col) const {
    std::int64_t v;
    if (!csv::parse_int(cells_[col], v)) fail(col, "unparseable integer '" + cells_[col] + "'");
    return v;
  }

  [[noreturn]] void fail(std::size_t col, const std::string& what) const {
    throw Error(ErrorKind::Data, std::string(file_) + ": row " + std::to_string(row_) +
                                     ", column " + std::to_string(col + 1) + " (" +
                                     std::string(cols_[col]) + "): " + what);
  }

 private:
  const char* file_;
  std::size_t row_;
  const csv::Row& cells_;
  const std::vector<std::string_view>& cols_;
};

std::vector<csv::Row> body_rows(std::string_view text, const char* file,
                                const std::vector<std::string_view>& cols) {
  std::vector<csv::Row> rows = csv::parse(text);
  if (!rows.empty() && !rows[0].empty()) {
    // Tolerate a UTF-8 byte order mark.
    std::string& first = rows[0][0];
    if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  }
  if (rows.empty() || rows[0].size() != cols.size() ||
      !std::equal(cols.begin(), cols.end(), rows[0].begin())) {
    throw Error(ErrorKind::Data, std::string(file) + ": header does not match schema");
  }
  rows.erase(rows.begin());
  std::erase_if(rows, [](const csv::Row& r) { return r.size() == 1 && r[0].empty(); });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols.size()) {
      throw Error(ErrorKind::Data, std::string(file) + ": row " + std::to_string(i + 1) +
                                       " has " + std::to_string(rows[i].size()) +
                                       " fields, expected " + std::to_string(cols.size()));
    }
  }
  return rows;
}

}  // namespace

Network parse_csv(std::string_view points_text, std::string_view lines_text) {
  Network net;
  const auto prow = body_rows(points_text, "pipe_points.csv", kPointColumns);
  net.points.reserve(prow.size());
  for (std::size_t i = 0; i < prow.size(); ++i) {
    RowReader r("pipe_points.csv", i + 1, prow[i], kPointColumns);
    PipePoint p;
    p.object_id = r.integer(0);
    p.point_number = r.str(1);
    p.x = r.num(2);
    p.y = r.num(3);
    p.ground_elevation = r.num(4);
    p.feature_kind = r.str(5);
    p.attached_object = r.str(6);
    p.well_bottom_depth = r.num(7);
    p.lid_type = r.str(8);
    p.lid_spec = r.str(9);
    p.lid_material = r.str(10);
    p.offset_distance = r.num(11);
    p.rotation_angle = r.num(12);
    net.points.push_back(std::move(p));
  }

  const auto lrow = body_rows(lines_text, "pipe_lines.csv", kLineColumns);
  net.lines.reserve(lrow.size());
  for (std::size_t i = 0; i < lrow.size(); ++i) {
    RowReader r("pipe_lines.csv", i + 1, lrow[i], kLineColumns);
    PipeLine l;
    l.object_id = r.integer(0);
    l.start_point_id = r.integer(1);
    l.end_point_id = r.integer(2);
    l.start_depth = r.num(3);
    l.end_depth = r.num(4);
    l.start_elevation = r.num(5);
    l.end_elevation = r.num(6);
    l.start_x = r.num(7);
    l.start_y = r.num(8);
    l.end_x = r.num(9);
    l.end_y = r.num(10);
    l.material = r.str(11);
    l.burial_method = r.str(12);
    auto cat = parse_category(r.str(13));
    if (!cat) r.fail(13, "unknown category '" + r.str(13) + "'");
    l.line_type = *cat;
    l.diameter = r.num(14);
    l.length = r.num(15);
    net.lines.push_back(std::move(l));
  }
  return net;
}

std::string write_points_csv(const std::vector<PipePoint>& points) {
  std::string out;
  csv::append_row(out, csv::Row(kPointColumns.begin(), kPointColumns.end()));
  using csv::format_double;
  for (const auto& p : points) {
    csv::append_row(out, {csv::format_int(p.object_id), p.point_number, format_double(p.x),
                          format_double(p.y), format_double(p.ground_elevation), p.feature_kind,
                          p.attached_object, format_double(p.well_bottom_depth), p.lid_type,
                          p.lid_spec, p.lid_material, format_double(p.offset_distance),
                          format_double(p.rotation_angle)});
  }
  return out;
}

std::string write_lines_csv(const std::vector<PipeLine>& lines) {
  std::string out;
  csv::append_row(out, csv::Row(kLineColumns.begin(), kLineColumns.end()));
  using csv::format_double;
  for (const auto& l : lines) {
    csv::append_row(
        out, {csv::format_int(l.object_id), csv::format_int(l.start_point_id),
              csv::format_int(l.end_point_id), format_double(l.start_depth),
              format_double(l.end_depth), format_double(l.start_elevation),
              format_double(l.end_elevation), format_double(l.start_x), format_double(l.start_y),
              format_double(l.end_x), format_double(l.end_y), l.material, l.burial_method,
              std::string(to_string(l.line_type)), format_double(l.diameter),
              format_double(l.length)});
  }
  return out;
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace

Network read_network_files(const std::string& points_path, const std::string& lines_path) {
  return parse_csv(slurp(points_path), slurp(lines_path));
}

void write_network_files(const Network& net, const std::string& points_path,
                         const std::string& lines_path) {
  spit(points_path, write_points_csv(net.points));
  spit(lines_path, write_lines_csv(net.lines));
}

}  // namespace arpps::pipe
