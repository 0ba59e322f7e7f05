#include "arpps/spatial_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "arpps/error.hpp"
#include "csv.hpp"

namespace arpps::store {
namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using BgPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using BgBox = bg::model::box<BgPoint>;
using Entry = std::pair<BgBox, FeatureId>;
using RTree = bgi::rtree<Entry, bgi::rstar<16>>;

BgBox to_bg(const geo::BBox& b) { return {{b.lon_min, b.lat_min}, {b.lon_max, b.lat_max}}; }

// Sign of the cross product (b - a) x (p - a).
int orient(double ax, double ay, double bx, double by, double px, double py) noexcept {
  const double v = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  return (v > 0.0) - (v < 0.0);
}

bool point_hits(const pipe::PipePoint& p, const geo::BBox& b) { return b.contains(p.x, p.y); }

bool line_hits(const pipe::PipeLine& l, const geo::BBox& b) {
  return segment_intersects_box(l.start_x, l.start_y, l.end_x, l.end_y, b);
}

}  // namespace

bool segment_intersects_box(double x0, double y0, double x1, double y1,
                            const geo::BBox& b) noexcept {
  if (b.contains(x0, y0) || b.contains(x1, y1)) return true;
  // Envelope rejection.
  if (std::max(x0, x1) < b.lon_min || std::min(x0, x1) > b.lon_max ||
      std::max(y0, y1) < b.lat_min || std::min(y0, y1) > b.lat_max) {
    return false;
  }
  // Envelopes overlap: the segment meets the box unless all four corners lie
  // strictly on one side of its supporting line.
  const int s1 = orient(x0, y0, x1, y1, b.lon_min, b.lat_min);
  const int s2 = orient(x0, y0, x1, y1, b.lon_max, b.lat_min);
  const int s3 = orient(x0, y0, x1, y1, b.lon_max, b.lat_max);
  const int s4 = orient(x0, y0, x1, y1, b.lon_min, b.lat_max);
  const bool all_pos = s1 > 0 && s2 > 0 && s3 > 0 && s4 > 0;
  const bool all_neg = s1 < 0 && s2 < 0 && s3 < 0 && s4 < 0;
  return !(all_pos || all_neg);
}

struct SpatialStore::Impl {
  std::vector<pipe::PipePoint> points;
  std::vector<pipe::PipeLine> lines;
  std::unordered_map<std::int64_t, std::size_t> point_index;
  std::unordered_map<std::int64_t, std::size_t> line_index;
  RTree tree;
  std::uint64_t epoch = 0;
  geo::BBox extent{1.0, 1.0, -1.0, -1.0};

  bool hits(const FeatureId& id, const geo::BBox& b) const {
    if (id.kind == FeatureKind::Point) return point_hits(points[point_index.at(id.object_id)], b);
    return line_hits(lines[line_index.at(id.object_id)], b);
  }
};

SpatialStore::SpatialStore() : impl_(std::make_unique<Impl>()) {}
SpatialStore::~SpatialStore() = default;
SpatialStore::SpatialStore(SpatialStore&&) noexcept = default;
SpatialStore& SpatialStore::operator=(SpatialStore&&) noexcept = default;

SpatialStore SpatialStore::load(std::vector<pipe::PipePoint> points,
                                std::vector<pipe::PipeLine> lines, std::uint64_t epoch) {
  const auto violations = pipe::validate_network(points, lines);
  if (!violations.empty()) {
    std::string msg = "network failed validation (" + std::to_string(violations.size()) +
                      " violations)";
    for (std::size_t i = 0; i < violations.size() && i < 20; ++i) {
      msg += "\n  " + violations[i].record + ": " + violations[i].rule + " - " +
             violations[i].detail;
    }
    throw Error(ErrorKind::Data, msg);
  }

  SpatialStore s;
  Impl& im = *s.impl_;
  im.epoch = epoch;
  im.points = std::move(points);
  im.lines = std::move(lines);
  std::sort(im.points.begin(), im.points.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
  std::sort(im.lines.begin(), im.lines.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });

  std::vector<Entry> entries;
  entries.reserve(im.points.size() + im.lines.size());
  geo::BBox ext{1.0, 1.0, -1.0, -1.0};
  bool first = true;
  auto grow = [&](double lon0, double lat0, double lon1, double lat1) {
    if (first) {
      ext = {lon0, lat0, lon1, lat1};
      first = false;
      return;
    }
    ext.lon_min = std::min(ext.lon_min, lon0);
    ext.lat_min = std::min(ext.lat_min, lat0);
    ext.lon_max = std::max(ext.lon_max, lon1);
    ext.lat_max = std::max(ext.lat_max, lat1);
  };
  for (std::size_t i = 0; i < im.points.size(); ++i) {
    const auto& p = im.points[i];
    im.point_index.emplace(p.object_id, i);
    entries.push_back({BgBox{{p.x, p.y}, {p.x, p.y}}, {FeatureKind::Point, p.object_id}});
    grow(p.x, p.y, p.x, p.y);
  }
  for (std::size_t i = 0; i < im.lines.size(); ++i) {
    const auto& l = im.lines[i];
    im.line_index.emplace(l.object_id, i);
    const double x0 = std::min(l.start_x, l.end_x), x1 = std::max(l.start_x, l.end_x);
    const double y0 = std::min(l.start_y, l.end_y), y1 = std::max(l.start_y, l.end_y);
    entries.push_back({BgBox{{x0, y0}, {x1, y1}}, {FeatureKind::Line, l.object_id}});
    grow(x0, y0, x1, y1);
  }
  im.extent = ext;
  im.tree = RTree(entries.begin(), entries.end());
  return s;
}

std::vector<FeatureId> SpatialStore::query_bbox(const geo::BBox& box) const {
  std::vector<FeatureId> out;
  if (!box.valid()) return out;
  // Boost's intersects() on boxes is closed, matching the refinement test.
  for (auto it = impl_->tree.qbegin(bgi::intersects(to_bg(box))); it != impl_->tree.qend(); ++it) {
    if (impl_->hits(it->second, box)) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FeatureId> SpatialStore::query_brute_force(const geo::BBox& box) const {
  std::vector<FeatureId> out;
  if (!box.valid()) return out;
  for (const auto& p : impl_->points) {
    if (point_hits(p, box)) out.push_back({FeatureKind::Point, p.object_id});
  }
  for (const auto& l : impl_->lines) {
    if (line_hits(l, box)) out.push_back({FeatureKind::Line, l.object_id});
  }
  return out;  // already in (kind, id) order
}

const pipe::PipePoint* SpatialStore::point(std::int64_t id) const {
  auto it = impl_->point_index.find(id);
  return it == impl_->point_index.end() ? nullptr : &impl_->points[it->second];
}

const pipe::PipeLine* SpatialStore::line(std::int64_t id) const {
  auto it = impl_->line_index.find(id);
  return it == impl_->line_index.end() ? nullptr : &impl_->lines[it->second];
}

const std::vector<pipe::PipePoint>& SpatialStore::points() const noexcept { return impl_->points; }
const std::vector<pipe::PipeLine>& SpatialStore::lines() const noexcept { return impl_->lines; }
std::uint64_t SpatialStore::epoch() const noexcept { return impl_->epoch; }
geo::BBox SpatialStore::extent() const noexcept { return impl_->extent; }

bool SpatialStore::index_consistent() const {
  std::vector<FeatureId> indexed;
  indexed.reserve(impl_->tree.size());
  for (const auto& e : impl_->tree) indexed.push_back(e.second);
  std::sort(indexed.begin(), indexed.end());
  std::vector<FeatureId> records;
  for (const auto& p : impl_->points) records.push_back({FeatureKind::Point, p.object_id});
  for (const auto& l : impl_->lines) records.push_back({FeatureKind::Line, l.object_id});
  return indexed == records && impl_->point_index.size() == impl_->points.size() &&
         impl_->line_index.size() == impl_->lines.size();
}

void SpatialStore::save_snapshot(const std::string& path) const {
  std::string out = "ARPPS-STORE " + std::to_string(kSnapshotVersion) + "\n";
  out += "epoch " + std::to_string(impl_->epoch) + "\n";
  out += "points " + std::to_string(impl_->points.size()) + "\n";
  out += pipe::write_points_csv(impl_->points);
  out += "lines " + std::to_string(impl_->lines.size()) + "\n";
  out += pipe::write_lines_csv(impl_->lines);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write snapshot " + path);
  f << out;
  if (!f) throw Error(ErrorKind::Io, "write failed for snapshot " + path);
}

namespace {

std::size_t parse_count_line(std::string_view line, std::string_view key, const std::string& path) {
  std::int64_t v = -1;
  if (line.substr(0, key.size() + 1) != std::string(key) + " " ||
      !csv::parse_int(line.substr(key.size() + 1), v) || v < 0) {
    throw Error(ErrorKind::Data, "snapshot " + path + ": malformed '" + std::string(key) + "' line");
  }
  return static_cast<std::size_t>(v);
}

// Returns the next line (without terminator) and advances pos.
std::string_view next_line(std::string_view text, std::size_t& pos) {
  const std::size_t nl = text.find('\n', pos);
  const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
  std::string_view line = text.substr(pos, end - pos);
  pos = nl == std::string_view::npos ? text.size() : nl + 1;
  return line;
}

// Consumes a header row plus `count` CSV records. A record continues onto
// the next line while it has an unbalanced quote.
std::string_view take_lines(std::string_view text, std::size_t& pos, std::size_t count) {
  const std::size_t start = pos;
  for (std::size_t i = 0; i < count + 1; ++i) {
    bool open = false;
    do {
      if (pos >= text.size()) throw Error(ErrorKind::Data, "snapshot truncated");
      const std::string_view line = next_line(text, pos);
      if (std::count(line.begin(), line.end(), '"') % 2 == 1) open = !open;
    } while (open);
  }
  return text.substr(start, pos - start);
}

}  // namespace

SpatialStore SpatialStore::load_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open snapshot " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  std::size_t pos = 0;
  const std::string expected = "ARPPS-STORE " + std::to_string(kSnapshotVersion);
  const std::string_view header = next_line(text, pos);
  if (header != expected) {
    throw Error(ErrorKind::Data, "snapshot " + path + ": version mismatch (header '" +
                                     std::string(header.substr(0, 40)) + "', expected '" +
                                     expected + "')");
  }
  std::int64_t epoch = 0;
  const std::string_view epoch_line = next_line(text, pos);
  if (epoch_line.substr(0, 6) != "epoch " || !csv::parse_int(epoch_line.substr(6), epoch) ||
      epoch < 0) {
    throw Error(ErrorKind::Data, "snapshot " + path + ": malformed 'epoch' line");
  }
  const std::size_t np = parse_count_line(next_line(text, pos), "points", path);
  const std::string_view points_csv = take_lines(text, pos, np);
  const std::size_t nl = parse_count_line(next_line(text, pos), "lines", path);
  const std::string_view lines_csv = take_lines(text, pos, nl);
  pipe::Network net = pipe::parse_csv(points_csv, lines_csv);
  if (net.points.size() != np || net.lines.size() != nl) {
    throw Error(ErrorKind::Data, "snapshot " + path + ": record count mismatch");
  }
  return load(std::move(net.points), std::move(net.lines), static_cast<std::uint64_t>(epoch));
}

}  // namespace arpps::store
