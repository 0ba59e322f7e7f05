#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "arpps/error.hpp"
#include "arpps/rng.hpp"
#include "arpps/spatial_store.hpp"
#include "support.hpp"

using namespace arpps;
using namespace arpps::store;
using geo::BBox;

namespace {

// Independent segment/rectangle test: an endpoint inside, or the segment
// meets one of the four edges (touching counts).
int orient(double ax, double ay, double bx, double by, double cx, double cy) {
  const double v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  return (v > 0) - (v < 0);
}

bool on_segment(double ax, double ay, double bx, double by, double px, double py) {
  return std::min(ax, bx) <= px && px <= std::max(ax, bx) && std::min(ay, by) <= py &&
         py <= std::max(ay, by);
}

bool segments_meet(double ax, double ay, double bx, double by, double cx, double cy, double dx,
                   double dy) {
  const int o1 = orient(ax, ay, bx, by, cx, cy);
  const int o2 = orient(ax, ay, bx, by, dx, dy);
  const int o3 = orient(cx, cy, dx, dy, ax, ay);
  const int o4 = orient(cx, cy, dx, dy, bx, by);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(ax, ay, bx, by, cx, cy)) return true;
  if (o2 == 0 && on_segment(ax, ay, bx, by, dx, dy)) return true;
  if (o3 == 0 && on_segment(cx, cy, dx, dy, ax, ay)) return true;
  if (o4 == 0 && on_segment(cx, cy, dx, dy, bx, by)) return true;
  return false;
}

bool edge_oracle(double x0, double y0, double x1, double y1, const BBox& b) {
  if (b.contains(x0, y0) || b.contains(x1, y1)) return true;
  const double xs[4][4] = {{b.lon_min, b.lat_min, b.lon_max, b.lat_min},
                           {b.lon_max, b.lat_min, b.lon_max, b.lat_max},
                           {b.lon_max, b.lat_max, b.lon_min, b.lat_max},
                           {b.lon_min, b.lat_max, b.lon_min, b.lat_min}};
  for (const auto& e : xs) {
    if (segments_meet(x0, y0, x1, y1, e[0], e[1], e[2], e[3])) return true;
  }
  return false;
}

pipe::Network random_network(std::uint64_t seed, int points, int lines) {
  Rng rng(seed);
  pipe::Network net;
  for (int i = 0; i < points; ++i) {
    net.points.push_back(support::make_point(i + 1, 120.4 + rng.uniform(-0.01, 0.01),
                                             36.1 + rng.uniform(-0.01, 0.01)));
  }
  for (int i = 0; i < lines; ++i) {
    const auto a = rng.below(static_cast<std::uint64_t>(points));
    auto b = rng.below(static_cast<std::uint64_t>(points - 1));
    if (b >= a) ++b;
    net.lines.push_back(support::make_line(i + 1, net.points[a], net.points[b]));
  }
  return net;
}

BBox random_box(Rng& rng, double lon0, double lat0, double span) {
  const double x0 = lon0 + rng.uniform(-span, span);
  const double y0 = lat0 + rng.uniform(-span, span);
  const double w = rng.uniform(0.0, span);
  const double h = rng.uniform(0.0, span);
  return {x0, y0, x0 + w, y0 + h};
}

}  // namespace

TEST_CASE("segment predicate agrees with the edge oracle on a lattice") {
  // Small integer lattice hits collinear, touching and corner cases.
  const BBox b{2, 2, 5, 4};
  int hits = 0;
  for (int x0 = 0; x0 <= 7; ++x0)
    for (int y0 = 0; y0 <= 6; ++y0)
      for (int x1 = 0; x1 <= 7; ++x1)
        for (int y1 = 0; y1 <= 6; ++y1) {
          const bool want = edge_oracle(x0, y0, x1, y1, b);
          hits += want;
          REQUIRE_MESSAGE(segment_intersects_box(x0, y0, x1, y1, b) == want,
                          x0 << "," << y0 << " -> " << x1 << "," << y1);
        }
  CHECK(hits > 0);
}

TEST_CASE("segment predicate agrees with the edge oracle on random input") {
  Rng rng(21);
  for (int i = 0; i < 200000; ++i) {
    const BBox b = random_box(rng, 0.0, 0.0, 1.0);
    const double x0 = rng.uniform(-2, 2), y0 = rng.uniform(-2, 2);
    const double x1 = rng.uniform(-2, 2), y1 = rng.uniform(-2, 2);
    REQUIRE(segment_intersects_box(x0, y0, x1, y1, b) == edge_oracle(x0, y0, x1, y1, b));
  }
}

TEST_CASE("segment cases") {
  const BBox b{0, 0, 1, 1};
  CHECK(segment_intersects_box(0.2, 0.2, 0.8, 0.8, b));     // inside
  CHECK(segment_intersects_box(-1, 0.5, 2, 0.6, b));         // crosses, both ends out
  CHECK(segment_intersects_box(-0.5, 0.5, 0.5, 1.5, b));     // cuts a corner
  CHECK(segment_intersects_box(-1, 1, 1, -1, b));            // touches a corner
  CHECK(segment_intersects_box(-1, 1, 2, 1, b));             // runs along the top edge
  CHECK_FALSE(segment_intersects_box(-1, 0.6, 0.3, 2, b));   // misses the corner
  CHECK_FALSE(segment_intersects_box(2, 2, 3, 3, b));
  CHECK_FALSE(segment_intersects_box(-1, 1.0000001, 2, 1.0000001, b));
}

TEST_CASE("empty store") {
  const SpatialStore s = SpatialStore::load({}, {});
  CHECK(s.size() == 0);
  CHECK(s.epoch() == 1);
  CHECK_FALSE(s.extent().valid());
  CHECK(s.query_bbox({-180, -90, 180, 90}).empty());
  CHECK(s.query_brute_force({-180, -90, 180, 90}).empty());
  CHECK(s.index_consistent());
}

TEST_CASE("single point") {
  const auto p = support::make_point(5, 1.0, 2.0);
  const SpatialStore s = SpatialStore::load({p}, {});
  const auto r = s.query_brute_force({0, 0, 3, 3});
  REQUIRE(r.size() == 1);
  CHECK(r[0] == FeatureId{FeatureKind::Point, 5});
  CHECK(s.query_bbox({0, 0, 3, 3}) == r);
  CHECK(s.query_bbox({1, 2, 1, 2}) == r);  // degenerate box on the point
  CHECK(s.query_bbox({1.5, 0, 3, 3}).empty());
  REQUIRE(s.point(5) != nullptr);
  CHECK(*s.point(5) == p);
  CHECK(s.point(6) == nullptr);
  CHECK(s.line(5) == nullptr);
}

TEST_CASE("whole extent returns every feature") {
  pipe::NetworkSpec spec;
  spec.point_count = 400;
  const auto net = pipe::generate_network(spec);
  const std::size_t total = net.points.size() + net.lines.size();
  const SpatialStore s = SpatialStore::load(net.points, net.lines);
  CHECK(s.size() == total);
  CHECK(s.query_bbox(s.extent()).size() == total);
  CHECK(s.index_consistent());
  const auto all = s.query_bbox(s.extent());
  CHECK(std::is_sorted(all.begin(), all.end()));
  CHECK(all.front().kind == FeatureKind::Point);
  CHECK(all.back().kind == FeatureKind::Line);
}

TEST_CASE("load rejects invalid networks listing violations") {
  auto net = random_network(1, 10, 5);
  net.lines[2].end_point_id = 1000;
  try {
    SpatialStore::load(net.points, net.lines);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("dangling-reference") != std::string::npos);
  }
}

TEST_CASE("indexed query equals brute force on random segments") {
  const auto net = random_network(9, 600, 1500);
  const SpatialStore s = SpatialStore::load(net.points, net.lines);
  Rng rng(10);
  for (int i = 0; i < 500; ++i) {
    const BBox b = random_box(rng, 120.4, 36.1, 0.012 * rng.uniform());
    const auto fast = s.query_bbox(b);
    REQUIRE(fast == s.query_brute_force(b));
  }
}

TEST_CASE("degenerate boxes agree in both paths") {
  const auto net = random_network(4, 100, 300);
  const SpatialStore s = SpatialStore::load(net.points, net.lines);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto& l = net.lines[rng.below(net.lines.size())];
    const double t = rng.uniform();
    const double x = l.start_x + t * (l.end_x - l.start_x);
    const double y = l.start_y + t * (l.end_y - l.start_y);
    const BBox zero{x, y, x, y};
    CHECK(s.query_bbox(zero) == s.query_brute_force(zero));
    const BBox hline{120.39, y, 120.41, y};
    CHECK(s.query_bbox(hline) == s.query_brute_force(hline));
  }
  for (const auto& p : net.points) {
    const auto r = s.query_bbox({p.x, p.y, p.x, p.y});
    CHECK(std::binary_search(r.begin(), r.end(), FeatureId{FeatureKind::Point, p.object_id}));
  }
}

TEST_CASE("query results are monotone in the box") {
  const auto net = random_network(6, 300, 600);
  const SpatialStore s = SpatialStore::load(net.points, net.lines);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const BBox inner = random_box(rng, 120.4, 36.1, 0.005);
    const BBox outer{inner.lon_min - rng.uniform(0, 0.003), inner.lat_min - rng.uniform(0, 0.003),
                     inner.lon_max + rng.uniform(0, 0.003), inner.lat_max + rng.uniform(0, 0.003)};
    const auto a = s.query_bbox(inner);
    const auto b = s.query_bbox(outer);
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST_CASE("loading twice gives identical answers") {
  const auto net = random_network(7, 200, 400);
  const SpatialStore a = SpatialStore::load(net.points, net.lines);
  auto shuffled = net;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  std::reverse(shuffled.lines.begin(), shuffled.lines.end());
  const SpatialStore b = SpatialStore::load(shuffled.points, shuffled.lines);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const BBox box = random_box(rng, 120.4, 36.1, 0.01);
    CHECK(a.query_bbox(box) == b.query_bbox(box));
  }
  CHECK(a.points() == b.points());
}

TEST_CASE("snapshot round trip") {
  const auto dir = support::scratch_dir("store_snapshot");
  pipe::NetworkSpec spec;
  spec.point_count = 300;
  const auto net = pipe::generate_network(spec);
  const SpatialStore a = SpatialStore::load(net.points, net.lines, 4);
  const std::string path = (dir / "store.snap").string();
  a.save_snapshot(path);
  const SpatialStore b = SpatialStore::load_snapshot(path);
  CHECK(b.epoch() == 4);
  CHECK(b.points() == a.points());
  CHECK(b.lines() == a.lines());
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const BBox box = random_box(rng, 120.4, 36.1, 0.006);
    CHECK(a.query_bbox(box) == b.query_bbox(box));
  }

  SUBCASE("empty store") {
    const SpatialStore e = SpatialStore::load({}, {});
    e.save_snapshot(path);
    CHECK(SpatialStore::load_snapshot(path).size() == 0);
  }
  SUBCASE("quoted text fields survive") {
    auto pts = net.points;
    pts[0].lid_material = "cast \"iron\",\nlined";
    const SpatialStore q = SpatialStore::load(pts, net.lines);
    q.save_snapshot(path);
    CHECK(SpatialStore::load_snapshot(path).points() == q.points());
  }
  SUBCASE("corrupt header") {
    std::ofstream(path) << "ARPPS-STORE 99\nepoch 1\n";
    try {
      SpatialStore::load_snapshot(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
    std::ofstream(path) << "garbage";
    CHECK_THROWS_AS(SpatialStore::load_snapshot(path), Error);
  }
  SUBCASE("missing file") {
    try {
      SpatialStore::load_snapshot((dir / "nope").string());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
  }
}
