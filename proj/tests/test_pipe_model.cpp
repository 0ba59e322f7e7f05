#include <doctest.h>

#include <cmath>
#include <set>

#include "arpps/error.hpp"
#include "arpps/pipe_model.hpp"
#include "support.hpp"

using namespace arpps;
using namespace arpps::pipe;

namespace {

std::size_t count_rule(const std::vector<Violation>& vs, const std::string& rule) {
  std::size_t n = 0;
  for (const auto& v : vs) n += v.rule == rule;
  return n;
}

Network small_network() {
  Network net;
  // North-south line about 1.1 km long.
  net.points.push_back(support::make_point(1, 120.40, 36.10));
  net.points.push_back(support::make_point(2, 120.40, 36.11));
  net.points.push_back(support::make_point(3, 120.41, 36.11));
  net.lines.push_back(support::make_line(1, net.points[0], net.points[1]));
  net.lines.push_back(support::make_line(2, net.points[1], net.points[2], PipeCategory::Sewage));
  return net;
}

}  // namespace

TEST_CASE("category codes: 13 distinct values that round-trip") {
  std::set<std::string> codes;
  for (auto c : kAllCategories) {
    const std::string code(to_string(c));
    codes.insert(code);
    REQUIRE(parse_category(code).has_value());
    CHECK(*parse_category(code) == c);
  }
  CHECK(codes.size() == 13);
  CHECK_FALSE(parse_category("Teleport").has_value());
  CHECK_FALSE(parse_category("").has_value());
  CHECK_FALSE(parse_category("sewage").has_value());
}

TEST_CASE("generator rejects bad specs") {
  NetworkSpec spec;
  spec.point_count = 0;
  CHECK_THROWS_AS(generate_network(spec), Error);

  spec = NetworkSpec{};
  spec.category_mix[0] += 1e-6;
  CHECK_THROWS_AS(generate_network(spec), Error);

  spec = NetworkSpec{};
  spec.extent = -1.0;
  CHECK_THROWS_AS(generate_network(spec), Error);
}

TEST_CASE("generator is deterministic in the seed") {
  NetworkSpec spec;
  spec.seed = 7;
  const Network a = generate_network(spec);
  const Network b = generate_network(spec);
  CHECK(a == b);
  CHECK(write_points_csv(a.points) == write_points_csv(b.points));
  CHECK(write_lines_csv(a.lines) == write_lines_csv(b.lines));

  spec.seed = 8;
  CHECK_FALSE(generate_network(spec) == a);
}

TEST_CASE("generated networks validate clean for many seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    NetworkSpec spec;
    spec.seed = seed;
    spec.point_count = 50 + seed * 13;
    const Network net = generate_network(spec);
    CHECK(net.points.size() == spec.point_count);
    const auto v = validate_network(net.points, net.lines);
    CHECK_MESSAGE(v.empty(), "seed " << seed << ": " << (v.empty() ? "" : v[0].rule + " " + v[0].detail));
  }
}

TEST_CASE("line categories follow a uniform mix (chi-square)") {
  NetworkSpec spec;
  spec.seed = 3;
  spec.point_count = 1000;
  const Network net = generate_network(spec);
  std::array<double, kCategoryCount> counts{};
  for (const auto& l : net.lines) counts[index_of(l.line_type)] += 1.0;
  const double n = static_cast<double>(net.lines.size());
  const double p = 1.0 / kCategoryCount;
  const double expected = n * p;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  double chi2 = 0.0;
  for (double c : counts) {
    CHECK(std::abs(c - expected) <= 3.0 * sigma);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 99.9th percentile of chi-square with 12 degrees of freedom.
  CHECK(chi2 < 32.909);
}

TEST_CASE("category mix with a single category") {
  NetworkSpec spec;
  spec.point_count = 100;
  spec.category_mix.fill(0.0);
  spec.category_mix[index_of(PipeCategory::NaturalGas)] = 1.0;
  for (const auto& l : generate_network(spec).lines) CHECK(l.line_type == PipeCategory::NaturalGas);
}

TEST_CASE("validate flags individual rule violations") {
  Network net = small_network();
  REQUIRE(validate_network(net.points, net.lines).empty());

  SUBCASE("dangling reference") {
    net.lines[0].end_point_id = 99;
    const auto v = validate_network(net.points, net.lines);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "dangling-reference");
    CHECK(v[0].record == "line 1");
  }
  SUBCASE("coordinate mismatch of 1e-3 degrees") {
    net.lines[0].start_x += 1e-3;
    const auto v = validate_network(net.points, net.lines);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "coordinate-mismatch");
  }
  SUBCASE("coordinate mismatch just inside tolerance is accepted") {
    net.lines[0].start_x += 5e-10;
    CHECK(validate_network(net.points, net.lines).empty());
  }
  SUBCASE("duplicate ids") {
    net.points.push_back(net.points[0]);
    CHECK(count_rule(validate_network(net.points, net.lines), "duplicate-id") == 1);
  }
  SUBCASE("self loop") {
    net.lines[0].end_point_id = net.lines[0].start_point_id;
    net.lines[0].end_x = net.lines[0].start_x;
    net.lines[0].end_y = net.lines[0].start_y;
    CHECK(count_rule(validate_network(net.points, net.lines), "self-loop") == 1);
  }
  SUBCASE("ranges") {
    net.points[2].rotation_angle = 360.0;
    net.points[1].well_bottom_depth = -0.1;
    net.lines[1].diameter = 0.0;
    const auto v = validate_network(net.points, net.lines);
    CHECK(count_rule(v, "rotation-range") == 1);
    CHECK(count_rule(v, "negative-depth") == 1);
    CHECK(count_rule(v, "diameter") == 1);
  }
  SUBCASE("length off by more than 5 percent") {
    net.lines[0].length *= 1.06;
    CHECK(count_rule(validate_network(net.points, net.lines), "length-mismatch") == 1);
    net.lines[0].length = net.lines[0].length / 1.06 * 1.04;
    CHECK(validate_network(net.points, net.lines).empty());
  }
}

TEST_CASE("csv: empty bodies and exact round trip") {
  const std::string ph = write_points_csv({});
  const std::string lh = write_lines_csv({});
  const Network empty = parse_csv(ph, lh);
  CHECK(empty.points.empty());
  CHECK(empty.lines.empty());

  Network net = small_network();
  net.points[0].point_number = "P,\"quoted\"";
  net.points[0].ground_elevation = 0.1 + 0.2;
  net.lines[0].length = std::nextafter(net.lines[0].length, 1e9);
  const Network back = parse_csv(write_points_csv(net.points), write_lines_csv(net.lines));
  CHECK(back == net);
  CHECK(write_points_csv(back.points) == write_points_csv(net.points));
}

TEST_CASE("csv: one row per file") {
  Network net = small_network();
  net.points.resize(2);
  net.lines.resize(1);
  const Network back = parse_csv(write_points_csv(net.points), write_lines_csv(net.lines));
  CHECK(back.points.size() == 2);
  CHECK(back.lines.size() == 1);
  CHECK(back == net);
}

TEST_CASE("csv: round trip of generated networks") {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    NetworkSpec spec;
    spec.seed = seed;
    spec.point_count = 200;
    const Network net = generate_network(spec);
    CHECK(parse_csv(write_points_csv(net.points), write_lines_csv(net.lines)) == net);
  }
}

TEST_CASE("csv: errors name the row and column") {
  Network net = small_network();
  const std::string points = write_points_csv(net.points);
  std::string lines = write_lines_csv({net.lines[0]});

  SUBCASE("unknown category") {
    const auto pos = lines.find("FeedWater");
    lines.replace(pos, 9, "Teleport");
    try {
      parse_csv(points, lines);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
      const std::string msg = e.what();
      CHECK(msg.find("row 1") != std::string::npos);
      CHECK(msg.find("Teleport") != std::string::npos);
    }
  }
  SUBCASE("bad number") {
    const auto pos = lines.find(",300,");
    lines.replace(pos, 5, ",3x0,");
    try {
      parse_csv(points, lines);
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 1") != std::string::npos);
      CHECK(msg.find("diameter") != std::string::npos);
    }
  }
  SUBCASE("header mismatch") {
    std::string bad = points;
    bad.replace(0, 9, "objectid");
    CHECK_THROWS_AS(parse_csv(bad, lines), Error);
  }
  SUBCASE("wrong field count") {
    CHECK_THROWS_AS(parse_csv(points + "1,2\n", lines), Error);
  }
}

TEST_CASE("csv: decimal parsing is locale independent and rejects junk") {
  Network net = small_network();
  std::string points = write_points_csv(net.points);
  const auto pos = points.find("120.4,");
  REQUIRE(pos != std::string::npos);
  std::string comma = points;
  comma.replace(pos, 5, "120\xC2\xB7" "4");
  CHECK_THROWS_AS(parse_csv(comma, write_lines_csv({})), Error);
  std::string nan = points;
  nan.replace(pos, 5, "nan");
  CHECK_THROWS_AS(parse_csv(nan, write_lines_csv({})), Error);
}

TEST_CASE("csv files on disk") {
  const auto dir = support::scratch_dir("pipe_model");
  const Network net = small_network();
  write_network_files(net, (dir / "pipe_points.csv").string(), (dir / "pipe_lines.csv").string());
  CHECK(read_network_files((dir / "pipe_points.csv").string(), (dir / "pipe_lines.csv").string()) == net);
  CHECK_THROWS_AS(read_network_files((dir / "missing.csv").string(), (dir / "pipe_lines.csv").string()),
                  Error);
}
