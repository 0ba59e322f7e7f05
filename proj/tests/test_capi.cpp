#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "arpps/arpps.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  arpps_string_free(s);
  return out;
}

struct Generated {
  std::string points;
  std::string lines;
};

Generated generate(const char* cfg = R"({"seed": 3, "points": 120})") {
  char *report = nullptr, *points = nullptr, *lines = nullptr;
  REQUIRE(arpps_generate(cfg, &report, &points, &lines) == ARPPS_OK);
  CHECK(take(report).find("\"points\": 120") != std::string::npos);
  return {take(points), take(lines)};
}

arpps_store* open_store(const Generated& g) {
  arpps_store* s = nullptr;
  REQUIRE(arpps_store_open_csv(g.points.c_str(), g.lines.c_str(), 1, &s) == ARPPS_OK);
  REQUIRE(s != nullptr);
  return s;
}

}  // namespace

TEST_CASE("version and empty last error") {
  CHECK(std::strlen(arpps_version()) > 0);
  CHECK(std::string(arpps_last_error()).empty());
}

TEST_CASE("generate is deterministic and validates") {
  const auto a = generate();
  const auto b = generate();
  CHECK(a.points == b.points);
  CHECK(a.lines == b.lines);
  CHECK(a.points.rfind("object_id,", 0) == 0);

  char* report = nullptr;
  REQUIRE(arpps_validate(a.points.c_str(), a.lines.c_str(), &report) == ARPPS_OK);
  CHECK(take(report).find("\"valid\": true") != std::string::npos);

  char *r = nullptr, *p = nullptr, *l = nullptr;
  CHECK(arpps_generate(R"({"points": 0})", &r, &p, &l) == ARPPS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(arpps_last_error()).find("point") != std::string::npos);
  CHECK(arpps_generate("{not json", &r, &p, &l) == ARPPS_ERR_INVALID_ARGUMENT);
  CHECK(arpps_generate(nullptr, nullptr, nullptr, nullptr) == ARPPS_OK);
  CHECK(arpps_validate("garbage", "garbage", &report) == ARPPS_ERR_DATA);
}

TEST_CASE("store queries") {
  const auto g = generate();
  arpps_store* s = open_store(g);
  size_t np = 0, nl = 0;
  REQUIRE(arpps_store_counts(s, &np, &nl) == ARPPS_OK);
  CHECK(np == 120);
  CHECK(nl > 0);

  double ext[4];
  REQUIRE(arpps_store_extent(s, ext) == ARPPS_OK);
  CHECK(ext[0] < ext[2]);
  char* geojson = nullptr;
  REQUIRE(arpps_store_query(s, ext, &geojson) == ARPPS_OK);
  const std::string all = take(geojson);
  CHECK(all.rfind(R"({"type":"FeatureCollection","features":[)", 0) == 0);

  char range[200];
  std::snprintf(range, sizeof(range), "%.17g,%.17g,%.17g,%.17g", ext[0], ext[1], ext[2], ext[3]);
  int status = 0;
  char* body = nullptr;
  REQUIRE(arpps_store_query_range(s, range, &status, &body) == ARPPS_OK);
  CHECK(status == 200);
  CHECK(take(body) == all);
  REQUIRE(arpps_store_query_range(s, "1,2,3", &status, &body) == ARPPS_OK);
  CHECK(status == 400);
  CHECK(take(body).find("4") != std::string::npos);

  const double inverted[4] = {1, 1, 0, 0};
  CHECK(arpps_store_query(s, inverted, &geojson) == ARPPS_ERR_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path() / "arpps_test_capi";
  std::filesystem::create_directories(dir);
  const std::string snap = (dir / "store.snap").string();
  REQUIRE(arpps_store_save_snapshot(s, snap.c_str()) == ARPPS_OK);
  arpps_store* s2 = nullptr;
  REQUIRE(arpps_store_open_snapshot(snap.c_str(), &s2) == ARPPS_OK);
  REQUIRE(arpps_store_query(s2, ext, &geojson) == ARPPS_OK);
  CHECK(take(geojson) == all);
  arpps_store_free(s2);
  CHECK(arpps_store_open_snapshot((dir / "missing").string().c_str(), &s2) == ARPPS_ERR_IO);
  arpps_store_free(s);
  arpps_store_free(nullptr);

  arpps_store* bad = nullptr;
  const std::string broken_lines = g.lines + "999,1,424242,1,1,1,1,0,0,0,0,PE,direct,Sewage,100,1\n";
  CHECK(arpps_store_open_csv(g.points.c_str(), broken_lines.c_str(), 1, &bad) == ARPPS_ERR_DATA);
  CHECK(bad == nullptr);
}

TEST_CASE("bbox from fix") {
  double out[4];
  REQUIRE(arpps_bbox_from_fix(0.0, 0.0, 10.0, out) == ARPPS_OK);
  CHECK(out[3] == doctest::Approx(8.9932e-5).epsilon(1e-4));
  CHECK(arpps_bbox_from_fix(0.0, 0.0, -1.0, out) == ARPPS_ERR_INVALID_ARGUMENT);
}

TEST_CASE("service lifecycle") {
  const auto g = generate();
  arpps_store* s = open_store(g);
  arpps_service* svc = nullptr;
  REQUIRE(arpps_service_start(s, "127.0.0.1", 0, nullptr, nullptr, &svc) == ARPPS_OK);
  // The service holds its own reference.
  arpps_store_free(s);
  CHECK(arpps_service_port(svc) > 0);
  arpps_service* clash = nullptr;
  CHECK(arpps_service_start(nullptr, "127.0.0.1", 0, nullptr, nullptr, &clash) == ARPPS_ERR_INVALID_ARGUMENT);
  arpps_service_stop(svc);
  arpps_service_stop(nullptr);
}

TEST_CASE("bench, tracking and rendering") {
  char* report = nullptr;
  REQUIRE(arpps_match_bench(R"({"instances": 2})", &report) == ARPPS_OK);
  CHECK(take(report).find("\"instances\": [") != std::string::npos);
  CHECK(arpps_match_bench(R"({"m": 6, "n": 6, "oracle": "exhaustive"})", &report) == ARPPS_ERR_INVALID_ARGUMENT);

  const auto g = generate();
  arpps_store* s = open_store(g);
  char* frames = nullptr;
  REQUIRE(arpps_track_sim(R"({"trajectory": {"duration": 0.2}})", s, &report, &frames) == ARPPS_OK);
  CHECK(take(report).find("tracked") != std::string::npos);
  CHECK(take(frames).find("arpps-overlay-frame/1") != std::string::npos);
  REQUIRE(arpps_track_sim(nullptr, nullptr, &report, nullptr) == ARPPS_OK);
  take(report);

  char *frame = nullptr, *svg = nullptr;
  REQUIRE(arpps_render_frame(s, R"({"pose": {"heading": 90, "pitch": 30}})", &frame, &svg) == ARPPS_OK);
  CHECK(take(frame).find("\"primitives\"") != std::string::npos);
  CHECK(take(svg).rfind("<svg", 0) == 0);
  CHECK(arpps_render_frame(s, R"({"posture": {}})", &frame, nullptr) == ARPPS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(arpps_last_error()).find("posture") != std::string::npos);
  arpps_store_free(s);
}
