#include "arpps/arpps.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "arpps/commands.hpp"
#include "arpps/error.hpp"
#include "arpps/geo_service.hpp"
#include "arpps/geodesy.hpp"
#include "arpps/spatial_store.hpp"

struct arpps_store {
  std::shared_ptr<const arpps::store::SpatialStore> store;
};

struct arpps_service {
  std::unique_ptr<arpps::service::GeoService> service;
};

namespace {

thread_local std::string g_last_error;

arpps_status status_of(arpps::ErrorKind k) {
  switch (k) {
    case arpps::ErrorKind::InvalidArgument:
      return ARPPS_ERR_INVALID_ARGUMENT;
    case arpps::ErrorKind::Data:
      return ARPPS_ERR_DATA;
    case arpps::ErrorKind::Io:
      return ARPPS_ERR_IO;
    default:
      return ARPPS_ERR_RUNTIME;
  }
}

template <class F>
arpps_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return ARPPS_OK;
  } catch (const arpps::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("config: ") + e.what();
    return ARPPS_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ARPPS_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ARPPS_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return ARPPS_ERR_RUNTIME;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw arpps::Error(arpps::ErrorKind::InvalidArgument, what);
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void give(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

nlohmann::ordered_json config_of(const char* text) {
  if (!text || !*text) return nlohmann::ordered_json::object();
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw arpps::Error(arpps::ErrorKind::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
}

void put_bbox(const arpps::geo::BBox& b, double out[4]) {
  out[0] = b.lon_min;
  out[1] = b.lat_min;
  out[2] = b.lon_max;
  out[3] = b.lat_max;
}

}  // namespace

extern "C" {

const char* arpps_last_error(void) { return g_last_error.c_str(); }

const char* arpps_version(void) { return "1.0.0"; }

void arpps_string_free(char* s) { std::free(s); }

arpps_status arpps_generate(const char* config_json, char** report_json, char** points_csv,
                            char** lines_csv) {
  return guarded([&] {
    const auto out = arpps::commands::run_gen(config_of(config_json));
    give(report_json, out.report);
    give(points_csv, out.points_csv);
    give(lines_csv, out.lines_csv);
  });
}

arpps_status arpps_validate(const char* points_csv, const char* lines_csv, char** report_json) {
  return guarded([&] {
    require(points_csv && lines_csv && report_json, "arpps_validate: null argument");
    *report_json = dup(arpps::commands::run_validate(points_csv, lines_csv));
  });
}

arpps_status arpps_store_open_csv(const char* points_csv, const char* lines_csv, uint64_t epoch,
                                  arpps_store** out) {
  return guarded([&] {
    require(points_csv && lines_csv && out, "arpps_store_open_csv: null argument");
    auto net = arpps::pipe::parse_csv(points_csv, lines_csv);
    auto s = arpps::store::SpatialStore::load(std::move(net.points), std::move(net.lines), epoch);
    *out = new arpps_store{std::make_shared<const arpps::store::SpatialStore>(std::move(s))};
  });
}

arpps_status arpps_store_open_snapshot(const char* path, arpps_store** out) {
  return guarded([&] {
    require(path && out, "arpps_store_open_snapshot: null argument");
    auto s = arpps::store::SpatialStore::load_snapshot(path);
    *out = new arpps_store{std::make_shared<const arpps::store::SpatialStore>(std::move(s))};
  });
}

arpps_status arpps_store_save_snapshot(const arpps_store* store, const char* path) {
  return guarded([&] {
    require(store && path, "arpps_store_save_snapshot: null argument");
    store->store->save_snapshot(path);
  });
}

void arpps_store_free(arpps_store* store) { delete store; }

arpps_status arpps_store_counts(const arpps_store* store, size_t* points, size_t* lines) {
  return guarded([&] {
    require(store, "arpps_store_counts: null store");
    if (points) *points = store->store->points().size();
    if (lines) *lines = store->store->lines().size();
  });
}

arpps_status arpps_store_extent(const arpps_store* store, double out[4]) {
  return guarded([&] {
    require(store && out, "arpps_store_extent: null argument");
    const auto e = store->store->extent();
    require(e.valid(), "arpps_store_extent: store is empty");
    put_bbox(e, out);
  });
}

arpps_status arpps_store_query(const arpps_store* store, const double bbox[4], char** geojson) {
  return guarded([&] {
    require(store && bbox && geojson, "arpps_store_query: null argument");
    const arpps::geo::BBox b{bbox[0], bbox[1], bbox[2], bbox[3]};
    require(b.valid(), "arpps_store_query: invalid box");
    *geojson = dup(arpps::service::encode_features(*store->store, store->store->query_bbox(b)));
  });
}

arpps_status arpps_store_query_range(const arpps_store* store, const char* range, int* http_status,
                                     char** body) {
  return guarded([&] {
    require(store && range && http_status && body, "arpps_store_query_range: null argument");
    const auto r = arpps::service::handle_pipes_request(*store->store, range);
    *http_status = r.status;
    *body = dup(r.body);
  });
}

arpps_status arpps_bbox_from_fix(double lon, double lat, double radius_m, double out[4]) {
  return guarded([&] {
    require(out, "arpps_bbox_from_fix: null argument");
    const arpps::geo::GeoPoint fix{lon, lat, 0.0};
    require(arpps::geo::valid_geo(fix), "arpps_bbox_from_fix: coordinates out of range");
    put_bbox(arpps::geo::bbox_from_fix(fix, radius_m), out);
  });
}

arpps_status arpps_service_start(const arpps_store* store, const char* address, int port,
                                 arpps_log_fn log, void* user, arpps_service** out) {
  return guarded([&] {
    require(store && out, "arpps_service_start: null argument");
    arpps::service::RequestLogger logger;
    if (log) logger = [log, user](const std::string& line) { log(line.c_str(), user); };
    auto svc = arpps::service::GeoService::start(store->store, address ? address : "127.0.0.1",
                                                 port, std::move(logger));
    *out = new arpps_service{std::move(svc)};
  });
}

int arpps_service_port(const arpps_service* service) {
  return service ? service->service->port() : -1;
}

void arpps_service_stop(arpps_service* service) {
  if (!service) return;
  service->service->stop();
  delete service;
}

arpps_status arpps_match_bench(const char* config_json, char** report_json) {
  return guarded([&] {
    require(report_json, "arpps_match_bench: null argument");
    *report_json = dup(arpps::commands::run_match_bench(config_of(config_json)));
  });
}

arpps_status arpps_track_sim(const char* config_json, const arpps_store* store, char** report_json,
                             char** frames_jsonl) {
  return guarded([&] {
    require(report_json, "arpps_track_sim: null argument");
    const auto out =
        arpps::commands::run_track_sim(config_of(config_json), store ? store->store.get() : nullptr);
    *report_json = dup(out.report);
    give(frames_jsonl, out.frames);
  });
}

arpps_status arpps_render_frame(const arpps_store* store, const char* config_json, char** frame_json,
                                char** svg) {
  return guarded([&] {
    require(store && frame_json, "arpps_render_frame: null argument");
    const auto out = arpps::commands::run_render(config_of(config_json), *store->store);
    *frame_json = dup(out.frame);
    give(svg, out.svg);
  });
}

}  // extern "C"
