#include "arpps/geo_service.hpp"

#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "arpps/error.hpp"
#include "csv.hpp"

namespace arpps::service {
namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

ordered_json point_feature(const pipe::PipePoint& p) {
  ordered_json f;
  f["type"] = "Feature";
  f["id"] = "point." + std::to_string(p.object_id);
  f["geometry"] = {{"type", "Point"}, {"coordinates", {p.x, p.y}}};
  f["properties"] = {
      {"feature_type", "PipePoint"},
      {"object_id", p.object_id},
      {"point_number", p.point_number},
      {"x", p.x},
      {"y", p.y},
      {"ground_elevation", p.ground_elevation},
      {"feature_kind", p.feature_kind},
      {"attached_object", p.attached_object},
      {"well_bottom_depth", p.well_bottom_depth},
      {"lid_type", p.lid_type},
      {"lid_spec", p.lid_spec},
      {"lid_material", p.lid_material},
      {"offset_distance", p.offset_distance},
      {"rotation_angle", p.rotation_angle},
  };
  return f;
}

ordered_json line_feature(const pipe::PipeLine& l) {
  ordered_json f;
  f["type"] = "Feature";
  f["id"] = "line." + std::to_string(l.object_id);
  f["geometry"] = {{"type", "LineString"},
                   {"coordinates", {{l.start_x, l.start_y}, {l.end_x, l.end_y}}}};
  f["properties"] = {
      {"feature_type", "PipeLine"},
      {"object_id", l.object_id},
      {"start_point_id", l.start_point_id},
      {"end_point_id", l.end_point_id},
      {"start_depth", l.start_depth},
      {"end_depth", l.end_depth},
      {"start_elevation", l.start_elevation},
      {"end_elevation", l.end_elevation},
      {"start_x", l.start_x},
      {"start_y", l.start_y},
      {"end_x", l.end_x},
      {"end_y", l.end_y},
      {"material", l.material},
      {"burial_method", l.burial_method},
      {"line_type", std::string(pipe::to_string(l.line_type))},
      {"diameter", l.diameter},
      {"length", l.length},
  };
  return f;
}

HttpResponse bad_request(std::string msg) {
  return {400, "text/plain; charset=utf-8", std::move(msg) + "\n"};
}

}  // namespace

RangeParam RangeParam::parse(std::string_view raw) {
  const auto tokens = split(raw, ',');
  if (tokens.size() != 4) {
    throw Error(ErrorKind::InvalidArgument,
                "range must have 4 comma-separated values (lon_min,lat_min,lon_max,lat_max), got " +
                    std::to_string(tokens.size()));
  }
  static constexpr const char* kNames[4] = {"lon_min", "lat_min", "lon_max", "lat_max"};
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!csv::parse_double(tokens[i], v[i])) {
      throw Error(ErrorKind::InvalidArgument, std::string("range: bad token '") +
                                                  std::string(tokens[i]) + "' for " + kNames[i]);
    }
  }
  if (v[0] > v[2]) {
    throw Error(ErrorKind::InvalidArgument, "range: lon_min '" + std::string(tokens[0]) +
                                                "' exceeds lon_max '" + std::string(tokens[2]) + "'");
  }
  if (v[1] > v[3]) {
    throw Error(ErrorKind::InvalidArgument, "range: lat_min '" + std::string(tokens[1]) +
                                                "' exceeds lat_max '" + std::string(tokens[3]) + "'");
  }
  return {std::string(raw), {v[0], v[1], v[2], v[3]}};
}

std::string encode_geojson(const std::vector<const pipe::PipePoint*>& points,
                           const std::vector<const pipe::PipeLine*>& lines) {
  ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = ordered_json::array();
  auto& features = doc["features"];
  for (const auto* p : points) features.push_back(point_feature(*p));
  for (const auto* l : lines) features.push_back(line_feature(*l));
  return doc.dump();
}

std::string encode_features(const store::SpatialStore& store,
                            const std::vector<store::FeatureId>& ids) {
  std::vector<const pipe::PipePoint*> points;
  std::vector<const pipe::PipeLine*> lines;
  for (const auto& id : ids) {
    if (id.kind == store::FeatureKind::Point) {
      points.push_back(store.point(id.object_id));
    } else {
      lines.push_back(store.line(id.object_id));
    }
  }
  return encode_geojson(points, lines);
}

HttpResponse handle_pipes_request(const store::SpatialStore& store, std::string_view raw_range) {
  RangeParam range;
  try {
    range = RangeParam::parse(raw_range);
  } catch (const Error& e) {
    return bad_request(e.what());
  }
  return {200, std::string(kGeoJsonMediaType),
          encode_features(store, store.query_bbox(range.parsed))};
}

HttpResponse handle_health(const store::SpatialStore& store) {
  ordered_json j;
  j["status"] = "ok";
  j["points"] = store.points().size();
  j["lines"] = store.lines().size();
  j["epoch"] = store.epoch();
  return {200, "application/json", j.dump()};
}

struct GeoService::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  mutable std::mutex mu;
  std::shared_ptr<const store::SpatialStore> store;
  RequestLogger logger;
  bool stopped = false;

  std::shared_ptr<const store::SpatialStore> snapshot() const {
    std::lock_guard lock(mu);
    return store;
  }
};

GeoService::GeoService() : impl_(std::make_unique<Impl>()) {}

GeoService::~GeoService() { stop(); }

std::unique_ptr<GeoService> GeoService::start(std::shared_ptr<const store::SpatialStore> store,
                                              const std::string& address, int port,
                                              RequestLogger logger) {
  if (!store) throw Error(ErrorKind::InvalidArgument, "GeoService: null store");
  std::unique_ptr<GeoService> svc(new GeoService());
  Impl& im = *svc->impl_;
  im.store = std::move(store);
  im.logger = std::move(logger);
  // Plain SO_REUSEADDR, no port sharing.
  im.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });

  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, r.content_type);
  };

  im.server.Get("/pipes", [&im, reply](const httplib::Request& req, httplib::Response& res) {
    const auto snap = im.snapshot();
    if (!req.has_param("range")) {
      reply(res, bad_request("missing 'range' parameter"));
      return;
    }
    reply(res, handle_pipes_request(*snap, req.get_param_value("range")));
  });
  im.server.Get("/health", [&im, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health(*im.snapshot()));
  });
  im.server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.status = 204;
  });
  if (im.logger) {
    im.server.set_logger([&im](const httplib::Request& req, const httplib::Response& res) {
      std::string line = req.method + " " + req.path;
      if (!req.params.empty()) {
        line += "?";
        bool first = true;
        for (const auto& [k, v] : req.params) {
          if (!first) line += "&";
          line += k + "=" + v;
          first = false;
        }
      }
      line += " " + std::to_string(res.status) + " " + std::to_string(res.body.size());
      im.logger(line);
    });
  }

  if (port == 0) {
    im.port = im.server.bind_to_any_port(address);
    if (im.port <= 0) throw Error(ErrorKind::Io, "cannot bind " + address);
  } else {
    if (!im.server.bind_to_port(address, port)) {
      throw Error(ErrorKind::Io, "cannot bind " + address + ":" + std::to_string(port));
    }
    im.port = port;
  }
  im.thread = std::thread([&im] { im.server.listen_after_bind(); });
  im.server.wait_until_ready();
  return svc;
}

int GeoService::port() const noexcept { return impl_->port; }

void GeoService::replace_store(std::shared_ptr<const store::SpatialStore> store) {
  if (!store) throw Error(ErrorKind::InvalidArgument, "GeoService: null store");
  std::lock_guard lock(impl_->mu);
  impl_->store = std::move(store);
}

std::shared_ptr<const store::SpatialStore> GeoService::current_store() const {
  return impl_->snapshot();
}

void GeoService::stop() {
  if (!impl_ || impl_->stopped) return;
  impl_->stopped = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace arpps::service
