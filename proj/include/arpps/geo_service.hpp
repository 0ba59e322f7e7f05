#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "arpps/geodesy.hpp"
#include "arpps/spatial_store.hpp"

namespace arpps::service {

/// The `range` URL parameter: "lon_min,lat_min,lon_max,lat_max".
struct RangeParam {
  std::string raw;
  geo::BBox parsed;

  /// Exactly four finite decimals with min <= max per axis. Throws
  /// Error(InvalidArgument) naming the offending token.
  static RangeParam parse(std::string_view raw);
};

struct HttpResponse {
  int status = 200;
  std::string content_type;
  std::string body;
};

inline constexpr std::string_view kGeoJsonMediaType = "application/geo+json";

/// GeoJSON FeatureCollection: points as Point features, lines as LineString
/// features, every record attribute under its snake_case name in
/// `properties`. Points are emitted before lines, each in the given order.
std::string encode_geojson(const std::vector<const pipe::PipePoint*>& points,
                           const std::vector<const pipe::PipeLine*>& lines);

/// Collects the records behind a query result and encodes them.
std::string encode_features(const store::SpatialStore& store,
                            const std::vector<store::FeatureId>& ids);

/// `GET /pipes?range=...` as a pure function of the store and the raw
/// parameter: 200 with a FeatureCollection, or 400 with a plain-text
/// message.
HttpResponse handle_pipes_request(const store::SpatialStore& store, std::string_view raw_range);

/// `GET /health`: {"status","points","lines","epoch"}.
HttpResponse handle_health(const store::SpatialStore& store);

using RequestLogger = std::function<void(const std::string& line)>;

/// Running HTTP service. Requests read a shared immutable store snapshot;
/// replace_store swaps it atomically between requests.
class GeoService {
 public:
  /// Binds and starts serving on a background thread. port 0 picks a free
  /// port. Throws Error(Io) if the address cannot be bound.
  static std::unique_ptr<GeoService> start(std::shared_ptr<const store::SpatialStore> store,
                                           const std::string& address, int port,
                                           RequestLogger logger = {});
  ~GeoService();
  GeoService(const GeoService&) = delete;
  GeoService& operator=(const GeoService&) = delete;

  int port() const noexcept;
  void replace_store(std::shared_ptr<const store::SpatialStore> store);
  std::shared_ptr<const store::SpatialStore> current_store() const;
  /// Stops accepting connections and waits for in-flight requests.
  void stop();

 private:
  GeoService();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace arpps::service
