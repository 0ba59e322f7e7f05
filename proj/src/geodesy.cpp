#include "arpps/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "arpps/error.hpp"

namespace arpps::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

}  // namespace

bool BBox::valid() const noexcept {
  return std::isfinite(lon_min) && std::isfinite(lat_min) && std::isfinite(lon_max) &&
         std::isfinite(lat_max) && lon_min <= lon_max && lat_min <= lat_max;
}

bool valid_geo(const GeoPoint& p) noexcept {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && std::isfinite(p.alt) && p.lon >= -180.0 &&
         p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0;
}

EnuPoint enu_from_geo(const GeoPoint& origin, const GeoPoint& p) {
  const double dlon = p.lon - origin.lon;
  const double dlat = p.lat - origin.lat;
  if (!(std::abs(dlon) <= 1.0 && std::abs(dlat) <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "enu_from_geo: separation exceeds 1 degree (dlon=" + std::to_string(dlon) +
                    ", dlat=" + std::to_string(dlat) + ")");
  }
  const double cos_lat = std::cos(origin.lat * kDegToRad);
  return {dlon * kDegToRad * kEarthRadius * cos_lat, dlat * kDegToRad * kEarthRadius,
          p.alt - origin.alt};
}

GeoPoint geo_from_enu(const GeoPoint& origin, const EnuPoint& p) {
  const double cos_lat = std::cos(origin.lat * kDegToRad);
  return {origin.lon + p.e / (kEarthRadius * cos_lat) * kRadToDeg,
          origin.lat + p.n / kEarthRadius * kRadToDeg, origin.alt + p.u};
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlambda / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

BBox bbox_from_fix(const GeoPoint& fix, double radius_m) {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
    throw Error(ErrorKind::InvalidArgument, "bbox_from_fix: radius must be positive");
  }
  if (!(std::abs(fix.lat) < 89.0)) {
    throw Error(ErrorKind::InvalidArgument, "bbox_from_fix: |lat| must be below 89 degrees");
  }
  const double dlat = radius_m * kRadToDeg / kEarthRadius;
  const double dlon = dlat / std::cos(fix.lat * kDegToRad);
  return {fix.lon - dlon, fix.lat - dlat, fix.lon + dlon, fix.lat + dlat};
}

}  // namespace arpps::geo
