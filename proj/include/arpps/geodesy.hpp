#pragma once

namespace arpps::geo {

/// Mean spherical earth radius in meters. Every degree/meter conversion in
/// the project goes through this constant.
inline constexpr double kEarthRadius = 6'371'000.0;

struct GeoPoint {
  double lon = 0.0;  // degrees
  double lat = 0.0;  // degrees
  double alt = 0.0;  // meters

  bool operator==(const GeoPoint&) const = default;
};

/// Local east-north-up coordinates in meters relative to an origin GeoPoint.
struct EnuPoint {
  double e = 0.0;
  double n = 0.0;
  double u = 0.0;

  bool operator==(const EnuPoint&) const = default;
};

/// Closed lon/lat rectangle in the [Lon_Min, Lat_Min, Lon_Max, Lat_Max] order
/// used on the wire.
struct BBox {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double lon_max = 0.0;
  double lat_max = 0.0;

  bool valid() const noexcept;
  bool contains(double lon, double lat) const noexcept {
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
  }
  /// True when `other` lies entirely inside this box.
  bool covers(const BBox& other) const noexcept {
    return other.lon_min >= lon_min && other.lon_max <= lon_max &&
           other.lat_min >= lat_min && other.lat_max <= lat_max;
  }
  bool operator==(const BBox&) const = default;
};

bool valid_geo(const GeoPoint& p) noexcept;

/// Equirectangular tangent-plane projection about `origin`. Throws
/// InvalidArgument when the points are more than one degree apart on either
/// axis, where the approximation stops being useful.
EnuPoint enu_from_geo(const GeoPoint& origin, const GeoPoint& p);
GeoPoint geo_from_enu(const GeoPoint& origin, const EnuPoint& p);

/// Great-circle distance in meters on the spherical earth.
double haversine(const GeoPoint& a, const GeoPoint& b);

/// Square load box of half-extent `radius_m` meters centred on a GPS fix.
/// Throws InvalidArgument for radius <= 0 or |lat| >= 89 degrees.
BBox bbox_from_fix(const GeoPoint& fix, double radius_m);

}  // namespace arpps::geo
