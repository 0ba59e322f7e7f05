#include "arpps/sensor_filter.hpp"

#include <cmath>

#include "arpps/error.hpp"
#include "csv.hpp"

namespace arpps::filter {
namespace {

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

}  // namespace

void FilterParams::validate() const {
  const auto in_unit = [](double a) { return std::isfinite(a) && a > 0.0 && a <= 1.0; };
  if (!(std::isfinite(low) && std::isfinite(high) && low > 0.0 && high > low)) {
    throw Error(ErrorKind::InvalidArgument, "filter: thresholds must satisfy 0 < low < high");
  }
  if (!in_unit(alpha_small) || !in_unit(alpha_mid) || !in_unit(alpha_large)) {
    throw Error(ErrorKind::InvalidArgument, "filter: alphas must lie in (0, 1]");
  }
}

double sample_distance(const Vec3& a, const Vec3& a_new) {
  const double dx = a_new.x - a.x;
  const double dy = a_new.y - a.y;
  const double dz = a_new.z - a.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double alpha_of(double d, const FilterParams& params) {
  if (d < params.low) return params.alpha_small;
  if (d < params.high) return params.alpha_mid;
  return params.alpha_large;
}

StepResult filter_step(const FilterState& state, const Vec3Sample& incoming,
                       const FilterParams& params) {
  if (!finite(incoming.value) || !std::isfinite(incoming.timestamp)) {
    throw Error(ErrorKind::InvalidArgument, "filter: non-finite sample");
  }
  if (!state.initialized) {
    return {{incoming, true}, incoming};
  }
  if (!(incoming.timestamp > state.current.timestamp)) {
    throw Error(ErrorKind::InvalidArgument, "filter: timestamps must strictly increase");
  }
  const Vec3& a = state.current.value;
  const Vec3& an = incoming.value;
  const double alpha = alpha_of(sample_distance(a, an), params);
  Vec3Sample out{{a.x + alpha * (an.x - a.x), a.y + alpha * (an.y - a.y), a.z + alpha * (an.z - a.z)},
                 incoming.timestamp};
  return {{out, true}, out};
}

std::vector<Vec3Sample> filter_stream(const std::vector<Vec3Sample>& samples,
                                      const FilterParams& params) {
  params.validate();
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "filter: empty stream");
  std::vector<Vec3Sample> out;
  out.reserve(samples.size());
  FilterState state;
  for (const auto& s : samples) {
    auto r = filter_step(state, s, params);
    state = r.state;
    out.push_back(r.output);
  }
  return out;
}

std::vector<Vec3Sample> parse_stream_csv(std::string_view text) {
  auto rows = csv::parse(text);
  if (rows.empty() || rows[0] != csv::Row{"timestamp", "x", "y", "z"}) {
    throw Error(ErrorKind::Data, "stream csv: header must be timestamp,x,y,z");
  }
  std::vector<Vec3Sample> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() == 1 && r[0].empty()) continue;
    double v[4];
    if (r.size() != 4 || !csv::parse_double(r[0], v[0]) || !csv::parse_double(r[1], v[1]) ||
        !csv::parse_double(r[2], v[2]) || !csv::parse_double(r[3], v[3])) {
      throw Error(ErrorKind::Data, "stream csv: malformed row " + std::to_string(i));
    }
    out.push_back({{v[1], v[2], v[3]}, v[0]});
  }
  return out;
}

std::string write_stream_csv(const std::vector<Vec3Sample>& samples) {
  std::string out = "timestamp,x,y,z\n";
  for (const auto& s : samples) {
    csv::append_row(out, {csv::format_double(s.timestamp), csv::format_double(s.value.x),
                          csv::format_double(s.value.y), csv::format_double(s.value.z)});
  }
  return out;
}

}  // namespace arpps::filter
