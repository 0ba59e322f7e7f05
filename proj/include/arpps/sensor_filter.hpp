#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arpps::filter {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

struct Vec3Sample {
  Vec3 value;
  double timestamp = 0.0;  // seconds

  bool operator==(const Vec3Sample&) const = default;
};

/// Thresholds of the piecewise blend weight, in the stream's native units.
struct FilterParams {
  double low = 1.0;
  double high = 2.0;
  double alpha_small = 0.001;
  double alpha_mid = 0.6;
  double alpha_large = 0.9;

  /// Throws InvalidArgument unless 0 < low < high and each alpha is in (0, 1].
  void validate() const;
};

struct FilterState {
  Vec3Sample current;
  bool initialized = false;
};

/// Euclidean distance between the retained and the incoming sample.
double sample_distance(const Vec3& a, const Vec3& a_new);

/// alpha_small for d < low, alpha_mid for low <= d < high, alpha_large for
/// d >= high.
double alpha_of(double d, const FilterParams& params);

struct StepResult {
  FilterState state;
  Vec3Sample output;
};

/// A <- A + alpha(d) (A' - A) on all three axes with one shared d. The first
/// sample is passed through and becomes the state. Throws InvalidArgument if
/// the timestamp does not advance or a component is not finite.
StepResult filter_step(const FilterState& state, const Vec3Sample& incoming,
                       const FilterParams& params);

/// Fold of filter_step. Throws InvalidArgument on an empty stream.
std::vector<Vec3Sample> filter_stream(const std::vector<Vec3Sample>& samples,
                                      const FilterParams& params);

/// `timestamp,x,y,z` with header row. Throws Error(Data) on malformed rows.
std::vector<Vec3Sample> parse_stream_csv(std::string_view text);
std::string write_stream_csv(const std::vector<Vec3Sample>& samples);

}  // namespace arpps::filter
