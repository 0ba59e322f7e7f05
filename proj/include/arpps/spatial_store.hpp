#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "arpps/geodesy.hpp"
#include "arpps/pipe_model.hpp"

namespace arpps::store {

enum class FeatureKind : std::uint8_t { Point = 0, Line = 1 };

struct FeatureId {
  FeatureKind kind = FeatureKind::Point;
  std::int64_t object_id = 0;

  auto operator<=>(const FeatureId&) const = default;
};

/// Closed-set test: true when the segment (x0,y0)-(x1,y1) touches the box,
/// including endpoints on an edge and segments crossing with both ends
/// outside. Degenerate boxes and segments are handled.
bool segment_intersects_box(double x0, double y0, double x1, double y1, const geo::BBox& box) noexcept;

/// Immutable in-memory store of a validated pipe network with an R-tree over
/// feature envelopes. Share across threads through shared_ptr<const>.
class SpatialStore {
 public:
  SpatialStore();
  ~SpatialStore();
  SpatialStore(SpatialStore&&) noexcept;
  SpatialStore& operator=(SpatialStore&&) noexcept;

  /// Validates and indexes. Throws Error(Data) listing violations.
  static SpatialStore load(std::vector<pipe::PipePoint> points, std::vector<pipe::PipeLine> lines,
                           std::uint64_t epoch = 1);

  /// Ids of features whose geometry meets the closed box, ordered points
  /// first then by object_id. Whole features are returned, never clipped.
  std::vector<FeatureId> query_bbox(const geo::BBox& box) const;
  /// Same contract as query_bbox by linear scan.
  std::vector<FeatureId> query_brute_force(const geo::BBox& box) const;

  const pipe::PipePoint* point(std::int64_t object_id) const;
  const pipe::PipeLine* line(std::int64_t object_id) const;
  /// Records sorted by object_id.
  const std::vector<pipe::PipePoint>& points() const noexcept;
  const std::vector<pipe::PipeLine>& lines() const noexcept;
  std::size_t size() const noexcept { return points().size() + lines().size(); }
  std::uint64_t epoch() const noexcept;

  /// Envelope of all features; invalid box for an empty store.
  geo::BBox extent() const noexcept;
  /// True when the index and the record tables hold the same id set.
  bool index_consistent() const;

  /// Versioned text snapshot: `ARPPS-STORE <version>` header, then records.
  void save_snapshot(const std::string& path) const;
  /// Throws Error(Io) on read failure, Error(Data) on a bad header.
  static SpatialStore load_snapshot(const std::string& path);

  static constexpr int kSnapshotVersion = 1;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace arpps::store
