#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "cvgeo/descriptor.hpp"
#include "cvgeo/kernels.hpp"
#include "cvgeo/map_grid.hpp"

namespace cvgeo {

struct DatabaseItem {
  std::uint64_t id = 0;
  GeoPoint geo;
  GlobalDescriptor descriptor;
};

struct DatabaseEntry {
  std::uint64_t id = 0;
  GeoPoint geo;
  std::vector<float> descriptor;  // stored at file precision

  bool operator==(const DatabaseEntry&) const = default;
};

/// Geo-tagged descriptor store with exact Euclidean nearest-neighbor search.
/// Immutable once built.
class DescriptorDatabase {
 public:
  DescriptorDatabase() = default;

  /// Throws InvalidArgument on duplicate ids or mixed dimensions.
  DescriptorDatabase(std::vector<DatabaseEntry> entries, std::size_t dimension);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dimension() const { return dimension_; }

  const std::vector<DatabaseEntry>& entries() const { return entries_; }
  const DatabaseEntry& entry(std::size_t i) const { return entries_.at(i); }
  bool contains(std::uint64_t id) const { return by_id_.contains(id); }
  const DatabaseEntry& find(std::uint64_t id) const;

  /// Row-major copy of all descriptors, for the distance kernels.
  std::span<const float> matrix() const { return matrix_; }

  bool operator==(const DescriptorDatabase& o) const {
    return dimension_ == o.dimension_ && entries_ == o.entries_;
  }

 private:
  std::vector<DatabaseEntry> entries_;
  std::size_t dimension_ = 0;
  std::vector<float> matrix_;
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
};

struct RetrievalMatch {
  std::uint64_t id = 0;
  double distance = 0.0;  // Euclidean
};

/// Ranked matches, ascending distance, ties broken by ascending id.
struct RetrievalResult {
  std::vector<RetrievalMatch> matches;
};

/// A query whose correct database entry is known.
struct LabeledQuery {
  std::uint64_t truth_id = 0;
  GlobalDescriptor descriptor;
};

/// A query whose true location is known.
struct GeoQuery {
  GeoPoint truth;
  GlobalDescriptor descriptor;
};

DescriptorDatabase build_db(const std::vector<DatabaseItem>& items, std::size_t dimension = 0);

RetrievalResult query(const DescriptorDatabase& db, const GlobalDescriptor& q, std::size_t k,
                      kernels::Exec exec = kernels::Exec::parallel);

/// Zero-based position the truth entry would take in the full ranking of q.
std::size_t rank_of(const DescriptorDatabase& db, const GlobalDescriptor& q,
                    std::uint64_t truth_id, kernels::Exec exec = kernels::Exec::serial);

/// Fraction of queries whose truth is among their k nearest entries.
double recall_at_k(const DescriptorDatabase& db, std::span<const LabeledQuery> queries,
                   std::size_t k);

/// recall_at_k for k = 1..k_max in one pass.
std::vector<double> recall_curve(const DescriptorDatabase& db,
                                 std::span<const LabeledQuery> queries, std::size_t k_max);

/// K = ceil(percent / 100 * |db|).
std::size_t top_percent_k(std::size_t db_size, double percent);
double recall_at_top_percent(const DescriptorDatabase& db, std::span<const LabeledQuery> queries,
                             double percent);

/// For each threshold, the fraction of queries whose top-1 match lies closer
/// than the threshold (meters) to the query's true location.
std::vector<double> recall_vs_distance(const DescriptorDatabase& db,
                                       std::span<const GeoQuery> queries,
                                       std::span<const double> thresholds);

/// New database with the distractors appended; original ids preserved.
DescriptorDatabase add_distractors(const DescriptorDatabase& db,
                                   const std::vector<DatabaseItem>& distractors);

/// File layout: "CVGEODB\0", u32 version, u64 count, u32 dimension, then per
/// entry u64 id, f64 lat, f64 lon, float32 x dimension. Little-endian.
std::vector<std::uint8_t> encode_database(const DescriptorDatabase& db);
DescriptorDatabase decode_database(std::span<const std::uint8_t> bytes);
void save_database(const std::filesystem::path& path, const DescriptorDatabase& db);
DescriptorDatabase load_database(const std::filesystem::path& path);

}  // namespace cvgeo
