#include "cvgeo/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cvgeo/binary_io.hpp"
#include "cvgeo/errors.hpp"

namespace cvgeo {
namespace {

constexpr char kDbMagic[8] = {'C', 'V', 'G', 'E', 'O', 'D', 'B', '\0'};
constexpr std::uint32_t kDbVersion = 1;

std::vector<double> all_distances(const DescriptorDatabase& db, const GlobalDescriptor& q,
                                  kernels::Exec exec) {
  if (q.dim() != db.dimension()) {
    throw InvalidArgument("query dimension " + std::to_string(q.dim()) + " != database " +
                          std::to_string(db.dimension()));
  }
  std::vector<double> d(db.size());
  kernels::squared_distances(exec, db.matrix(), db.dimension(), q.values, d);
  return d;
}

// Ranks of every labeled query, computed in parallel over queries.
std::vector<std::size_t> ranks_of(const DescriptorDatabase& db,
                                  std::span<const LabeledQuery> queries) {
  if (db.empty()) throw InvalidArgument("database is empty");
  for (const auto& q : queries) {
    if (!db.contains(q.truth_id)) {
      throw InvalidArgument("query truth id " + std::to_string(q.truth_id) + " not in database");
    }
    if (q.descriptor.dim() != db.dimension()) throw InvalidArgument("query dimension mismatch");
  }
  std::vector<std::size_t> ranks(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i)];
    ranks[static_cast<std::size_t>(i)] = rank_of(db, q.descriptor, q.truth_id);
  }
  return ranks;
}

}  // namespace

DescriptorDatabase::DescriptorDatabase(std::vector<DatabaseEntry> entries, std::size_t dimension)
    : entries_(std::move(entries)), dimension_(dimension) {
  if (!entries_.empty() && dimension_ == 0) dimension_ = entries_.front().descriptor.size();
  matrix_.reserve(entries_.size() * dimension_);
  by_id_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const DatabaseEntry& e = entries_[i];
    if (e.descriptor.size() != dimension_ || dimension_ == 0) {
      throw InvalidArgument("entry " + std::to_string(e.id) + " has dimension " +
                            std::to_string(e.descriptor.size()) + ", expected " +
                            std::to_string(dimension_));
    }
    for (float v : e.descriptor) {
      if (!std::isfinite(v)) throw InvalidArgument("entry " + std::to_string(e.id) + " is not finite");
    }
    if (!by_id_.emplace(e.id, i).second) {
      throw InvalidArgument("duplicate database id " + std::to_string(e.id));
    }
    matrix_.insert(matrix_.end(), e.descriptor.begin(), e.descriptor.end());
  }
}

const DatabaseEntry& DescriptorDatabase::find(std::uint64_t id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) throw InvalidArgument("id " + std::to_string(id) + " not in database");
  return entries_[it->second];
}

DescriptorDatabase build_db(const std::vector<DatabaseItem>& items, std::size_t dimension) {
  std::vector<DatabaseEntry> entries;
  entries.reserve(items.size());
  for (const auto& it : items) {
    DatabaseEntry e{it.id, it.geo, {}};
    e.descriptor.reserve(it.descriptor.dim());
    for (double v : it.descriptor.values) e.descriptor.push_back(static_cast<float>(v));
    entries.push_back(std::move(e));
  }
  return DescriptorDatabase(std::move(entries), dimension);
}

RetrievalResult query(const DescriptorDatabase& db, const GlobalDescriptor& q, std::size_t k,
                      kernels::Exec exec) {
  if (db.empty()) throw InvalidArgument("query on empty database");
  if (k < 1 || k > db.size()) {
    throw InvalidArgument("k must be in [1, " + std::to_string(db.size()) + "]");
  }
  const std::vector<double> d = all_distances(db, q, exec);
  std::vector<std::size_t> order(db.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto less = [&](std::size_t a, std::size_t b) {
    if (d[a] != d[b]) return d[a] < d[b];
    return db.entry(a).id < db.entry(b).id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
  RetrievalResult out;
  out.matches.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.matches.push_back({db.entry(order[i]).id, std::sqrt(d[order[i]])});
  }
  return out;
}

std::size_t rank_of(const DescriptorDatabase& db, const GlobalDescriptor& q,
                    std::uint64_t truth_id, kernels::Exec exec) {
  const std::vector<double> d = all_distances(db, q, exec);
  const auto& entries = db.entries();
  std::size_t truth = entries.size();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == truth_id) truth = i;
  }
  if (truth == entries.size()) throw InvalidArgument("truth id not in database");
  std::size_t rank = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (d[i] < d[truth] || (d[i] == d[truth] && entries[i].id < truth_id)) ++rank;
  }
  return rank;
}

double recall_at_k(const DescriptorDatabase& db, std::span<const LabeledQuery> queries,
                   std::size_t k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (queries.empty()) return 0.0;
  const std::vector<std::size_t> ranks = ranks_of(db, queries);
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r < k; });
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::vector<double> recall_curve(const DescriptorDatabase& db,
                                 std::span<const LabeledQuery> queries, std::size_t k_max) {
  if (k_max < 1) throw InvalidArgument("k_max must be >= 1");
  std::vector<double> curve(k_max, 0.0);
  if (queries.empty()) return curve;
  std::vector<std::size_t> hist(k_max, 0);
  for (std::size_t r : ranks_of(db, queries)) {
    if (r < k_max) ++hist[r];
  }
  std::size_t cum = 0;
  for (std::size_t k = 0; k < k_max; ++k) {
    cum += hist[k];
    curve[k] = static_cast<double>(cum) / static_cast<double>(queries.size());
  }
  return curve;
}

std::size_t top_percent_k(std::size_t db_size, double percent) {
  if (!(percent > 0.0) || percent > 100.0) throw InvalidArgument("percent must be in (0, 100]");
  const double exact = percent * static_cast<double>(db_size) / 100.0;
  // Slack absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  if (k < 1) throw InvalidArgument("top-percent set is empty");
  return std::min(k, db_size);
}

double recall_at_top_percent(const DescriptorDatabase& db, std::span<const LabeledQuery> queries,
                             double percent) {
  return recall_at_k(db, queries, top_percent_k(db.size(), percent));
}

std::vector<double> recall_vs_distance(const DescriptorDatabase& db,
                                       std::span<const GeoQuery> queries,
                                       std::span<const double> thresholds) {
  if (db.empty()) throw InvalidArgument("database is empty");
  std::vector<double> err(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  for (const auto& q : queries) {
    if (q.descriptor.dim() != db.dimension()) throw InvalidArgument("query dimension mismatch");
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i)];
    const RetrievalResult top = query(db, q.descriptor, 1, kernels::Exec::serial);
    err[static_cast<std::size_t>(i)] = geo_distance_m(db.find(top.matches.front().id).geo, q.truth);
  }
  std::vector<double> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    if (queries.empty()) {
      curve.push_back(0.0);
      continue;
    }
    const auto hits = std::count_if(err.begin(), err.end(), [t](double e) { return e < t; });
    curve.push_back(static_cast<double>(hits) / static_cast<double>(queries.size()));
  }
  return curve;
}

DescriptorDatabase add_distractors(const DescriptorDatabase& db,
                                   const std::vector<DatabaseItem>& distractors) {
  std::vector<DatabaseEntry> merged = db.entries();
  const DescriptorDatabase extra = build_db(distractors, db.dimension());
  for (const auto& e : extra.entries()) {
    if (db.contains(e.id)) {
      throw InvalidArgument("distractor id " + std::to_string(e.id) + " collides with database");
    }
    merged.push_back(e);
  }
  return DescriptorDatabase(std::move(merged), db.dimension());
}

std::vector<std::uint8_t> encode_database(const DescriptorDatabase& db) {
  io::ByteWriter w;
  w.raw(std::string_view(kDbMagic, 8));
  w.u32(kDbVersion);
  w.u64(db.size());
  w.u32(static_cast<std::uint32_t>(db.dimension()));
  for (const auto& e : db.entries()) {
    w.u64(e.id);
    w.f64(e.geo.lat);
    w.f64(e.geo.lon);
    for (float v : e.descriptor) w.f32(v);
  }
  return w.take();
}

DescriptorDatabase decode_database(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.raw(8) != std::string_view(kDbMagic, 8)) throw IoError("not a descriptor database file");
  const std::uint32_t version = r.u32();
  if (version != kDbVersion) throw IoError("unsupported database version " + std::to_string(version));
  const std::uint64_t count = r.u64();
  const std::size_t dim = r.u32();
  const std::size_t entry_bytes = 24 + 4 * dim;
  if (dim == 0 && count > 0) throw IoError("database with entries has zero dimension");
  if (count > r.remaining() / std::max<std::size_t>(entry_bytes, 1)) {
    throw IoError("database file truncated");
  }
  std::vector<DatabaseEntry> entries(count);
  for (auto& e : entries) {
    e.id = r.u64();
    e.geo.lat = r.f64();
    e.geo.lon = r.f64();
    e.descriptor.resize(dim);
    for (float& v : e.descriptor) v = r.f32();
  }
  if (r.remaining() != 0) throw IoError("trailing bytes in database file");
  return DescriptorDatabase(std::move(entries), dim);
}

void save_database(const std::filesystem::path& path, const DescriptorDatabase& db) {
  io::write_file(path, encode_database(db));
}

DescriptorDatabase load_database(const std::filesystem::path& path) {
  return decode_database(io::read_file(path));
}

}  // namespace cvgeo
