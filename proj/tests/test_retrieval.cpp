#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "cvgeo/errors.hpp"
#include "cvgeo/retrieval.hpp"
#include "cvgeo/rng.hpp"

using namespace cvgeo;

namespace {

GlobalDescriptor random_desc(std::size_t dim, SeededRng& rng, View v = View::satellite) {
  GlobalDescriptor d{std::vector<double>(dim), v};
  // float-representable so stored copies compare exactly
  for (double& x : d.values) x = static_cast<float>(rng.gaussian());
  return d;
}

std::vector<DatabaseItem> random_items(std::size_t n, std::size_t dim, SeededRng& rng) {
  std::vector<DatabaseItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({100 + i * 3, {1.0 + 0.001 * static_cast<double>(i), 103.0}, random_desc(dim, rng)});
  }
  return items;
}

std::vector<LabeledQuery> identity_queries(const std::vector<DatabaseItem>& items) {
  std::vector<LabeledQuery> q;
  for (const auto& it : items) q.push_back({it.id, it.descriptor});
  return q;
}

}  // namespace

TEST(BuildDb, EmptyAndSmall) {
  const DescriptorDatabase empty = build_db({});
  EXPECT_TRUE(empty.empty());
  SeededRng rng(1);
  const auto items = random_items(3, 4, rng);
  const DescriptorDatabase db = build_db(items);
  EXPECT_EQ(db.size(), 3u);
  EXPECT_EQ(db.dimension(), 4u);
  for (const auto& it : items) {
    ASSERT_TRUE(db.contains(it.id));
    EXPECT_EQ(db.find(it.id).geo, it.geo);
  }
  EXPECT_THROW(db.find(1), InvalidArgument);
}

TEST(BuildDb, RejectsDuplicatesAndMismatches) {
  SeededRng rng(2);
  auto items = random_items(3, 4, rng);
  auto dup = items;
  dup[2].id = dup[0].id;
  EXPECT_THROW(build_db(dup), InvalidArgument);
  auto bad = items;
  bad[1].descriptor.values.pop_back();
  EXPECT_THROW(build_db(bad), InvalidArgument);
  EXPECT_THROW(build_db(items, 5), InvalidArgument);
}

TEST(Query, ExactMatchFirst) {
  SeededRng rng(3);
  const auto items = random_items(50, 8, rng);
  const DescriptorDatabase db = build_db(items);
  const auto r = query(db, items[17].descriptor, 3);
  ASSERT_EQ(r.matches.size(), 3u);
  EXPECT_EQ(r.matches[0].id, items[17].id);
  EXPECT_EQ(r.matches[0].distance, 0.0);
}

TEST(Query, FullSortAndBruteForceOracle) {
  SeededRng rng(4);
  for (std::size_t n : {5u, 40u, 1000u}) {
    const auto items = random_items(n, 6, rng);
    const DescriptorDatabase db = build_db(items);
    const GlobalDescriptor q = random_desc(6, rng, View::ground);
    std::vector<std::pair<double, std::uint64_t>> oracle;
    for (const auto& e : db.entries()) {
      double s = 0;
      for (std::size_t i = 0; i < 6; ++i) {
        const double d = static_cast<double>(e.descriptor[i]) - q.values[i];
        s += d * d;
      }
      oracle.push_back({std::sqrt(s), e.id});
    }
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t k : {std::size_t{1}, std::size_t{2}, n}) {
      const auto r = query(db, q, k);
      ASSERT_EQ(r.matches.size(), k);
      for (std::size_t i = 0; i < k; ++i) {
        EXPECT_EQ(r.matches[i].id, oracle[i].second);
        EXPECT_NEAR(r.matches[i].distance, oracle[i].first, 1e-12);
        if (i > 0) EXPECT_LE(r.matches[i - 1].distance, r.matches[i].distance);
      }
    }
  }
}

TEST(Query, TiesGoToLowerId) {
  const GlobalDescriptor same{{1.0, 1.0}, View::satellite};
  const DescriptorDatabase db = build_db({{9, {}, same}, {4, {}, same}, {7, {}, same}});
  const auto r = query(db, GlobalDescriptor{{0.0, 0.0}, View::ground}, 3);
  EXPECT_EQ(r.matches[0].id, 4u);
  EXPECT_EQ(r.matches[1].id, 7u);
  EXPECT_EQ(r.matches[2].id, 9u);
}

TEST(Query, Errors) {
  SeededRng rng(5);
  const DescriptorDatabase db = build_db(random_items(4, 3, rng));
  EXPECT_THROW(query(DescriptorDatabase{}, random_desc(3, rng), 1), InvalidArgument);
  EXPECT_THROW(query(db, random_desc(3, rng), 0), InvalidArgument);
  EXPECT_THROW(query(db, random_desc(3, rng), 5), InvalidArgument);
  EXPECT_THROW(query(db, random_desc(2, rng), 1), InvalidArgument);
}

TEST(Query, SerialAndParallelAgree) {
  SeededRng rng(6);
  const auto items = random_items(3000, 16, rng);
  const DescriptorDatabase db = build_db(items);
  const auto q = random_desc(16, rng);
  const auto a = query(db, q, 50, kernels::Exec::serial);
  const auto b = query(db, q, 50, kernels::Exec::parallel);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(a.matches[i].id, b.matches[i].id);
    EXPECT_EQ(a.matches[i].distance, b.matches[i].distance);
  }
}

TEST(Recall, IdentityQueriesAreOne) {
  SeededRng rng(7);
  const auto items = random_items(200, 8, rng);
  const DescriptorDatabase db = build_db(items);
  const auto q = identity_queries(items);
  EXPECT_EQ(recall_at_top_percent(db, q, 1.0), 1.0);
  for (double r : recall_curve(db, q, 20)) EXPECT_EQ(r, 1.0);
}

TEST(Recall, AdversarialTruthAlwaysFarthest) {
  // truth descriptor far away; every query sits on the other entries
  std::vector<DatabaseItem> items{{0, {}, {{100.0, 0.0}, View::satellite}}};
  for (std::uint64_t i = 1; i < 10; ++i) items.push_back({i, {}, {{static_cast<double>(i), 0.0}, View::satellite}});
  const DescriptorDatabase db = build_db(items);
  std::vector<LabeledQuery> q;
  for (int i = 0; i < 5; ++i) q.push_back({0, {{static_cast<double>(i), 0.0}, View::ground}});
  EXPECT_EQ(recall_at_top_percent(db, q, 50.0), 0.0);
  EXPECT_EQ(recall_at_k(db, q, 9), 0.0);
  EXPECT_EQ(recall_at_k(db, q, 10), 1.0);
}

TEST(Recall, OnePercentOfHundredIsTopOne) {
  SeededRng rng(8);
  const auto items = random_items(100, 4, rng);
  const DescriptorDatabase db = build_db(items);
  std::vector<LabeledQuery> q;
  std::size_t hits = 0;
  for (int i = 0; i < 10; ++i) {
    const auto& truth = items[static_cast<std::size_t>(rng.uniform() * 100)];
    GlobalDescriptor d = truth.descriptor;
    for (double& x : d.values) x += 0.8 * rng.gaussian();
    q.push_back({truth.id, d});
    // brute force top-1
    double best = 1e300;
    std::uint64_t best_id = 0;
    for (const auto& e : db.entries()) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += std::pow(e.descriptor[k] - d.values[k], 2);
      if (s < best || (s == best && e.id < best_id)) {
        best = s;
        best_id = e.id;
      }
    }
    hits += best_id == truth.id;
  }
  EXPECT_EQ(top_percent_k(100, 1.0), 1u);
  EXPECT_DOUBLE_EQ(recall_at_top_percent(db, q, 1.0), static_cast<double>(hits) / 10.0);
}

TEST(Recall, TopPercentUsesCeil) {
  EXPECT_EQ(top_percent_k(1000, 1.0), 10u);
  EXPECT_EQ(top_percent_k(150, 1.0), 2u);
  EXPECT_EQ(top_percent_k(5, 1.0), 1u);
  EXPECT_EQ(top_percent_k(7, 100.0), 7u);
  EXPECT_THROW(top_percent_k(10, 0.0), InvalidArgument);
  EXPECT_THROW(top_percent_k(10, 101.0), InvalidArgument);
}

TEST(Recall, CurveMonotoneAndDistractorsNeverHelp) {
  SeededRng rng(9);
  const auto items = random_items(300, 8, rng);
  const DescriptorDatabase db = build_db(items);
  std::vector<LabeledQuery> q;
  for (int i = 0; i < 100; ++i) {
    const auto& t = items[static_cast<std::size_t>(rng.uniform() * 300)];
    GlobalDescriptor d = t.descriptor;
    for (double& x : d.values) x += 0.7 * rng.gaussian();
    q.push_back({t.id, d});
  }
  const auto curve = recall_curve(db, q, 60);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GE(curve[k], curve[k - 1]);
  for (std::size_t k = 1; k <= 60; k += 7) EXPECT_DOUBLE_EQ(curve[k - 1], recall_at_k(db, q, k));

  std::vector<DatabaseItem> extra;
  for (std::size_t i = 0; i < 300; ++i) extra.push_back({1000000 + i, {}, random_desc(8, rng)});
  const auto with = add_distractors(db, extra);
  EXPECT_EQ(with.size(), 600u);
  for (std::size_t k : {1u, 5u, 30u}) EXPECT_LE(recall_at_k(with, q, k), recall_at_k(db, q, k));
}

TEST(Distractors, FarAwayChangeNothingDuplicatesHurt) {
  SeededRng rng(10);
  const auto items = random_items(100, 8, rng);
  const DescriptorDatabase db = build_db(items);
  const auto q = identity_queries(items);
  EXPECT_EQ(recall_at_k(add_distractors(db, {}), q, 1), recall_at_k(db, q, 1));
  std::vector<DatabaseItem> far;
  for (std::size_t i = 0; i < 100; ++i) {
    GlobalDescriptor d = random_desc(8, rng);
    for (double& x : d.values) x += 1000.0;
    far.push_back({5000 + i, {}, d});
  }
  EXPECT_EQ(recall_at_k(add_distractors(db, far), q, 1), 1.0);
  std::vector<DatabaseItem> dups;
  for (std::size_t i = 0; i < 100; ++i) dups.push_back({i, {}, items[i].descriptor});  // ids below the originals
  EXPECT_LT(recall_at_k(add_distractors(db, dups), q, 1), 1.0);
  EXPECT_THROW(add_distractors(db, {{items[0].id, {}, items[0].descriptor}}), InvalidArgument);
}

TEST(RecallVsDistance, ThresholdsAndOracle) {
  SeededRng rng(11);
  const auto items = random_items(80, 5, rng);
  const DescriptorDatabase db = build_db(items);
  std::vector<GeoQuery> q;
  for (const auto& it : items) q.push_back({it.geo, it.descriptor});
  EXPECT_EQ(recall_vs_distance(db, q, std::vector<double>{INFINITY})[0], 1.0);
  EXPECT_EQ(recall_vs_distance(db, q, std::vector<double>{0.1})[0], 1.0);

  std::vector<GeoQuery> noisy;
  for (int i = 0; i < 50; ++i) {
    const auto& t = items[static_cast<std::size_t>(rng.uniform() * 80)];
    GlobalDescriptor d = t.descriptor;
    for (double& x : d.values) x += 0.9 * rng.gaussian();
    noisy.push_back({t.geo, d});
  }
  const std::vector<double> th{1, 100, 500, 2000, 1e7};
  const auto curve = recall_vs_distance(db, noisy, th);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i], curve[i - 1]);
  for (std::size_t t = 0; t < th.size(); ++t) {
    std::size_t ok = 0;
    for (const auto& g : noisy) {
      const auto top = query(db, g.descriptor, 1).matches[0];
      ok += geo_distance_m(db.find(top.id).geo, g.truth) < th[t];
    }
    EXPECT_DOUBLE_EQ(curve[t], static_cast<double>(ok) / 50.0);
  }
}

TEST(DatabaseFile, RoundTripAndLayout) {
  SeededRng rng(12);
  const DescriptorDatabase db = build_db(random_items(25, 7, rng));
  const auto bytes = encode_database(db);
  EXPECT_EQ(std::memcmp(bytes.data(), "CVGEODB\0", 8), 0);
  EXPECT_EQ(bytes.size(), 8u + 4u + 8u + 4u + 25u * (8u + 16u + 4u * 7u));
  const DescriptorDatabase back = decode_database(bytes);
  EXPECT_EQ(back, db);
  EXPECT_EQ(encode_database(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "cvgeo_test_db.bin";
  save_database(path, db);
  EXPECT_EQ(load_database(path), db);
  std::filesystem::remove(path);

  auto cut = bytes;
  cut.resize(cut.size() - 1);
  EXPECT_THROW(decode_database(cut), IoError);
  EXPECT_EQ(decode_database(encode_database(DescriptorDatabase{})).size(), 0u);
}
