#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <vector>

#include "seasonmatch/error.hpp"
#include "seasonmatch/geo.hpp"
#include "seasonmatch/manifest.hpp"
#include "seasonmatch/pipeline.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/synth.hpp"
#include "test_support.hpp"

using namespace seasonmatch;
using test_support::TempDir;

namespace {

// Manifest builder around a scratch dir with one shared tiny image.
struct ManifestFixture {
  TempDir dir{"manifest"};
  std::string image_name;

  ManifestFixture() {
    image_name = test_support::write_frame_image(dir.path, "frame.ppm",
                                                 test_support::test_image(2, 2, 3, 9, 0.5f));
  }

  std::filesystem::path write(const std::string& name,
                              const std::vector<std::string>& rows) const {
    std::string csv = "index,timestamp,lat,lon,speed,image_path\n";
    for (const std::string& r : rows) csv += r + "\n";
    const auto p = dir.path / name;
    write_file_atomic(p, csv);
    return p;
  }

  std::string row(int idx, long ts, double lat, double lon, double speed) const {
    return std::to_string(idx) + "," + std::to_string(ts) + "," + fmt_g17(lat) + "," +
           fmt_g17(lon) + "," + fmt_g17(speed) + "," + image_name;
  }
};

Traverse gps_track(const std::string& season, const std::vector<std::pair<double, double>>& pts) {
  Traverse t;
  t.season = season;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Frame f;
    f.index = static_cast<int>(i);
    f.timestamp = static_cast<std::int64_t>(i);
    f.lat = pts[i].first;
    f.lon = pts[i].second;
    f.speed_kmh = 50.0;
    t.frames.push_back(f);
  }
  return t;
}

// Brute-force optimal monotone matching: min-total-distance assignment
// of every reference frame to strictly increasing indices of `other`.
double dp_optimal_monotone_cost(const Traverse& ref, const Traverse& other) {
  const int n = ref.size(), m = other.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n) + 1,
                                        std::vector<double>(static_cast<std::size_t>(m) + 1, inf));
  for (int j = 0; j <= m; ++j) cost[0][static_cast<std::size_t>(j)] = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= m; ++j) {
      const Frame& a = ref.frames[static_cast<std::size_t>(i - 1)];
      const Frame& b = other.frames[static_cast<std::size_t>(j - 1)];
      const double take =
          cost[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
          great_circle_m(a.lat, a.lon, b.lat, b.lon);
      const double skip = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::min(take, skip);
    }
  }
  return cost[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
}

}  // namespace

TEST_CASE("load_traverse ingests a valid 3-row manifest") {
  ManifestFixture fx;
  const auto p = fx.write("a.csv", {fx.row(0, 100, 60.0, 10.0, 40),
                                    fx.row(1, 101, 60.001, 10.0, 41),
                                    fx.row(2, 102, 60.002, 10.0, 42)});
  LoadStats stats;
  const Traverse t = load_traverse(p, ImageLoad::eager, "winter", &stats);
  REQUIRE(t.size() == 3);
  CHECK(stats.rows_dropped == 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(t.frames[static_cast<std::size_t>(i)].index == i);
    CHECK(t.frames[static_cast<std::size_t>(i)].timestamp == 100 + i);
    CHECK_FALSE(t.frames[static_cast<std::size_t>(i)].image.empty());
  }
  CHECK(t.season == "winter");
}

TEST_CASE("load_traverse drops rows with out-of-range GPS") {
  ManifestFixture fx;
  const auto p = fx.write("bad.csv", {fx.row(0, 100, 60.0, 10.0, 40),
                                      fx.row(1, 101, 999.0, 10.0, 40),
                                      fx.row(2, 102, 60.0, 10.0, 40)});
  LoadStats stats;
  const Traverse t = load_traverse(p, ImageLoad::deferred, "", &stats);
  CHECK(t.size() == 2);
  CHECK(stats.rows_dropped == 1);
  CHECK(stats.rows_total == 3);
}

TEST_CASE("load_traverse sorts shuffled timestamps (sort oracle)") {
  ManifestFixture fx;
  Rng rng(404);
  for (int round = 0; round < 5; ++round) {
    std::vector<long> ts;
    for (int i = 0; i < 30; ++i) ts.push_back(1000 + i * 3);
    std::vector<long> shuffled = ts;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[static_cast<std::size_t>(rng.uniform_u64(i))]);

    std::vector<std::string> rows;
    for (std::size_t i = 0; i < shuffled.size(); ++i)
      rows.push_back(fx.row(static_cast<int>(i), shuffled[i], 60.0, 10.0, 30));
    const Traverse t =
        load_traverse(fx.write("shuf" + std::to_string(round) + ".csv", rows), ImageLoad::deferred);

    std::vector<long> expected = shuffled;
    std::sort(expected.begin(), expected.end());
    REQUIRE(t.size() == static_cast<int>(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
      CHECK(t.frames[i].timestamp == expected[i]);
  }
}

TEST_CASE("load_traverse rejects duplicates, missing files and empty content") {
  ManifestFixture fx;
  CHECK_THROWS_AS(load_traverse(fx.dir.path / "nope.csv"), DataError);
  const auto dup = fx.write("dup.csv", {fx.row(0, 100, 60, 10, 30), fx.row(1, 100, 61, 10, 30)});
  CHECK_THROWS_AS(load_traverse(dup, ImageLoad::deferred), DataError);
  const auto empty = fx.write("empty.csv", {});
  CHECK_THROWS_AS(load_traverse(empty, ImageLoad::deferred), DataError);
  const auto allbad = fx.write("allbad.csv", {fx.row(0, 100, 999, 10, 30)});
  CHECK_THROWS_AS(load_traverse(allbad, ImageLoad::deferred), DataError);
}

TEST_CASE("filter_frames keeps everything at zero thresholds") {
  Traverse t = gps_track("s", {{60, 10}, {60.001, 10}, {60.002, 10}});
  for (Frame& f : t.frames) f.image = test_support::test_image(4, 4, 3, 5, 0.5f);
  const FilterResult r = filter_frames(t, 0.0, 0.0);
  REQUIRE(r.traverse.size() == t.size());
  for (int i = 0; i < t.size(); ++i)
    CHECK(r.traverse.frames[static_cast<std::size_t>(i)].timestamp ==
          t.frames[static_cast<std::size_t>(i)].timestamp);
}

TEST_CASE("filter_frames drops slow frames and re-indexes") {
  Traverse t = gps_track("s", {{60, 10}, {60.001, 10}, {60.002, 10}, {60.003, 10}, {60.004, 10}});
  const double speeds[5] = {0, 20, 20, 0, 20};
  for (int i = 0; i < 5; ++i) {
    t.frames[static_cast<std::size_t>(i)].speed_kmh = speeds[i];
    t.frames[static_cast<std::size_t>(i)].image = test_support::test_image(4, 4, 3, 5, 0.5f);
  }
  const FilterResult r = filter_frames(t, 5.0, 0.0);
  REQUIRE(r.n_kept() == 3);
  CHECK(r.n_dropped() == 2);
  for (int i = 0; i < 3; ++i)
    CHECK(r.traverse.frames[static_cast<std::size_t>(i)].index == i);
  CHECK(r.traverse.frames[0].timestamp == 1);  // original frame 1 survives first
}

TEST_CASE("filter_frames matches a brute-force predicate scan and is idempotent") {
  Rng rng(77);
  Traverse t;
  t.season = "r";
  for (int i = 0; i < 60; ++i) {
    Frame f;
    f.index = i;
    f.timestamp = i;
    f.lat = 60;
    f.lon = 10;
    f.speed_kmh = rng.uniform(0.0, 12.0);
    f.image = test_support::test_image(4, 4, 1, 1000 + static_cast<std::uint64_t>(i),
                                       static_cast<float>(rng.uniform()));
    t.frames.push_back(std::move(f));
  }
  const double speed_min = 5.0, darkness_min = 0.1;
  const FilterResult r = filter_frames(t, speed_min, darkness_min);

  std::vector<int> expected;
  for (const Frame& f : t.frames)
    if (f.speed_kmh >= speed_min && mean_intensity(f.image) >= darkness_min)
      expected.push_back(f.index);
  REQUIRE(r.n_kept() == static_cast<int>(expected.size()));
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(r.traverse.frames[i].timestamp == expected[i]);

  const FilterResult again = filter_frames(r.traverse, speed_min, darkness_min);
  REQUIRE(again.n_kept() == r.n_kept());
  for (int i = 0; i < r.n_kept(); ++i)
    CHECK(again.traverse.frames[static_cast<std::size_t>(i)].timestamp ==
          r.traverse.frames[static_cast<std::size_t>(i)].timestamp);
}

TEST_CASE("filter_frames errors when nothing survives") {
  Traverse t = gps_track("s", {{60, 10}});
  t.frames[0].image = test_support::test_image(4, 4, 3, 5, 0.0f);
  CHECK_THROWS_AS(filter_frames(t, 0.0, 0.5), DataError);
}

TEST_CASE("same_place boundary, symmetry, reflexivity, non-transitivity") {
  const PlaceLabeling l = PlaceLabeling::with_sep(3);
  CHECK(l.window == 5);
  CHECK(same_place(l, 10, 13));
  CHECK(same_place(l, 10, 10));
  CHECK_FALSE(same_place(l, 10, 14));
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const long i = static_cast<long>(rng.uniform_u64(100));
    const long j = static_cast<long>(rng.uniform_u64(100));
    CHECK(same_place(l, i, j) == same_place(l, j, i));
    CHECK(same_place(l, i, i));
  }
  // concrete counterexample to transitivity
  CHECK(same_place(l, 0, 3));
  CHECK(same_place(l, 3, 6));
  CHECK_FALSE(same_place(l, 0, 6));
}

TEST_CASE("align is the identity for identical GPS tracks") {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(60.0 + 1e-4 * i, 10.0);
  const Traverse a = gps_track("a", pts), b = gps_track("b", pts);
  const AlignedCorpus c = align({a, b}, 5.0);
  REQUIRE(c.length() == 50);
  for (int i = 0; i < 50; ++i) {
    CHECK(c.traverse(0).frames[static_cast<std::size_t>(i)].lat ==
          c.traverse(1).frames[static_cast<std::size_t>(i)].lat);
  }
  c.validate(5.0);
}

TEST_CASE("align recovers exact pairs when every 10th frame is missing") {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(60.0 + 1e-4 * i, 10.0 + 2e-5 * (i % 7));
  const Traverse full = gps_track("full", pts);
  std::vector<std::pair<double, double>> sub;
  for (int i = 0; i < 200; ++i)
    if (i % 10 != 0) sub.push_back(pts[static_cast<std::size_t>(i)]);
  const Traverse sparse = gps_track("sparse", sub);

  const AlignedCorpus c = align({full, sparse}, 1.0);
  REQUIRE(c.length() == sparse.size());
  for (int i = 0; i < c.length(); ++i) {
    const Frame& fa = c.traverse(0).frames[static_cast<std::size_t>(i)];
    const Frame& fb = c.traverse(1).frames[static_cast<std::size_t>(i)];
    CHECK(fa.lat == fb.lat);
    CHECK(fa.lon == fb.lon);
  }
  // brute-force optimal monotone matching finds a zero-cost assignment,
  // and the greedy result attains it
  CHECK(dp_optimal_monotone_cost(sparse, full) == 0.0);
}

TEST_CASE("align rejects tracks that never come within tolerance") {
  std::vector<std::pair<double, double>> pts1, pts2;
  for (int i = 0; i < 20; ++i) {
    pts1.emplace_back(60.0 + 1e-4 * i, 10.0);
    pts2.emplace_back(61.0 + 1e-4 * i, 10.0);  // ~111 km away
  }
  CHECK_THROWS_AS(align({gps_track("a", pts1), gps_track("b", pts2)}, 50.0), DataError);
  CHECK_THROWS_AS(align({gps_track("a", pts1)}, 50.0), UsageError);
}

TEST_CASE("make_partition reproduces the three-segment frame counts") {
  const Partition p = make_partition(
      28865, {{5000, 6150}, {14000, 15150}, {23000, 24150}}, 141);
  CHECK(p.n_test() == 3450);
  CHECK(p.n_train() == 24569);
  CHECK(p.n_discarded() == 846);
  CHECK(p.n_test() + p.n_train() + p.n_discarded() == 28865);
}

TEST_CASE("make_partition basic layouts") {
  const Partition p = make_partition(100, {{40, 50}}, 5);
  CHECK(p.n_train() == 80);
  CHECK(p.n_test() == 10);
  for (int i = 0; i < 35; ++i) CHECK(p.is_train(i));
  for (int i = 35; i < 55; ++i) CHECK_FALSE(p.is_train(i));
  for (int i = 55; i < 100; ++i) CHECK(p.is_train(i));

  const Partition q = make_partition(100, {{40, 50}}, 0);
  CHECK(q.n_train() == 90);
  CHECK(q.n_discarded() == 0);
}

TEST_CASE("partition soundness: train indices clear the buffer halo") {
  Rng rng(11);
  for (int round = 0; round < 20; ++round) {
    const int n = 200 + static_cast<int>(rng.uniform_u64(200));
    const int buffer = static_cast<int>(rng.uniform_u64(10));
    const int s1 = 10 + static_cast<int>(rng.uniform_u64(40));
    const int s2 = s1 + 40 + static_cast<int>(rng.uniform_u64(40));
    const Partition p = make_partition(n, {{s1, s1 + 20}, {s2, s2 + 25}}, buffer);
    const std::vector<int> test = p.test_indices();
    for (int tr : p.train_indices)
      for (int te : test) CHECK(std::abs(tr - te) > buffer);
    CHECK(p.n_train() + p.n_test() + p.n_discarded() == n);
  }
}

TEST_CASE("make_partition rejects bad segment lists") {
  CHECK_THROWS_AS(make_partition(100, {{40, 50}, {45, 60}}, 0), UsageError);   // overlap
  CHECK_THROWS_AS(make_partition(100, {{90, 120}}, 0), UsageError);            // out of range
  CHECK_THROWS_AS(make_partition(100, {{0, 100}}, 0), UsageError);             // empty train
  CHECK_THROWS_AS(make_partition(20, {{0, 10}}, 10), UsageError);              // halo eats all
}

TEST_CASE("partition file round-trips") {
  TempDir dir("partition");
  const Partition p = make_partition(120, {{30, 40}, {80, 90}}, 4);
  const auto path = dir.path / "partition.txt";
  save_partition(p, path);
  const Partition q = load_partition(path);
  CHECK(q.total == p.total);
  CHECK(q.buffer == p.buffer);
  CHECK(q.train_indices == p.train_indices);
  REQUIRE(q.test_segments.size() == p.test_segments.size());
  for (std::size_t i = 0; i < p.test_segments.size(); ++i) {
    CHECK(q.test_segments[i].begin == p.test_segments[i].begin);
    CHECK(q.test_segments[i].end == p.test_segments[i].end);
  }
  CHECK(q.test_indices() == p.test_indices());
}

TEST_CASE("parse_segments accepts a:b,c:d and rejects garbage") {
  const auto segs = parse_segments("5:10,20:30");
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].begin == 5);
  CHECK(segs[1].end == 30);
  CHECK(format_segments(segs) == "5:10,20:30");
  CHECK_THROWS(parse_segments("5-10"));
}

TEST_CASE("synth_corpus: zero-strength transforms give bit-identical traverses") {
  SynthConfig cfg;
  cfg.n_places = 10;
  cfg.conditions = {{"a", 0, 0, 0, 0}, {"b", 0, 0, 0, 0}};
  cfg.seed = 99;
  const AlignedCorpus c = synth_corpus(cfg);
  REQUIRE(c.n_traverses() == 2);
  REQUIRE(c.length() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(c.traverse(0).frames[static_cast<std::size_t>(i)].image.px ==
          c.traverse(1).frames[static_cast<std::size_t>(i)].image.px);
  }
}

TEST_CASE("synth_corpus is bit-deterministic for a fixed config") {
  SynthConfig cfg;
  cfg.n_places = 12;
  cfg.conditions = SynthConfig::default_conditions();
  cfg.seed = 1234;
  const AlignedCorpus a = synth_corpus(cfg);
  const AlignedCorpus b = synth_corpus(cfg);
  REQUIRE(a.n_traverses() == b.n_traverses());
  for (int t = 0; t < a.n_traverses(); ++t) {
    for (int i = 0; i < a.length(); ++i) {
      const auto& fa = a.traverse(t).frames[static_cast<std::size_t>(i)];
      const auto& fb = b.traverse(t).frames[static_cast<std::size_t>(i)];
      CHECK(fa.image.px == fb.image.px);
      CHECK(fa.lat == fb.lat);
    }
  }
  a.validate(1.0);
}

TEST_CASE("synth_corpus rejects out-of-range parameters") {
  SynthConfig cfg;
  cfg.n_places = 0;
  cfg.conditions = SynthConfig::default_conditions();
  CHECK_THROWS_AS(synth_corpus(cfg), UsageError);
  cfg.n_places = 5;
  cfg.conditions[0].whiten = 2.0;
  CHECK_THROWS_AS(synth_corpus(cfg), UsageError);
}

TEST_CASE("manifest CSV round-trips a traverse") {
  TempDir dir("roundtrip");
  SynthConfig cfg;
  cfg.n_places = 6;
  cfg.conditions = {{"x", 0.02, 0.1, 0.01, 0.0}};
  cfg.seed = 5;
  AlignedCorpus c = synth_corpus(cfg);
  Traverse& t = c.traverses[0];
  for (Frame& f : t.frames) {
    const std::string name = "img" + std::to_string(f.index) + ".png";
    save_image(f.image, dir.path / name);
    f.image_path = name;
  }
  save_manifest(t, dir.path / "m.csv");
  const Traverse back = load_traverse(dir.path / "m.csv", ImageLoad::eager, "x");
  REQUIRE(back.size() == t.size());
  for (int i = 0; i < t.size(); ++i) {
    const auto& fa = t.frames[static_cast<std::size_t>(i)];
    const auto& fb = back.frames[static_cast<std::size_t>(i)];
    CHECK(fa.timestamp == fb.timestamp);
    CHECK(fa.lat == fb.lat);
    CHECK(fa.lon == fb.lon);
    CHECK(fa.speed_kmh == fb.speed_kmh);
    // 8-bit quantization bound per channel
    REQUIRE(fa.image.px.size() == fb.image.px.size());
    for (std::size_t k = 0; k < fa.image.px.size(); ++k)
      CHECK(std::abs(fa.image.px[k] - fb.image.px[k]) <= 0.5f / 255.0f + 1e-6f);
  }
}
