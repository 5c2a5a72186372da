#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "seasonmatch/error.hpp"
#include "seasonmatch/losses.hpp"
#include "seasonmatch/mining.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/synth.hpp"
#include "seasonmatch/train.hpp"
#include "seasonmatch/weights_io.hpp"
#include "test_support.hpp"

using namespace seasonmatch;

namespace {

// Exhaustive counting oracles over all slot combinations.
struct BruteCounts {
  std::uint64_t positive_pairs = 0;
  std::uint64_t negative_pairs = 0;
  std::uint64_t triplets = 0;
};

BruteCounts brute_populations(int n_traverses, const std::vector<int>& allowed, int sep,
                              int excl) {
  BruteCounts out;
  const int a = static_cast<int>(allowed.size());
  const int m = std::max(sep, excl);
  auto is_pos = [&](int i, int j) { return std::abs(allowed[static_cast<std::size_t>(i)] -
                                                    allowed[static_cast<std::size_t>(j)]) <= sep; };
  auto is_neg = [&](int i, int j) { return std::abs(allowed[static_cast<std::size_t>(i)] -
                                                    allowed[static_cast<std::size_t>(j)]) > m; };
  // positive: unordered slot pairs on different traverses
  for (int ta = 0; ta < n_traverses; ++ta)
    for (int tb = ta + 1; tb < n_traverses; ++tb)
      for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j)
          if (is_pos(i, j)) ++out.positive_pairs;
  // negative: unordered slot pairs on any traverses
  for (int t1 = 0; t1 < n_traverses; ++t1) {
    for (int t2 = t1; t2 < n_traverses; ++t2) {
      for (int i = 0; i < a; ++i) {
        const int j0 = (t1 == t2) ? i + 1 : 0;
        for (int j = j0; j < a; ++j)
          if (is_neg(i, j)) ++out.negative_pairs;
      }
    }
  }
  // triplets: per neutral slot, positives x negatives
  for (int tn = 0; tn < n_traverses; ++tn) {
    for (int i = 0; i < a; ++i) {
      std::uint64_t pos = 0, neg = 0;
      for (int tp = 0; tp < n_traverses; ++tp) {
        if (tp == tn) continue;
        for (int j = 0; j < a; ++j)
          if (is_pos(i, j)) ++pos;
      }
      for (int tg = 0; tg < n_traverses; ++tg)
        for (int k = 0; k < a; ++k)
          if (is_neg(i, k)) ++neg;
      out.triplets += pos * neg;
    }
  }
  return out;
}

std::vector<int> iota_indices(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

// Tiny two-place corpus with handcrafted 2x2x2 images; tap "input" has
// dimension 8. Places are near-duplicates while the condition shift is
// strong, so the raw metric starts out wrong and the head has something
// to learn.
AlignedCorpus toy_corpus() {
  const Image base = test_support::test_image(2, 2, 2, 7);
  const Image bump = test_support::test_image(2, 2, 2, 13);
  AlignedCorpus corpus;
  for (int t = 0; t < 2; ++t) {
    Traverse tr;
    tr.season = t == 0 ? "cond-a" : "cond-b";
    for (int i = 0; i < 2; ++i) {
      Frame f;
      f.index = i;
      f.timestamp = i;
      f.lat = 60 + 1e-3 * i;
      f.lon = 10;
      f.speed_kmh = 50;
      f.image = base;
      for (std::size_t k = 0; k < f.image.px.size(); ++k) {
        float v = f.image.px[k] + 0.08f * static_cast<float>(i) * bump.px[k];
        if (t == 1) v = v * 0.5f + 0.45f;  // strong appearance shift
        f.image.px[k] = std::min(1.0f, v);
      }
      tr.frames.push_back(std::move(f));
    }
    corpus.traverses.push_back(std::move(tr));
  }
  return corpus;
}

Architecture toy_arch() {
  Architecture a;
  a.id = "toy";
  a.input_h = 2;
  a.input_w = 2;
  a.input_c = 2;
  return a;
}

}  // namespace

TEST_CASE("wohlhart-lepetit loss analytic values") {
  CHECK(wohlhart_lepetit_loss(1.0, 1.0, 1.0) == 0.5);
  CHECK(wohlhart_lepetit_loss(0.5, 2.0, 1.0) == 0.0);
  CHECK(wohlhart_lepetit_loss(0.0, 0.0, 1.0) == 1.0);
  CHECK_THROWS_AS(wohlhart_lepetit_loss(-0.1, 1.0, 1.0), UsageError);
  CHECK_THROWS_AS(wohlhart_lepetit_loss(0.1, 1.0, 0.0), UsageError);
}

TEST_CASE("wohlhart-lepetit range and zero branch over random inputs") {
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const double d_p = rng.uniform(0.0, 5.0);
    const double d_n = rng.uniform(0.0, 5.0);
    const double margin = rng.uniform(0.1, 3.0);
    const double loss = wohlhart_lepetit_loss(d_p, d_n, margin);
    CHECK(loss >= 0.0);
    CHECK(loss <= 1.0);
    CHECK((loss == 0.0) == (d_n >= margin + d_p));
    if (d_n == 0.0) CHECK(loss == 1.0);
  }
}

TEST_CASE("wohlhart-lepetit monotonicity in both distances") {
  Rng rng(2);
  for (int k = 0; k < 2000; ++k) {
    const double margin = rng.uniform(0.2, 2.0);
    const double d_p = rng.uniform(0.0, 3.0);
    const double d_n = rng.uniform(1e-6, 3.0);
    const double bump = rng.uniform(1e-6, 1.0);
    CHECK(wohlhart_lepetit_loss(d_p, d_n + bump, margin) <=
          wohlhart_lepetit_loss(d_p, d_n, margin));
    const double l = wohlhart_lepetit_loss(d_p, d_n, margin);
    if (l > 0.0 && l < 1.0)
      CHECK(wohlhart_lepetit_loss(d_p + bump, d_n, margin) >= l);
  }
}

TEST_CASE("contrastive loss analytic values") {
  CHECK(contrastive_loss(0.0, PairLabel::positive, 1.0) == 0.0);
  CHECK(contrastive_loss(2.0, PairLabel::negative, 1.0) == 0.0);
  CHECK(contrastive_loss(0.25, PairLabel::negative, 1.0) == doctest::Approx(0.5625).epsilon(1e-12));
  CHECK(contrastive_loss(1.5, PairLabel::positive, 1.0) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK_THROWS_AS(contrastive_loss(-1.0, PairLabel::positive, 1.0), UsageError);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(3);
  const double h = 1e-6;
  int checked = 0;
  while (checked < 100) {
    const double margin = rng.uniform(0.2, 2.0);
    const double d = rng.uniform(h, 4.0);
    if (std::abs(d - margin) <= 1e-3) continue;  // stay away from the kink
    for (PairLabel label : {PairLabel::positive, PairLabel::negative}) {
      const double fd = (contrastive_loss(d + h, label, margin) -
                         contrastive_loss(d - h, label, margin)) /
                        (2.0 * h);
      const double an = contrastive_loss_grad(d, label, margin);
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
    }
    ++checked;
  }

  checked = 0;
  while (checked < 100) {
    const double margin = rng.uniform(0.2, 2.0);
    const double d_p = rng.uniform(h, 3.0);
    const double d_n = rng.uniform(h, 5.0);
    if (std::abs(d_n - (margin + d_p)) <= 1e-3) continue;
    const TripletLossGrad g = wohlhart_lepetit_grad(d_p, d_n, margin);
    const double fd_p = (wohlhart_lepetit_loss(d_p + h, d_n, margin) -
                         wohlhart_lepetit_loss(d_p - h, d_n, margin)) /
                        (2.0 * h);
    const double fd_n = (wohlhart_lepetit_loss(d_p, d_n + h, margin) -
                         wohlhart_lepetit_loss(d_p, d_n - h, margin)) /
                        (2.0 * h);
    CHECK(std::abs(fd_p - g.d_dp) <= 1e-5 * std::max(1.0, std::abs(g.d_dp)));
    CHECK(std::abs(fd_n - g.d_dn) <= 1e-5 * std::max(1.0, std::abs(g.d_dn)));
    ++checked;
  }
}

TEST_CASE("mined pairs satisfy the pair predicates") {
  SynthConfig cfg;
  cfg.n_places = 10;
  cfg.conditions = {{"a", 0, 0, 0, 0}, {"b", 0.1, 0, 0.01, 0}};
  cfg.seed = 4;
  const AlignedCorpus corpus = synth_corpus(cfg);
  const PlaceLabeling labeling = PlaceLabeling::with_sep(3);

  const std::vector<PairSample> pairs = mine_pairs(corpus, labeling, 5, 5, 11, 3);
  REQUIRE(pairs.size() == 10);
  int pos = 0, neg = 0;
  for (const PairSample& p : pairs) {
    const int di = std::abs(p.anchor.index - p.other.index);
    if (p.label == PairLabel::positive) {
      ++pos;
      CHECK(di <= 3);
      CHECK(p.anchor.traverse != p.other.traverse);
    } else {
      ++neg;
      CHECK(di > 3);
    }
  }
  CHECK(pos == 5);
  CHECK(neg == 5);
}

TEST_CASE("mined triplets satisfy both pair predicates") {
  SynthConfig cfg;
  cfg.n_places = 20;
  cfg.conditions = {{"a", 0, 0, 0, 0}, {"b", 0.1, 0, 0.01, 0}, {"c", -0.1, 0, 0.01, 0}};
  cfg.seed = 6;
  const AlignedCorpus corpus = synth_corpus(cfg);
  const PlaceLabeling labeling = PlaceLabeling::with_sep(3);

  const std::vector<TripletSample> triplets = mine_triplets(corpus, labeling, 200, 21, 3);
  REQUIRE(triplets.size() == 200);
  for (const TripletSample& t : triplets) {
    CHECK(std::abs(t.neutral.index - t.positive.index) <= 3);
    CHECK(t.neutral.traverse != t.positive.traverse);
    CHECK(std::abs(t.neutral.index - t.negative.index) > 3);
    CHECK(t.negative.traverse >= 0);
    CHECK(t.negative.traverse < 3);
  }
  CHECK(mine_triplets(corpus, labeling, 200, 21, 3) == triplets);
  CHECK(mine_triplets(corpus, labeling, 200, 22, 3) != triplets);
}

TEST_CASE("mining populations equal exhaustive enumeration") {
  for (int n_traverses : {2, 3}) {
    for (int sep : {0, 3}) {
      for (int excl : {0, 3, 5}) {
        const int n = 60;
        const Miner miner(n_traverses, iota_indices(n), PlaceLabeling::with_sep(sep), excl);
        const BruteCounts brute = brute_populations(n_traverses, iota_indices(n), sep, excl);
        CHECK(miner.population().positive_pairs == brute.positive_pairs);
        CHECK(miner.population().negative_pairs == brute.negative_pairs);
        CHECK(miner.population().triplets == brute.triplets);
      }
    }
  }
}

TEST_CASE("mining populations with a restricted (train-only) index set") {
  // gap-y allowed set exercises the windowed counting
  std::vector<int> allowed;
  for (int i = 0; i < 80; ++i)
    if (i % 7 != 0) allowed.push_back(i);
  const Miner miner(2, allowed, PlaceLabeling::with_sep(3), 3);
  const BruteCounts brute = brute_populations(2, allowed, 3, 3);
  CHECK(miner.population().positive_pairs == brute.positive_pairs);
  CHECK(miner.population().negative_pairs == brute.negative_pairs);
  CHECK(miner.population().triplets == brute.triplets);
}

TEST_CASE("sampling without replacement: distinct, exact count, population errors") {
  const Miner miner(2, iota_indices(12), PlaceLabeling::with_sep(1), 1);
  // small population: positives = 1 pair * sum(win) = 12 + 2*11 = 34
  CHECK(miner.population().positive_pairs == 34);
  const std::vector<PairSample> all = miner.sample_pairs(34, 0, 5);
  std::set<std::tuple<int, int, int, int>> uniq;
  for (const PairSample& p : all)
    uniq.insert({p.anchor.traverse, p.anchor.index, p.other.traverse, p.other.index});
  CHECK(uniq.size() == 34);
  CHECK_THROWS_AS(miner.sample_pairs(35, 0, 5), DataError);
  CHECK_THROWS_AS(miner.sample_triplets(miner.population().triplets + 1, 5), DataError);
}

TEST_CASE("training on the toy corpus reduces the triplet loss") {
  const AlignedCorpus corpus = toy_corpus();
  EmbeddingModel model = EmbeddingModel::create(toy_arch(), "input", 91);
  REQUIRE(model.tap_dim() == 8);

  const PlaceLabeling labeling = PlaceLabeling::with_sep(0);
  const std::vector<TripletSample> triplets = mine_triplets(corpus, labeling, 8, 17, 0);
  REQUIRE(triplets.size() == 8);

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.margin = 1.0;
  cfg.seed = 5;
  const std::vector<EpochStats> history = train(model, corpus, TrainingSamples(triplets), cfg);
  REQUIRE(history.size() == 50);
  CHECK(history.front().samples_seen == 8);
  CHECK(history.back().samples_seen == 400);
  CHECK(history.back().mean_loss < history.front().mean_loss);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const AlignedCorpus corpus = toy_corpus();
  EmbeddingModel model = EmbeddingModel::create(toy_arch(), "input", 13);
  const std::vector<float> head_before = model.head_w;
  const std::vector<TripletSample> triplets =
      mine_triplets(corpus, PlaceLabeling::with_sep(0), 4, 3, 0);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.0;
  cfg.seed = 1;
  train(model, corpus, TrainingSamples(triplets), cfg);
  CHECK(model.head_w == head_before);
}

TEST_CASE("head-only training freezes the backbone and its tap outputs") {
  SynthConfig scfg;
  scfg.n_places = 12;
  scfg.conditions = {{"a", 0, 0, 0, 0}, {"b", 0.08, 0.1, 0.01, 0.1}};
  scfg.seed = 8;
  scfg.height = 16;
  scfg.width = 16;
  const AlignedCorpus corpus = synth_corpus(scfg);
  EmbeddingModel model =
      EmbeddingModel::create(Architecture::desk(16, 16, 3, {8, 16}), "pool2", 44);
  const std::uint32_t checksum_before = backbone_checksum(model);
  const Image& probe = corpus.traverse(0).frames[3].image;
  const std::vector<float> tap_before = extract_features(model, probe, "pool2").values;

  const std::vector<TripletSample> triplets =
      mine_triplets(corpus, PlaceLabeling::with_sep(2), 40, 9, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  cfg.seed = 2;
  cfg.fine_tune = false;
  train(model, corpus, TrainingSamples(triplets), cfg);
  CHECK(backbone_checksum(model) == checksum_before);
  CHECK(extract_features(model, probe, "pool2").values == tap_before);
}

TEST_CASE("fine-tuning updates backbone parameters") {
  SynthConfig scfg;
  scfg.n_places = 10;
  scfg.conditions = {{"a", 0, 0, 0, 0}, {"b", 0.08, 0.1, 0.01, 0.1}};
  scfg.seed = 18;
  scfg.height = 16;
  scfg.width = 16;
  const AlignedCorpus corpus = synth_corpus(scfg);
  EmbeddingModel model =
      EmbeddingModel::create(Architecture::desk(16, 16, 3, {8, 16}), "pool2", 44);
  const std::uint32_t checksum_before = backbone_checksum(model);

  const std::vector<TripletSample> triplets =
      mine_triplets(corpus, PlaceLabeling::with_sep(2), 20, 9, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 5;
  cfg.learning_rate = 0.02;
  cfg.seed = 2;
  cfg.fine_tune = true;
  const auto history = train(model, corpus, TrainingSamples(triplets), cfg);
  CHECK(backbone_checksum(model) != checksum_before);
  for (const EpochStats& st : history) CHECK(std::isfinite(st.mean_loss));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const AlignedCorpus corpus = toy_corpus();
  const std::vector<TripletSample> triplets =
      mine_triplets(corpus, PlaceLabeling::with_sep(0), 8, 17, 0);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;

  EmbeddingModel m1 = EmbeddingModel::create(toy_arch(), "input", 91);
  EmbeddingModel m2 = EmbeddingModel::create(toy_arch(), "input", 91);
  const auto h1 = train(m1, corpus, TrainingSamples(triplets), cfg);
  const auto h2 = train(m2, corpus, TrainingSamples(triplets), cfg);
  CHECK(m1.head_w == m2.head_w);
  CHECK(m1.head_b == m2.head_b);
  REQUIRE(h1.size() == h2.size());
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].mean_loss == h2[i].mean_loss);
}

TEST_CASE("exploding contrastive training aborts with a numerical error") {
  const AlignedCorpus corpus = toy_corpus();
  EmbeddingModel model = EmbeddingModel::create(toy_arch(), "input", 7);
  const std::vector<PairSample> pairs =
      mine_pairs(corpus, PlaceLabeling::with_sep(0), 2, 2, 3, 0);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 1;
  cfg.learning_rate = 1e30;
  cfg.seed = 9;
  CHECK_THROWS_AS(train(model, corpus, TrainingSamples(pairs), cfg), NumericalError);
}

TEST_CASE("empty sample set is rejected") {
  const AlignedCorpus corpus = toy_corpus();
  EmbeddingModel model = EmbeddingModel::create(toy_arch(), "input", 7);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(model, corpus, TrainingSamples(std::vector<TripletSample>{}), cfg),
                  UsageError);
}

TEST_CASE("training log CSV shape") {
  std::vector<EpochStats> h = {{1, 0.5, 100}, {2, 0.25, 200}};
  const std::string csv = training_log_csv(h);
  CHECK(csv.rfind("epoch,mean_loss,samples_seen\n", 0) == 0);
  CHECK(csv.find("1,0.5,100") != std::string::npos);
  CHECK(csv.find("2,0.25,200") != std::string::npos);
}
