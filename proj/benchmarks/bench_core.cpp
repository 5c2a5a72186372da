#include <benchmark/benchmark.h>

#include "seasonmatch/backbone.hpp"
#include "seasonmatch/losses.hpp"
#include "seasonmatch/retrieval.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/synth.hpp"

using namespace seasonmatch;

namespace {

DescriptorSet random_set(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  DescriptorSet set;
  set.dim = dim;
  set.data.resize(static_cast<std::size_t>(count) * dim);
  for (float& v : set.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return set;
}

void BM_QueryNearest(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const int dim = static_cast<int>(state.range(1));
  const DescriptorSet db = random_set(count, dim, 1);
  const DescriptorSet queries = random_set(64, dim, 2);
  std::vector<int> frames(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) frames[static_cast<std::size_t>(i)] = i;
  const DescriptorIndex idx = build_index(db, frames);
  int q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(query_nearest(idx, queries.row(q), dim));
    q = (q + 1) % queries.count();
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_QueryNearest)->Args({1000, 128})->Args({10000, 128})->Args({1000, 8});

void BM_TripletLoss(benchmark::State& state) {
  Rng rng(7);
  double acc = 0.0;
  for (auto _ : state) {
    acc += wohlhart_lepetit_loss(rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0), 1.0);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_TripletLoss);

void BM_DeskForward(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_places = 1;
  cfg.conditions = {{"a", 0, 0, 0, 0}};
  cfg.seed = 3;
  const AlignedCorpus corpus = synth_corpus(cfg);
  const Image& im = corpus.traverse(0).frames.front().image;
  const EmbeddingModel model =
      EmbeddingModel::create(Architecture::desk(im.h, im.w, im.c), "pool4", 11);
  for (auto _ : state) benchmark::DoNotOptimize(embed(model, im));
}
BENCHMARK(BM_DeskForward);

}  // namespace

BENCHMARK_MAIN();
