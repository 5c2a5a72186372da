#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "seasonmatch/backbone.hpp"
#include "seasonmatch/mining.hpp"

namespace seasonmatch {

struct TrainConfig {
  int epochs = 5;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double margin = 1.0;             // triplet margin
  double contrastive_margin = 1.0;
  bool fine_tune = false;          // also update backbone parameters
  std::uint64_t seed = 0;
  int negative_exclusion = 3;

  static double default_lr(bool fine_tune) { return fine_tune ? 1e-4 : 1e-3; }
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  long samples_seen = 0;  // cumulative
};

using TrainingSamples = std::variant<std::vector<PairSample>, std::vector<TripletSample>>;

using EpochCallback = std::function<void(const EmbeddingModel&, const EpochStats&)>;

// Minibatch SGD on the mean batch loss; embeddings compared with
// Euclidean distance. With fine_tune off the backbone is frozen and tap
// features are computed once, so only the head sees gradients.
// Single-threaded execution is bit-deterministic for a fixed seed.
std::vector<EpochStats> train(EmbeddingModel& model, const AlignedCorpus& corpus,
                              const TrainingSamples& samples, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = nullptr);

std::string training_log_csv(const std::vector<EpochStats>& history);

}  // namespace seasonmatch
