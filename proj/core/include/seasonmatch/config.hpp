#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seasonmatch/pipeline.hpp"
#include "seasonmatch/train.hpp"
#include "seasonmatch/types.hpp"

namespace seasonmatch {

// One run's configuration. Sourced from a flat key-value config file
// (`section.key = value`, '#' comments); CLI flags apply on top via the
// same keys, so a flag always overrides the file.
struct RunConfig {
  std::filesystem::path out_dir = "runs/out";
  std::uint64_t seed = 0;

  // corpus: explicit season manifests, or the synth stage's output
  std::vector<std::pair<std::string, std::string>> corpus_manifests;  // (season, path)
  SynthConfig synth;

  double speed_min = 15.0;
  double darkness_min = 0.2;
  double align_tol_m = 25.0;
  PlaceLabeling labeling = PlaceLabeling::with_sep(3);

  std::vector<IndexRange> test_segments;
  int buffer = 141;

  std::vector<int> model_widths = {16, 32, 48, 64};
  std::string tap = "pool4";
  bool mean_subtract = false;
  std::filesystem::path init_weights;  // optional externally supplied weights

  std::string loss = "triplet";  // or "contrastive"
  TrainConfig train;
  std::optional<double> lr;  // unset -> TrainConfig::default_lr(fine_tune)
  std::uint64_t n_pairs = 1000;
  std::uint64_t n_triplets = 1000;

  std::string embed_source = "head128";
  int tolerance = 2;
  int pr_points = 50;

  // Applies one key (file or flag); unknown keys and malformed values
  // throw UsageError.
  void apply(const std::string& key, const std::string& value);

  // Resolved training config (seed and learning-rate defaults applied).
  TrainConfig resolved_train() const;

  static RunConfig defaults() { return make_default(); }
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_text(const std::string& text);

 private:
  static RunConfig make_default();
};

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace seasonmatch
