#pragma once

#include <string>
#include <vector>

#include "seasonmatch/backbone.hpp"
#include "seasonmatch/descriptor_io.hpp"
#include "seasonmatch/types.hpp"

namespace seasonmatch {

// Immutable database of reference descriptors; rows stay in build order.
struct DescriptorIndex {
  int dim = 0;
  std::vector<float> data;         // count x dim, row-major
  std::vector<int> frame_indices;  // position-aligned
  std::string source_id;

  int count() const { return static_cast<int>(frame_indices.size()); }
  const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * dim; }
};

DescriptorIndex build_index(const DescriptorSet& descriptors, std::vector<int> frame_indices,
                            std::string source_id = "");

struct MatchResult {
  int query_index = 0;      // ground-truth frame index of the query
  int retrieved_index = 0;  // frame index of the nearest database row
  double distance = 0.0;
  bool correct = false;
};

// Exact argmin of Euclidean distance over the whole index, computed in
// double precision; ties break toward the lowest frame index.
MatchResult query_nearest(const DescriptorIndex& idx, const float* query, int dim);

// All rows of `queries` against the index; query_frame_indices supplies
// the ground truth (deterministic output order by query position).
std::vector<MatchResult> query_all(const DescriptorIndex& idx, const DescriptorSet& queries,
                                   const std::vector<int>& query_frame_indices);

// Share of matches with |retrieved - query| <= tolerance; also stamps
// each MatchResult.correct.
double fraction_correct(std::vector<MatchResult>& matches, int tolerance);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
};

// Precision/recall of the distance-thresholded acceptance set per
// threshold; empty acceptance counts as precision 1. Matches must
// already carry correctness flags. Output sorted by threshold.
std::vector<PrPoint> precision_recall(const std::vector<MatchResult>& matches,
                                      std::vector<double> thresholds);

// Evenly spaced thresholds from 0 to the max observed distance.
std::vector<double> linspace_thresholds(const std::vector<MatchResult>& matches, int points);

struct EvalEntry {
  std::string input;      // query season
  std::string reference;  // database season
  double fc = 0.0;
  std::vector<MatchResult> matches;
};

struct EvalReport {
  std::vector<std::string> seasons;
  std::vector<EvalEntry> entries;   // every ordered pair, input != reference
  std::vector<PrPoint> pr_curve;    // pooled over all entries
  int tolerance = 2;

  const EvalEntry* find(const std::string& input, const std::string& reference) const;
  double mean_fc() const;
};

// Full protocol: embed the test frames of every traverse, use each
// season in turn as reference database and every other season as query.
// `source` is "head128" or a backbone tap name for raw-layer baselines.
EvalReport cross_season_matrix(const AlignedCorpus& corpus, const EmbeddingModel& model,
                               const std::vector<int>& test_indices, int tolerance,
                               const std::string& source = "head128", int pr_points = 50);

// Descriptors for one traverse restricted to the given frame indices.
DescriptorSet describe_frames(const Traverse& traverse, const EmbeddingModel& model,
                              const std::vector<int>& indices, const std::string& source);

}  // namespace seasonmatch
