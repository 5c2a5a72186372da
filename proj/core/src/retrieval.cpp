#include "seasonmatch/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seasonmatch/error.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

DescriptorIndex build_index(const DescriptorSet& descriptors, std::vector<int> frame_indices,
                            std::string source_id) {
  if (descriptors.count() == 0 || descriptors.dim <= 0)
    throw DataError("cannot build index from empty descriptor set");
  if (static_cast<std::size_t>(descriptors.count()) != frame_indices.size())
    throw DataError("index build: " + std::to_string(descriptors.count()) +
                    " descriptors but " + std::to_string(frame_indices.size()) +
                    " frame indices");
  for (float v : descriptors.data)
    if (!std::isfinite(v)) throw DataError("index build: non-finite descriptor value");
  DescriptorIndex idx;
  idx.dim = descriptors.dim;
  idx.data = descriptors.data;
  idx.frame_indices = std::move(frame_indices);
  idx.source_id = std::move(source_id);
  return idx;
}

MatchResult query_nearest(const DescriptorIndex& idx, const float* query, int dim) {
  if (idx.count() == 0) throw DataError("query against empty index");
  if (dim != idx.dim)
    throw DataError("query dim " + std::to_string(dim) + " != index dim " +
                    std::to_string(idx.dim));
  double best = std::numeric_limits<double>::infinity();
  int best_pos = -1;
  for (int i = 0; i < idx.count(); ++i) {
    const float* row = idx.row(i);
    double acc = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = static_cast<double>(query[k]) - static_cast<double>(row[k]);
      acc += d * d;
    }
    if (acc < best ||
        (acc == best && idx.frame_indices[static_cast<std::size_t>(i)] <
                            idx.frame_indices[static_cast<std::size_t>(best_pos)])) {
      best = acc;
      best_pos = i;
    }
  }
  MatchResult m;
  m.retrieved_index = idx.frame_indices[static_cast<std::size_t>(best_pos)];
  m.distance = std::sqrt(best);
  return m;
}

std::vector<MatchResult> query_all(const DescriptorIndex& idx, const DescriptorSet& queries,
                                   const std::vector<int>& query_frame_indices) {
  if (static_cast<std::size_t>(queries.count()) != query_frame_indices.size())
    throw DataError("query_all: frame index list does not match query count");
  std::vector<MatchResult> out(static_cast<std::size_t>(queries.count()));
  parallel_for(out.size(), [&](std::size_t i) {
    MatchResult m = query_nearest(idx, queries.row(static_cast<int>(i)), queries.dim);
    m.query_index = query_frame_indices[i];
    out[i] = m;
  });
  return out;
}

double fraction_correct(std::vector<MatchResult>& matches, int tolerance) {
  if (matches.empty()) throw DataError("fraction_correct on empty match list");
  if (tolerance < 0) throw UsageError("tolerance must be >= 0");
  long correct = 0;
  for (MatchResult& m : matches) {
    m.correct = std::abs(m.retrieved_index - m.query_index) <= tolerance;
    if (m.correct) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(matches.size());
}

std::vector<PrPoint> precision_recall(const std::vector<MatchResult>& matches,
                                      std::vector<double> thresholds) {
  if (matches.empty()) throw DataError("precision_recall on empty match list");
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<PrPoint> out;
  out.reserve(thresholds.size());
  const double total = static_cast<double>(matches.size());
  for (double t : thresholds) {
    long accepted = 0, correct = 0;
    for (const MatchResult& m : matches) {
      if (m.distance <= t) {
        ++accepted;
        if (m.correct) ++correct;
      }
    }
    PrPoint p;
    p.threshold = t;
    p.precision = accepted == 0 ? 1.0 : static_cast<double>(correct) / accepted;
    p.recall = static_cast<double>(correct) / total;
    out.push_back(p);
  }
  return out;
}

std::vector<double> linspace_thresholds(const std::vector<MatchResult>& matches, int points) {
  if (points < 2) throw UsageError("need at least 2 threshold points");
  double dmax = 0.0;
  for (const MatchResult& m : matches) dmax = std::max(dmax, m.distance);
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    out[static_cast<std::size_t>(i)] = dmax * static_cast<double>(i) / (points - 1);
  return out;
}

const EvalEntry* EvalReport::find(const std::string& input, const std::string& reference) const {
  for (const EvalEntry& e : entries)
    if (e.input == input && e.reference == reference) return &e;
  return nullptr;
}

double EvalReport::mean_fc() const {
  if (entries.empty()) return 0.0;
  double sum = 0.0;
  for (const EvalEntry& e : entries) sum += e.fc;
  return sum / static_cast<double>(entries.size());
}

DescriptorSet describe_frames(const Traverse& traverse, const EmbeddingModel& model,
                              const std::vector<int>& indices, const std::string& source) {
  if (indices.empty()) throw DataError("describe_frames: no frame indices selected");
  std::vector<const Image*> images;
  images.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= traverse.size())
      throw DataError("frame index " + std::to_string(i) + " outside traverse '" +
                      traverse.season + "'");
    images.push_back(&traverse.frames[static_cast<std::size_t>(i)].image);
  }
  const std::vector<Descriptor> ds = source == "head128"
                                         ? embed_batch(model, images)
                                         : extract_features_batch(model, images, source);
  DescriptorSet set;
  set.dim = ds.front().dim();
  set.data.reserve(ds.size() * static_cast<std::size_t>(set.dim));
  for (const Descriptor& d : ds) set.data.insert(set.data.end(), d.values.begin(), d.values.end());
  return set;
}

EvalReport cross_season_matrix(const AlignedCorpus& corpus, const EmbeddingModel& model,
                               const std::vector<int>& test_indices, int tolerance,
                               const std::string& source, int pr_points) {
  if (corpus.n_traverses() < 2)
    throw UsageError("cross-season evaluation needs at least 2 traverses");
  EvalReport report;
  report.tolerance = tolerance;
  std::vector<DescriptorSet> sets(static_cast<std::size_t>(corpus.n_traverses()));
  for (int t = 0; t < corpus.n_traverses(); ++t) {
    report.seasons.push_back(corpus.traverse(t).season);
    sets[static_cast<std::size_t>(t)] =
        describe_frames(corpus.traverse(t), model, test_indices, source);
  }
  std::vector<MatchResult> pooled;
  for (int qi = 0; qi < corpus.n_traverses(); ++qi) {
    for (int ri = 0; ri < corpus.n_traverses(); ++ri) {
      if (qi == ri) continue;
      DescriptorIndex idx = build_index(sets[static_cast<std::size_t>(ri)], test_indices,
                                        corpus.traverse(ri).season);
      EvalEntry e;
      e.input = corpus.traverse(qi).season;
      e.reference = corpus.traverse(ri).season;
      e.matches = query_all(idx, sets[static_cast<std::size_t>(qi)], test_indices);
      e.fc = fraction_correct(e.matches, tolerance);
      pooled.insert(pooled.end(), e.matches.begin(), e.matches.end());
      report.entries.push_back(std::move(e));
    }
  }
  report.pr_curve = precision_recall(pooled, linspace_thresholds(pooled, pr_points));
  return report;
}

}  // namespace seasonmatch
