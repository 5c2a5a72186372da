#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seasonmatch/image.hpp"

namespace seasonmatch {

struct Frame {
  int index = 0;             // position in traverse after filtering, consecutive from 0
  std::int64_t timestamp = 0;  // seconds since epoch
  double lat = 0.0;
  double lon = 0.0;
  double speed_kmh = 0.0;
  Image image;               // may be deferred (empty) until pixels are needed
  std::string image_path;
};

struct Traverse {
  std::string season;
  std::string source_id;
  std::vector<Frame> frames;

  int size() const { return static_cast<int>(frames.size()); }
};

// Traverses index-aligned so that equal frame indices depict the same
// place. Equal length is enforced on construction; when GPS is present
// the pairwise distance at equal index is bounded by the alignment
// tolerance used to build the corpus.
struct AlignedCorpus {
  std::vector<Traverse> traverses;

  int length() const { return traverses.empty() ? 0 : traverses.front().size(); }
  int n_traverses() const { return static_cast<int>(traverses.size()); }
  const Traverse& traverse(int t) const { return traverses[static_cast<std::size_t>(t)]; }

  void validate(double align_tol_m = -1.0) const;  // throws DataError on violation
};

struct PlaceLabeling {
  int same_place_sep = 3;  // max index separation labeled same-place
  int window = 5;          // sliding window, 2*sep - 1, stored explicitly

  static PlaceLabeling with_sep(int sep) { return {sep, sep > 0 ? 2 * sep - 1 : 1}; }
};

// |i - j| <= same_place_sep. Symmetric and reflexive; not transitive.
bool same_place(const PlaceLabeling& labeling, long i, long j);

struct IndexRange {
  int begin = 0;
  int end = 0;  // half-open [begin, end)

  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
};

struct Partition {
  std::vector<IndexRange> test_segments;
  int buffer = 0;  // frames discarded on each side of each test segment
  std::vector<int> train_indices;  // sorted ascending
  int total = 0;

  std::vector<int> test_indices() const;
  int n_test() const;
  int n_train() const { return static_cast<int>(train_indices.size()); }
  int n_discarded() const { return total - n_test() - n_train(); }
  bool is_train(int i) const;
  // segment id for a test index, -1 otherwise
  int segment_of(int i) const;
};

struct SynthCondition {
  std::string name;
  double brightness = 0.0;  // additive shift
  double hue = 0.0;         // hue rotation, radians
  double noise = 0.0;       // additive noise amplitude
  double whiten = 0.0;      // blend fraction toward white
};

struct SynthConfig {
  int n_places = 100;
  std::vector<SynthCondition> conditions;
  int height = 32;
  int width = 32;
  int channels = 3;
  std::uint64_t seed = 0;

  int n_conditions() const { return static_cast<int>(conditions.size()); }
  static std::vector<SynthCondition> default_conditions();
};

}  // namespace seasonmatch
