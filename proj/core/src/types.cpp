#include "seasonmatch/types.hpp"

#include <algorithm>
#include <cmath>

#include "seasonmatch/error.hpp"
#include "seasonmatch/geo.hpp"

namespace seasonmatch {

void AlignedCorpus::validate(double align_tol_m) const {
  if (traverses.empty()) throw DataError("aligned corpus has no traverses");
  const int n = length();
  if (n == 0) throw DataError("aligned corpus is empty");
  for (const Traverse& t : traverses) {
    if (t.size() != n)
      throw DataError("traverse '" + t.season + "' has " + std::to_string(t.size()) +
                      " frames, expected " + std::to_string(n));
    for (int i = 0; i < t.size(); ++i) {
      if (t.frames[static_cast<std::size_t>(i)].index != i)
        throw DataError("traverse '" + t.season + "': non-consecutive frame index at " +
                        std::to_string(i));
    }
  }
  if (align_tol_m >= 0.0) {
    for (std::size_t a = 0; a < traverses.size(); ++a) {
      for (std::size_t b = a + 1; b < traverses.size(); ++b) {
        for (int i = 0; i < n; ++i) {
          const Frame& fa = traverses[a].frames[static_cast<std::size_t>(i)];
          const Frame& fb = traverses[b].frames[static_cast<std::size_t>(i)];
          const double d = great_circle_m(fa.lat, fa.lon, fb.lat, fb.lon);
          if (d > align_tol_m)
            throw DataError("alignment violated at index " + std::to_string(i) + " between '" +
                            traverses[a].season + "' and '" + traverses[b].season + "': " +
                            std::to_string(d) + " m");
        }
      }
    }
  }
}

bool same_place(const PlaceLabeling& labeling, long i, long j) {
  return std::labs(i - j) <= labeling.same_place_sep;
}

std::vector<int> Partition::test_indices() const {
  std::vector<int> out;
  for (const IndexRange& seg : test_segments)
    for (int i = seg.begin; i < seg.end; ++i) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

int Partition::n_test() const {
  int n = 0;
  for (const IndexRange& seg : test_segments) n += seg.size();
  return n;
}

bool Partition::is_train(int i) const {
  return std::binary_search(train_indices.begin(), train_indices.end(), i);
}

int Partition::segment_of(int i) const {
  for (std::size_t s = 0; s < test_segments.size(); ++s)
    if (test_segments[s].contains(i)) return static_cast<int>(s);
  return -1;
}

std::vector<SynthCondition> SynthConfig::default_conditions() {
  return {
      {"summer", 0.00, 0.00, 0.02, 0.00},
      {"fall", -0.06, 0.45, 0.02, 0.00},
      {"winter", 0.10, -0.25, 0.03, 0.55},
      {"spring", 0.04, 0.20, 0.02, 0.15},
  };
}

}  // namespace seasonmatch
