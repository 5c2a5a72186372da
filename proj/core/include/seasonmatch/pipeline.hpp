#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seasonmatch/types.hpp"

namespace seasonmatch {

struct FilterDecision {
  int input_index = 0;
  double speed_kmh = 0.0;
  double intensity = 0.0;
  bool kept = false;
};

struct FilterResult {
  Traverse traverse;  // surviving frames, re-indexed from 0
  std::vector<FilterDecision> decisions;

  int n_kept() const { return traverse.size(); }
  int n_dropped() const { return static_cast<int>(decisions.size()) - traverse.size(); }
};

// Keeps exactly the frames with speed >= speed_min and mean image
// intensity >= darkness_min (stations and tunnels fall below these).
// Frames must carry pixels. Throws DataError if nothing survives.
FilterResult filter_frames(const Traverse& t, double speed_min, double darkness_min);

// Greedy monotone GPS matching. The shortest traverse is the reference;
// each of its frames is matched to the nearest not-yet-passed frame of
// every other traverse, and dropped if any match is farther than
// align_tol_m. Matched frames are re-indexed from 0.
AlignedCorpus align(const std::vector<Traverse>& traverses, double align_tol_m);

// Train indices = [0, N) minus the test segments minus a buffer-wide
// halo on each side of each segment.
Partition make_partition(int total, std::vector<IndexRange> test_segments, int buffer);

// Plain-text partition file: one `train <idx>` or `test <segment> <idx>`
// line per frame, ascending index order.
std::string partition_text(const Partition& p);
void save_partition(const Partition& p, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path);

std::vector<IndexRange> parse_segments(const std::string& spec);  // "a:b,c:d"
std::string format_segments(const std::vector<IndexRange>& segments);

}  // namespace seasonmatch
