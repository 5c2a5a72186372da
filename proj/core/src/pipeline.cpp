#include "seasonmatch/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "seasonmatch/error.hpp"
#include "seasonmatch/geo.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

FilterResult filter_frames(const Traverse& t, double speed_min, double darkness_min) {
  if (speed_min < 0.0 || darkness_min < 0.0)
    throw UsageError("filter thresholds must be non-negative");
  FilterResult res;
  res.traverse.season = t.season;
  res.traverse.source_id = t.source_id;
  res.decisions.reserve(t.frames.size());
  for (const Frame& f : t.frames) {
    if (f.image.empty())
      throw DataError("filter_frames needs pixels; frame " + std::to_string(f.index) +
                      " of '" + t.season + "' has none");
    FilterDecision d;
    d.input_index = f.index;
    d.speed_kmh = f.speed_kmh;
    d.intensity = mean_intensity(f.image);
    d.kept = f.speed_kmh >= speed_min && d.intensity >= darkness_min;
    res.decisions.push_back(d);
    if (d.kept) {
      Frame kept = f;
      kept.index = res.traverse.size();
      res.traverse.frames.push_back(std::move(kept));
    }
  }
  if (res.traverse.frames.empty())
    throw DataError("all " + std::to_string(t.frames.size()) + " frames of '" + t.season +
                    "' filtered out; review --speed-min/--darkness-min");
  return res;
}

AlignedCorpus align(const std::vector<Traverse>& traverses, double align_tol_m) {
  if (traverses.size() < 2) throw UsageError("alignment needs at least 2 traverses");
  for (const Traverse& t : traverses)
    if (t.frames.empty()) throw DataError("cannot align empty traverse '" + t.season + "'");
  if (align_tol_m < 0.0) throw UsageError("align tolerance must be non-negative");

  std::size_t ref = 0;
  for (std::size_t i = 1; i < traverses.size(); ++i)
    if (traverses[i].size() < traverses[ref].size()) ref = i;

  const Traverse& reference = traverses[ref];
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < traverses.size(); ++i)
    if (i != ref) others.push_back(i);

  // cursor[k]: first index of others[k] still available to keep matches
  // monotone.
  std::vector<int> cursors(others.size(), 0);
  std::vector<std::vector<int>> matches(traverses.size());

  for (const Frame& rf : reference.frames) {
    std::vector<int> candidate(others.size(), -1);
    bool ok = true;
    for (std::size_t k = 0; k < others.size() && ok; ++k) {
      const Traverse& u = traverses[others[k]];
      double best = std::numeric_limits<double>::infinity();
      int best_j = -1;
      for (int j = cursors[k]; j < u.size(); ++j) {
        const Frame& uf = u.frames[static_cast<std::size_t>(j)];
        const double d = great_circle_m(rf.lat, rf.lon, uf.lat, uf.lon);
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      if (best_j < 0 || best > align_tol_m) ok = false;
      candidate[k] = best_j;
    }
    if (!ok) continue;
    matches[ref].push_back(rf.index);
    for (std::size_t k = 0; k < others.size(); ++k) {
      matches[others[k]].push_back(candidate[k]);
      cursors[k] = candidate[k] + 1;
    }
  }

  if (matches[ref].empty())
    throw DataError("alignment produced no frames within " + fmt_g17(align_tol_m) +
                    " m; traverses do not overlap");

  AlignedCorpus corpus;
  corpus.traverses.resize(traverses.size());
  for (std::size_t t = 0; t < traverses.size(); ++t) {
    Traverse out;
    out.season = traverses[t].season;
    out.source_id = traverses[t].source_id;
    out.frames.reserve(matches[t].size());
    for (std::size_t i = 0; i < matches[t].size(); ++i) {
      Frame f = traverses[t].frames[static_cast<std::size_t>(matches[t][i])];
      f.index = static_cast<int>(i);
      out.frames.push_back(std::move(f));
    }
    corpus.traverses[t] = std::move(out);
  }
  corpus.validate(align_tol_m);
  return corpus;
}

Partition make_partition(int total, std::vector<IndexRange> test_segments, int buffer) {
  if (total <= 0) throw UsageError("partition total must be positive");
  if (buffer < 0) throw UsageError("partition buffer must be non-negative");
  std::sort(test_segments.begin(), test_segments.end(),
            [](const IndexRange& a, const IndexRange& b) { return a.begin < b.begin; });
  for (const IndexRange& seg : test_segments) {
    if (seg.begin < 0 || seg.end > total || seg.begin >= seg.end)
      throw UsageError("test segment [" + std::to_string(seg.begin) + "," +
                       std::to_string(seg.end) + ") out of range for N=" + std::to_string(total));
  }
  for (std::size_t i = 1; i < test_segments.size(); ++i) {
    if (test_segments[i].begin < test_segments[i - 1].end)
      throw UsageError("test segments overlap at [" + std::to_string(test_segments[i].begin) +
                       "," + std::to_string(test_segments[i].end) + ")");
  }

  Partition p;
  p.test_segments = test_segments;
  p.buffer = buffer;
  p.total = total;
  for (int i = 0; i < total; ++i) {
    bool excluded = false;
    for (const IndexRange& seg : test_segments) {
      if (i >= seg.begin - buffer && i < seg.end + buffer) {
        excluded = true;
        break;
      }
    }
    if (!excluded) p.train_indices.push_back(i);
  }
  if (p.train_indices.empty())
    throw UsageError("partition leaves no training frames");
  return p;
}

std::string partition_text(const Partition& p) {
  std::string out;
  for (int i = 0; i < p.total; ++i) {
    const int seg = p.segment_of(i);
    if (seg >= 0) {
      out += "test " + std::to_string(seg) + " " + std::to_string(i) + "\n";
    } else if (p.is_train(i)) {
      out += "train " + std::to_string(i) + "\n";
    }
  }
  return out;
}

void save_partition(const Partition& p, const std::filesystem::path& path) {
  std::string out = "# seasonmatch partition total=" + std::to_string(p.total) +
                    " buffer=" + std::to_string(p.buffer) +
                    " segments=" + format_segments(p.test_segments) + "\n";
  out += partition_text(p);
  write_file_atomic(path, out);
}

Partition load_partition(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# seasonmatch partition", 0) != 0)
    throw DataError("not a partition file: " + path.string());
  Partition p;
  {
    const std::size_t at = line.find("total=");
    if (at == std::string::npos)
      throw DataError("partition header missing total=: " + path.string());
    const auto fields = split(trim(line.substr(at)), ' ');
    for (const std::string& f : fields) {
      const auto kv = split(f, '=');
      if (kv.size() != 2) continue;
      if (kv[0] == "total") p.total = static_cast<int>(parse_int(kv[1], "partition total"));
      if (kv[0] == "buffer") p.buffer = static_cast<int>(parse_int(kv[1], "partition buffer"));
      if (kv[0] == "segments") p.test_segments = parse_segments(kv[1]);
    }
  }
  if (p.total <= 0) throw DataError("partition file missing total: " + path.string());
  while (std::getline(in, line)) {
    const std::string l = trim(line);
    if (l.empty() || l[0] == '#') continue;
    const auto cols = split(l, ' ');
    if (cols[0] == "train" && cols.size() == 2) {
      p.train_indices.push_back(static_cast<int>(parse_int(cols[1], "train index")));
    } else if (cols[0] == "test" && cols.size() == 3) {
      // segment membership is reconstructed from the header ranges
    } else {
      throw DataError("bad partition line: '" + l + "' in " + path.string());
    }
  }
  std::sort(p.train_indices.begin(), p.train_indices.end());
  return p;
}

std::vector<IndexRange> parse_segments(const std::string& spec) {
  std::vector<IndexRange> out;
  if (trim(spec).empty()) return out;
  for (const std::string& part : split(spec, ',')) {
    const auto ab = split(part, ':');
    if (ab.size() != 2)
      throw UsageError("bad segment '" + part + "'; expected start:end");
    IndexRange r;
    r.begin = static_cast<int>(parse_int(ab[0], "segment start"));
    r.end = static_cast<int>(parse_int(ab[1], "segment end"));
    out.push_back(r);
  }
  return out;
}

std::string format_segments(const std::vector<IndexRange>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(segments[i].begin) + ":" + std::to_string(segments[i].end);
  }
  return out;
}

}  // namespace seasonmatch
