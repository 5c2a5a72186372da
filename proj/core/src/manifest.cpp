#include "seasonmatch/manifest.hpp"

#include <algorithm>
#include <sstream>

#include "seasonmatch/error.hpp"
#include "seasonmatch/geo.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {
const char* kHeader = "index,timestamp,lat,lon,speed,image_path";
}

Traverse load_traverse(const std::filesystem::path& manifest_path, ImageLoad mode,
                       const std::string& season, LoadStats* stats) {
  if (!std::filesystem::exists(manifest_path))
    throw DataError("manifest not found: " + manifest_path.string());
  const std::string content = read_file(manifest_path);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest: " + manifest_path.string());
  if (trim(line) != kHeader)
    throw DataError("bad manifest header in " + manifest_path.string() + ": expected '" +
                    kHeader + "'");

  const std::filesystem::path base = manifest_path.parent_path();
  Traverse t;
  t.season = season;
  t.source_id = manifest_path.string();
  LoadStats st;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    ++st.rows_total;
    const auto cols = split(line, ',');
    if (cols.size() != 6)
      throw DataError(manifest_path.string() + ":" + std::to_string(lineno) +
                      ": expected 6 columns, got " + std::to_string(cols.size()));
    Frame f;
    bool ok = true;
    try {
      f.timestamp = parse_int(cols[1], "timestamp");
      f.lat = parse_double(cols[2], "lat");
      f.lon = parse_double(cols[3], "lon");
      f.speed_kmh = parse_double(cols[4], "speed");
    } catch (const DataError&) {
      ok = false;
    }
    // Rows with corrupt GPS are dropped and counted rather than repaired.
    if (ok && (!valid_lat(f.lat) || !valid_lon(f.lon) || f.speed_kmh < 0.0)) ok = false;
    if (!ok) {
      ++st.rows_dropped;
      continue;
    }
    f.image_path = trim(cols[5]);
    std::filesystem::path img(f.image_path);
    if (img.is_relative()) f.image_path = (base / img).string();
    t.frames.push_back(std::move(f));
  }
  if (t.frames.empty())
    throw DataError("no valid rows in manifest: " + manifest_path.string() + " (" +
                    std::to_string(st.rows_dropped) + " dropped)");

  std::stable_sort(t.frames.begin(), t.frames.end(),
                   [](const Frame& a, const Frame& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < t.frames.size(); ++i) {
    if (t.frames[i].timestamp == t.frames[i - 1].timestamp)
      throw DataError(manifest_path.string() + ": duplicate timestamp " +
                      std::to_string(t.frames[i].timestamp));
  }
  for (std::size_t i = 0; i < t.frames.size(); ++i)
    t.frames[i].index = static_cast<int>(i);

  if (mode == ImageLoad::eager) {
    parallel_for(t.frames.size(), [&](std::size_t i) {
      t.frames[i].image = load_image(t.frames[i].image_path);
    });
    for (std::size_t i = 1; i < t.frames.size(); ++i) {
      const Image& a = t.frames[0].image;
      const Image& b = t.frames[i].image;
      if (a.h != b.h || a.w != b.w || a.c != b.c)
        throw DataError(manifest_path.string() + ": frame " + std::to_string(i) +
                        " image dimensions differ from frame 0");
    }
  }
  if (stats) *stats = st;
  return t;
}

std::string manifest_csv(const Traverse& t) {
  std::string out = kHeader;
  out += '\n';
  for (const Frame& f : t.frames) {
    out += std::to_string(f.index);
    out += ',';
    out += std::to_string(f.timestamp);
    out += ',';
    out += fmt_g17(f.lat);
    out += ',';
    out += fmt_g17(f.lon);
    out += ',';
    out += fmt_g17(f.speed_kmh);
    out += ',';
    out += f.image_path;
    out += '\n';
  }
  return out;
}

void save_manifest(const Traverse& t, const std::filesystem::path& path) {
  write_file_atomic(path, manifest_csv(t));
}

}  // namespace seasonmatch
