#pragma once

#include <filesystem>
#include <string>

#include "seasonmatch/types.hpp"

namespace seasonmatch {

// Whether traverse loading should also decode the referenced images.
// Deferred is for GPS/metadata-only work; pixel-dependent stages
// (darkness filtering, feature extraction) need Eager.
enum class ImageLoad { eager, deferred };

struct LoadStats {
  int rows_total = 0;
  int rows_dropped = 0;  // unparseable or out-of-range GPS rows
};

// Reads a manifest CSV (header `index,timestamp,lat,lon,speed,image_path`)
// into a Traverse ordered by timestamp. Rows with invalid GPS or
// negative speed are dropped and counted; duplicate timestamps and an
// empty result are rejected. Relative image paths resolve against the
// manifest's directory.
Traverse load_traverse(const std::filesystem::path& manifest_path,
                       ImageLoad mode = ImageLoad::eager,
                       const std::string& season = "",
                       LoadStats* stats = nullptr);

// Writes the counterpart CSV. Image paths are written as given in the
// frames (the caller controls relative vs absolute).
std::string manifest_csv(const Traverse& t);
void save_manifest(const Traverse& t, const std::filesystem::path& path);

}  // namespace seasonmatch
