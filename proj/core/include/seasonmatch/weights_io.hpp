#pragma once

#include <filesystem>

#include "seasonmatch/backbone.hpp"

namespace seasonmatch {

// SMW1 weights file: magic "SMW1", then one record per parameter tensor
// (u32 name length, name bytes, u32 rank, rank u32 dims, float32
// payload), trailing CRC-32 over all preceding bytes. Little-endian
// throughout. Record names are "<layer>.weight" / "<layer>.bias" plus
// "head.weight" / "head.bias".
void save_weights(const EmbeddingModel& m, const std::filesystem::path& path);

// Loads into an existing model; every record must match the configured
// architecture's shapes (mismatches name the offending layer). The CRC
// is verified before any record is parsed, so truncated or corrupt
// files fail up front.
void load_weights(EmbeddingModel& m, const std::filesystem::path& path);

}  // namespace seasonmatch
