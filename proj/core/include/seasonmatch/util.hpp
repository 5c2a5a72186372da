#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace seasonmatch {

// Locale-independent numeric formatting. Reports and file formats go
// through these so output bytes are stable.
std::string fmt_g17(double v);              // shortest round-trip exact form
std::string fmt_f(double v, int decimals);  // fixed decimals

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Locale-independent strtod/strtoll wrappers; throw DataError on garbage.
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

std::string read_file(const std::filesystem::path& path);

// Write via temp file + rename so partially written artifacts never
// appear under their final name.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);

std::uint32_t crc32_bytes(const void* data, std::size_t size, std::uint32_t seed = 0);
std::uint32_t file_crc32(const std::filesystem::path& path);

// Intra-stage parallelism cap from SEASONMATCH_THREADS; unset or <=1
// means single-threaded deterministic mode.
int thread_cap();

// Runs fn(i) for i in [0, n). Output written by each call must be
// disjoint; results are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace seasonmatch
