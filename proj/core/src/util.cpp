#include "seasonmatch/util.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "seasonmatch/error.hpp"

namespace seasonmatch {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_f(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t.empty()) throw DataError("empty value for " + std::string(what));
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end != t.c_str() + t.size())
    throw DataError("cannot parse '" + t + "' as number for " + std::string(what));
  return v;
}

long long parse_int(std::string_view s, std::string_view what) {
  const std::string t = trim(s);
  if (t.empty()) throw DataError("empty value for " + std::string(what));
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (errno != 0 || end != t.c_str() + t.size())
    throw DataError("cannot parse '" + t + "' as integer for " + std::string(what));
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw DataError("short write: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  write_file_atomic(path, content.data(), content.size());
}

std::uint32_t crc32_bytes(const void* data, std::size_t size, std::uint32_t seed) {
  return static_cast<std::uint32_t>(
      ::crc32(seed, static_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  return crc32_bytes(content.data(), content.size());
}

int thread_cap() {
  const char* env = std::getenv("SEASONMATCH_THREADS");
  if (!env || !*env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v <= 1) return 1;
  const long hw = static_cast<long>(std::thread::hardware_concurrency());
  return static_cast<int>(hw > 0 && v > hw ? hw : v);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int threads = thread_cap();
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seasonmatch
