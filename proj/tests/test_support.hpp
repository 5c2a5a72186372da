#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "seasonmatch/image.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/types.hpp"
#include "seasonmatch/util.hpp"

namespace test_support {

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("seasonmatch-" + tag + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline seasonmatch::Image test_image(int h, int w, int c, std::uint64_t seed,
                                     float level = -1.0f) {
  seasonmatch::Image im = seasonmatch::Image::zeros(h, w, c);
  seasonmatch::Rng rng(seed);
  for (float& v : im.px)
    v = level >= 0.0f ? level : static_cast<float>(rng.uniform());
  return im;
}

// Writes a frame image and returns the path (relative name).
inline std::string write_frame_image(const std::filesystem::path& dir, const std::string& name,
                                     const seasonmatch::Image& im) {
  seasonmatch::save_image(im, dir / name);
  return name;
}

}  // namespace test_support
