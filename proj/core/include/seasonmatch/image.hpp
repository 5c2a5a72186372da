#pragma once

#include <filesystem>
#include <vector>

namespace seasonmatch {

// Dense raster with values in [0, 1], interleaved row-major HWC.
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> px;

  static Image zeros(int h, int w, int c) {
    Image im;
    im.h = h;
    im.w = w;
    im.c = c;
    im.px.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    return im;
  }

  bool empty() const { return px.empty(); }

  float& at(int y, int x, int ch) {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return px[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
};

// Reads a PNG (8-bit gray or RGB) or binary PPM/PGM by extension; pixel
// bytes map to v/255.
Image load_image(const std::filesystem::path& path);

// Writes 8-bit PNG or PPM/PGM by extension; values are clamped to [0,1]
// and quantized with round(v*255).
void save_image(const Image& im, const std::filesystem::path& path);

// Arithmetic mean over all pixels and channels; the darkness proxy used
// by frame filtering.
double mean_intensity(const Image& im);

Image resize_bilinear(const Image& im, int out_h, int out_w);

}  // namespace seasonmatch
