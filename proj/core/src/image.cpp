#include "seasonmatch/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "seasonmatch/error.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

unsigned char quantize(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<unsigned char>(std::lround(clamped * 255.0f));
}

Image from_bytes(const unsigned char* bytes, int h, int w, int c) {
  Image im = Image::zeros(h, w, c);
  const std::size_t n = im.px.size();
  for (std::size_t i = 0; i < n; ++i) im.px[i] = static_cast<float>(bytes[i]) / 255.0f;
  return im;
}

Image load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int c = gray ? 1 : 3;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr))
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  return from_bytes(buf.data(), static_cast<int>(png.height), static_cast<int>(png.width), c);
}

void save_png(const Image& im, const std::filesystem::path& path) {
  if (im.c != 1 && im.c != 3)
    throw DataError("PNG output supports 1 or 3 channels, got " + std::to_string(im.c));
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(im.w);
  png.height = static_cast<png_uint_32>(im.h);
  png.format = im.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(im.px.size());
  for (std::size_t i = 0; i < im.px.size(); ++i) buf[i] = quantize(im.px[i]);
  // encode to memory so the file write stays atomic
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buf.data(), 0, nullptr))
    throw DataError("cannot encode PNG " + path.string() + ": " + png.message);
  std::vector<unsigned char> encoded(size);
  if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, buf.data(), 0, nullptr))
    throw DataError("cannot encode PNG " + path.string() + ": " + png.message);
  write_file_atomic(path, encoded.data(), size);
}

Image load_pnm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  };
  const std::string magic = next_token();
  int c = 0;
  if (magic == "P6") c = 3;
  else if (magic == "P5") c = 1;
  else throw DataError("unsupported PNM magic '" + magic + "' in " + path.string());
  const int w = static_cast<int>(parse_int(next_token(), "pnm width"));
  const int h = static_cast<int>(parse_int(next_token(), "pnm height"));
  const int maxval = static_cast<int>(parse_int(next_token(), "pnm maxval"));
  if (maxval != 255) throw DataError("only maxval 255 PNM supported: " + path.string());
  ++pos;  // single whitespace after header
  const std::size_t need = static_cast<std::size_t>(w) * h * c;
  if (data.size() - pos < need) throw DataError("truncated PNM: " + path.string());
  return from_bytes(reinterpret_cast<const unsigned char*>(data.data() + pos), h, w, c);
}

void save_pnm(const Image& im, const std::filesystem::path& path) {
  if (im.c != 1 && im.c != 3)
    throw DataError("PNM output supports 1 or 3 channels, got " + std::to_string(im.c));
  std::string out = im.c == 3 ? "P6" : "P5";
  out += "\n" + std::to_string(im.w) + " " + std::to_string(im.h) + "\n255\n";
  out.reserve(out.size() + im.px.size());
  for (float v : im.px) out.push_back(static_cast<char>(quantize(v)));
  write_file_atomic(path, out);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm" || ext == ".pgm") return load_pnm(path);
  throw DataError("unsupported image extension '" + ext + "': " + path.string());
}

void save_image(const Image& im, const std::filesystem::path& path) {
  if (im.empty()) throw DataError("refusing to write empty image: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") {
    save_png(im, path);
  } else if (ext == ".ppm" || ext == ".pgm") {
    save_pnm(im, path);
  } else {
    throw DataError("unsupported image extension '" + ext + "': " + path.string());
  }
}

double mean_intensity(const Image& im) {
  if (im.empty()) throw DataError("mean_intensity on empty image");
  double sum = 0.0;
  for (float v : im.px) sum += v;
  return sum / static_cast<double>(im.px.size());
}

Image resize_bilinear(const Image& im, int out_h, int out_w) {
  if (im.empty()) throw DataError("resize on empty image");
  if (out_h == im.h && out_w == im.w) return im;
  Image out = Image::zeros(out_h, out_w, im.c);
  const double sy = static_cast<double>(im.h) / out_h;
  const double sx = static_cast<double>(im.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(im.h - 1, static_cast<int>(fy));
    const int y1 = std::min(im.h - 1, y0 + 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(im.w - 1, static_cast<int>(fx));
      const int x1 = std::min(im.w - 1, x0 + 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < im.c; ++ch) {
        const double top = (1.0 - wx) * im.at(y0, x0, ch) + wx * im.at(y0, x1, ch);
        const double bot = (1.0 - wx) * im.at(y1, x0, ch) + wx * im.at(y1, x1, ch);
        out.at(y, x, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

}  // namespace seasonmatch
