#include "seasonmatch/plot.hpp"

#include <algorithm>
#include <cmath>

#include "seasonmatch/error.hpp"
#include "seasonmatch/image.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

// 5x7 bitmap glyphs, one byte per column, LSB at the top row.
struct Glyph {
  char ch;
  unsigned char col[5];
};

const Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00}}, {'%', {0x23, 0x13, 0x08, 0x64, 0x62}},
    {'(', {0x00, 0x1c, 0x22, 0x41, 0x00}}, {')', {0x00, 0x41, 0x22, 0x1c, 0x00}},
    {',', {0x00, 0x50, 0x30, 0x00, 0x00}}, {'-', {0x08, 0x08, 0x08, 0x08, 0x08}},
    {'.', {0x00, 0x60, 0x60, 0x00, 0x00}}, {'/', {0x20, 0x10, 0x08, 0x04, 0x02}},
    {'0', {0x3e, 0x51, 0x49, 0x45, 0x3e}}, {'1', {0x00, 0x42, 0x7f, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4b, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7f, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3c, 0x4a, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1e}},
    {':', {0x00, 0x36, 0x36, 0x00, 0x00}}, {'A', {0x7e, 0x11, 0x11, 0x11, 0x7e}},
    {'B', {0x7f, 0x49, 0x49, 0x49, 0x36}}, {'C', {0x3e, 0x41, 0x41, 0x41, 0x22}},
    {'D', {0x7f, 0x41, 0x41, 0x22, 0x1c}}, {'E', {0x7f, 0x49, 0x49, 0x49, 0x41}},
    {'F', {0x7f, 0x09, 0x09, 0x09, 0x01}}, {'G', {0x3e, 0x41, 0x49, 0x49, 0x7a}},
    {'H', {0x7f, 0x08, 0x08, 0x08, 0x7f}}, {'I', {0x00, 0x41, 0x7f, 0x41, 0x00}},
    {'J', {0x20, 0x40, 0x41, 0x3f, 0x01}}, {'K', {0x7f, 0x08, 0x14, 0x22, 0x41}},
    {'L', {0x7f, 0x40, 0x40, 0x40, 0x40}}, {'M', {0x7f, 0x02, 0x0c, 0x02, 0x7f}},
    {'N', {0x7f, 0x04, 0x08, 0x10, 0x7f}}, {'O', {0x3e, 0x41, 0x41, 0x41, 0x3e}},
    {'P', {0x7f, 0x09, 0x09, 0x09, 0x06}}, {'Q', {0x3e, 0x41, 0x51, 0x21, 0x5e}},
    {'R', {0x7f, 0x09, 0x19, 0x29, 0x46}}, {'S', {0x46, 0x49, 0x49, 0x49, 0x31}},
    {'T', {0x01, 0x01, 0x7f, 0x01, 0x01}}, {'U', {0x3f, 0x40, 0x40, 0x40, 0x3f}},
    {'V', {0x1f, 0x20, 0x40, 0x20, 0x1f}}, {'W', {0x3f, 0x40, 0x38, 0x40, 0x3f}},
    {'X', {0x63, 0x14, 0x08, 0x14, 0x63}}, {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}},
    {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}}, {'_', {0x40, 0x40, 0x40, 0x40, 0x40}},
    {'a', {0x20, 0x54, 0x54, 0x54, 0x78}}, {'b', {0x7f, 0x48, 0x44, 0x44, 0x38}},
    {'c', {0x38, 0x44, 0x44, 0x44, 0x20}}, {'d', {0x38, 0x44, 0x44, 0x48, 0x7f}},
    {'e', {0x38, 0x54, 0x54, 0x54, 0x18}}, {'f', {0x08, 0x7e, 0x09, 0x01, 0x02}},
    {'g', {0x0c, 0x52, 0x52, 0x52, 0x3e}}, {'h', {0x7f, 0x08, 0x04, 0x04, 0x78}},
    {'i', {0x00, 0x44, 0x7d, 0x40, 0x00}}, {'j', {0x20, 0x40, 0x44, 0x3d, 0x00}},
    {'k', {0x7f, 0x10, 0x28, 0x44, 0x00}}, {'l', {0x00, 0x41, 0x7f, 0x40, 0x00}},
    {'m', {0x7c, 0x04, 0x18, 0x04, 0x78}}, {'n', {0x7c, 0x08, 0x04, 0x04, 0x78}},
    {'o', {0x38, 0x44, 0x44, 0x44, 0x38}}, {'p', {0x7c, 0x14, 0x14, 0x14, 0x08}},
    {'q', {0x08, 0x14, 0x14, 0x18, 0x7c}}, {'r', {0x7c, 0x08, 0x04, 0x04, 0x08}},
    {'s', {0x48, 0x54, 0x54, 0x54, 0x20}}, {'t', {0x04, 0x3f, 0x44, 0x40, 0x20}},
    {'u', {0x3c, 0x40, 0x40, 0x20, 0x7c}}, {'v', {0x1c, 0x20, 0x40, 0x20, 0x1c}},
    {'w', {0x3c, 0x40, 0x30, 0x40, 0x3c}}, {'x', {0x44, 0x28, 0x10, 0x28, 0x44}},
    {'y', {0x0c, 0x50, 0x50, 0x50, 0x3c}}, {'z', {0x44, 0x64, 0x54, 0x4c, 0x44}},
};

const Glyph* find_glyph(char ch) {
  for (const Glyph& g : kFont)
    if (g.ch == ch) return &g;
  return nullptr;
}

struct Rgb {
  float r, g, b;
};

constexpr Rgb kBlack{0.05f, 0.05f, 0.08f};
constexpr Rgb kGrid{0.85f, 0.85f, 0.88f};
constexpr Rgb kBar{0.35f, 0.48f, 0.68f};
constexpr Rgb kLine{0.75f, 0.25f, 0.20f};

class Canvas {
 public:
  Canvas(int h, int w) : im_(Image::zeros(h, w, 3)) {
    std::fill(im_.px.begin(), im_.px.end(), 1.0f);
  }

  void set(int y, int x, Rgb c) {
    if (y < 0 || y >= im_.h || x < 0 || x >= im_.w) return;
    im_.at(y, x, 0) = c.r;
    im_.at(y, x, 1) = c.g;
    im_.at(y, x, 2) = c.b;
  }

  void fill_rect(int y0, int x0, int y1, int x1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(y, x, c);
  }

  void line(int y0, int x0, int y1, int x1, Rgb c) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    while (true) {
      set(y, x, c);
      if (x == x1 && y == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }

  void text(int y, int x, const std::string& s, Rgb c, int scale = 1) {
    int cx = x;
    for (char ch : s) {
      const Glyph* g = find_glyph(ch);
      if (g) {
        for (int col = 0; col < 5; ++col)
          for (int row = 0; row < 7; ++row)
            if (g->col[col] & (1 << row))
              fill_rect(y + row * scale, cx + col * scale, y + row * scale + scale - 1,
                        cx + col * scale + scale - 1, c);
      }
      cx += 6 * scale;
    }
  }

  static int text_width(const std::string& s, int scale = 1) {
    return static_cast<int>(s.size()) * 6 * scale;
  }

  const Image& image() const { return im_; }

 private:
  Image im_;
};

}  // namespace

void save_fc_bar_chart(const std::string& reference, const std::vector<EvalEntry>& entries,
                       const std::filesystem::path& path) {
  std::vector<const EvalEntry*> bars;
  for (const EvalEntry& e : entries)
    if (e.reference == reference) bars.push_back(&e);
  if (bars.empty()) throw DataError("no entries with reference '" + reference + "'");

  const int w = 520, h = 340;
  const int left = 56, right = 24, top = 44, bottom = 56;
  Canvas cv(h, w);
  cv.text(12, left, "fraction of correct matches, reference " + reference, kBlack);
  const int py0 = h - bottom, py1 = top;  // y pixels for value 0 and 1
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const int y = py0 + static_cast<int>(std::lround((py1 - py0) * v));
    cv.line(y, left, y, w - right, i == 0 ? kBlack : kGrid);
    cv.text(y - 3, 16, fmt_f(v, 2), kBlack);
  }
  cv.line(py1, left, py0, left, kBlack);

  const int span = w - left - right;
  const int slot = span / static_cast<int>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double fc = std::clamp(bars[i]->fc, 0.0, 1.0);
    const int x0 = left + static_cast<int>(i) * slot + slot / 6;
    const int x1 = left + static_cast<int>(i) * slot + slot - slot / 6;
    const int ytop = py0 + static_cast<int>(std::lround((py1 - py0) * fc));
    cv.fill_rect(ytop, x0, py0 - 1, x1, kBar);
    const std::string label = bars[i]->input;
    const int xc = (x0 + x1) / 2;
    cv.text(py0 + 8, xc - Canvas::text_width(label) / 2, label, kBlack);
    const std::string val = fmt_f(fc, 3);
    cv.text(ytop - 12, xc - Canvas::text_width(val) / 2, val, kBlack);
  }
  save_image(cv.image(), path);
}

void save_pr_plot(const std::vector<PrPoint>& curve, const std::filesystem::path& path) {
  if (curve.empty()) throw DataError("cannot plot empty PR curve");
  const int w = 420, h = 420;
  const int left = 56, right = 20, top = 40, bottom = 48;
  Canvas cv(h, w);
  cv.text(12, left, "precision-recall", kBlack);
  const int px0 = left, px1 = w - right;
  const int py0 = h - bottom, py1 = top;
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const int y = py0 + static_cast<int>(std::lround((py1 - py0) * v));
    const int x = px0 + static_cast<int>(std::lround((px1 - px0) * v));
    cv.line(y, px0, y, px1, i == 0 ? kBlack : kGrid);
    cv.line(py0, x, py1, x, i == 0 ? kBlack : kGrid);
    cv.text(y - 3, 16, fmt_f(v, 2), kBlack);
    cv.text(py0 + 8, x - 10, fmt_f(v, 2), kBlack);
  }
  cv.text(py0 + 24, (px0 + px1) / 2 - 18, "recall", kBlack);
  cv.text(py1 - 22, px0, "precision", kBlack);

  auto px = [&](double recall) {
    return px0 + static_cast<int>(std::lround((px1 - px0) * std::clamp(recall, 0.0, 1.0)));
  };
  auto py = [&](double precision) {
    return py0 + static_cast<int>(std::lround((py1 - py0) * std::clamp(precision, 0.0, 1.0)));
  };
  for (std::size_t i = 1; i < curve.size(); ++i)
    cv.line(py(curve[i - 1].precision), px(curve[i - 1].recall), py(curve[i].precision),
            px(curve[i].recall), kLine);
  for (const PrPoint& p : curve) cv.fill_rect(py(p.precision) - 1, px(p.recall) - 1,
                                              py(p.precision) + 1, px(p.recall) + 1, kLine);
  save_image(cv.image(), path);
}

}  // namespace seasonmatch
