#pragma once

#include <cstddef>
#include <vector>

namespace seasonmatch {

struct Image;

// Dense CHW float tensor. The memory order (channel-major, then rows,
// then columns) is the bit-exact flattening contract used by the
// descriptor file format: flat[(c*H + y)*W + x] = v(c, y, x).
struct Tensor {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<float> v;

  static Tensor zeros(int c, int h, int w) {
    Tensor t;
    t.c = c;
    t.h = h;
    t.w = w;
    t.v.assign(static_cast<std::size_t>(c) * h * w, 0.0f);
    return t;
  }

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  float& at(int ch, int y, int x) {
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
  float at(int ch, int y, int x) const {
    return v[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
};

Tensor tensor_from_image(const Image& im);

// Copies out the tensor values in the contract order (a plain copy of
// the CHW buffer, kept as a named operation so call sites state intent).
std::vector<float> flatten(const Tensor& t);
Tensor unflatten(const std::vector<float>& flat, int c, int h, int w);

}  // namespace seasonmatch
