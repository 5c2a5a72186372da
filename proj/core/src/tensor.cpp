#include "seasonmatch/tensor.hpp"

#include "seasonmatch/error.hpp"
#include "seasonmatch/image.hpp"

namespace seasonmatch {

Tensor tensor_from_image(const Image& im) {
  if (im.empty()) throw DataError("cannot build tensor from empty image");
  Tensor t = Tensor::zeros(im.c, im.h, im.w);
  for (int ch = 0; ch < im.c; ++ch)
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) t.at(ch, y, x) = im.at(y, x, ch);
  return t;
}

std::vector<float> flatten(const Tensor& t) { return t.v; }

Tensor unflatten(const std::vector<float>& flat, int c, int h, int w) {
  if (flat.size() != static_cast<std::size_t>(c) * h * w)
    throw DataError("unflatten: size mismatch");
  Tensor t;
  t.c = c;
  t.h = h;
  t.w = w;
  t.v = flat;
  return t;
}

}  // namespace seasonmatch
