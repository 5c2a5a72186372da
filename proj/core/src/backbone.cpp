#include "seasonmatch/backbone.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "seasonmatch/error.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

TensorShape conv_out_shape(const TensorShape& in, const LayerSpec& l) {
  const int h = (in.h + 2 * l.pad - l.kernel) / l.stride + 1;
  const int w = (in.w + 2 * l.pad - l.kernel) / l.stride + 1;
  if (h <= 0 || w <= 0)
    throw UsageError("layer '" + l.name + "' collapses spatial size to zero");
  return {l.out_channels, h, w};
}

TensorShape pool_out_shape(const TensorShape& in, const LayerSpec& l) {
  if (in.h < l.kernel || in.w < l.kernel)
    throw UsageError("layer '" + l.name + "' kernel exceeds input size");
  const int h = (in.h - l.kernel) / l.stride + 1;
  const int w = (in.w - l.kernel) / l.stride + 1;
  return {in.c, h, w};
}

TensorShape out_shape(const TensorShape& in, const LayerSpec& l) {
  return l.kind == LayerKind::conv ? conv_out_shape(in, l) : pool_out_shape(in, l);
}

// input (c_in,h,w) -> cols (c_in*k*k rows x oh*ow cols), zero padded.
void im2col(const Tensor& in, const LayerSpec& l, int oh, int ow, std::vector<float>& cols) {
  const int k = l.kernel;
  const std::size_t rows = static_cast<std::size_t>(in.c) * k * k;
  cols.assign(rows * oh * ow, 0.0f);
  const int n = oh * ow;
  for (int ci = 0; ci < in.c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = cols.data() + (static_cast<std::size_t>(ci) * k * k + ky * k + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * l.stride + ky - l.pad;
          if (iy < 0 || iy >= in.h) continue;
          const float* src = &in.v[(static_cast<std::size_t>(ci) * in.h + iy) * in.w];
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * l.stride + kx - l.pad;
            if (ix >= 0 && ix < in.w) dst[oy * ow + ox] = src[ix];
          }
        }
      }
    }
  }
}

// scatter-add of cols gradient back to the input tensor layout
void col2im_add(const std::vector<float>& cols, const LayerSpec& l, int oh, int ow, Tensor& din) {
  const int k = l.kernel;
  const int n = oh * ow;
  for (int ci = 0; ci < din.c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = cols.data() + (static_cast<std::size_t>(ci) * k * k + ky * k + kx) * n;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * l.stride + ky - l.pad;
          if (iy < 0 || iy >= din.h) continue;
          float* dst = &din.v[(static_cast<std::size_t>(ci) * din.h + iy) * din.w];
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * l.stride + kx - l.pad;
            if (ix >= 0 && ix < din.w) dst[ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

Tensor conv_forward(const Tensor& in, const LayerSpec& l, const ConvParams& p,
                    std::vector<float>& cols_scratch) {
  const TensorShape os = conv_out_shape({in.c, in.h, in.w}, l);
  im2col(in, l, os.h, os.w, cols_scratch);
  Tensor out = Tensor::zeros(os.c, os.h, os.w);
  const int kk = in.c * l.kernel * l.kernel;
  const int n = os.h * os.w;
  CMapRM wm(p.w.data(), os.c, kk);
  CMapRM cm(cols_scratch.data(), kk, n);
  MapRM om(out.v.data(), os.c, n);
  om.noalias() = wm * cm;
  for (int co = 0; co < os.c; ++co) {
    float* row = out.v.data() + static_cast<std::size_t>(co) * n;
    const float bias = p.b[static_cast<std::size_t>(co)];
    if (l.relu) {
      for (int i = 0; i < n; ++i) row[i] = std::max(0.0f, row[i] + bias);
    } else {
      for (int i = 0; i < n; ++i) row[i] += bias;
    }
  }
  return out;
}

Tensor pool_forward(const Tensor& in, const LayerSpec& l, std::vector<int>* argmax) {
  const TensorShape os = pool_out_shape({in.c, in.h, in.w}, l);
  Tensor out = Tensor::zeros(os.c, os.h, os.w);
  if (argmax) argmax->assign(out.size(), 0);
  for (int c = 0; c < os.c; ++c) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        float best = -std::numeric_limits<float>::infinity();
        int best_off = 0;
        for (int ky = 0; ky < l.kernel; ++ky) {
          const int iy = oy * l.stride + ky;
          for (int kx = 0; kx < l.kernel; ++kx) {
            const int ix = ox * l.stride + kx;
            const int off = (c * in.h + iy) * in.w + ix;
            const float v = in.v[static_cast<std::size_t>(off)];
            if (v > best) {
              best = v;
              best_off = off;
            }
          }
        }
        out.at(c, oy, ox) = best;
        if (argmax) (*argmax)[(static_cast<std::size_t>(c) * os.h + oy) * os.w + ox] = best_off;
      }
    }
  }
  return out;
}

}  // namespace

Architecture Architecture::desk(int input_h, int input_w, int input_c,
                                const std::vector<int>& widths) {
  if (widths.empty()) throw UsageError("desk architecture needs at least one block");
  Architecture a;
  a.id = "desk" + std::to_string(widths.size());
  a.input_h = input_h;
  a.input_w = input_w;
  a.input_c = input_c;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    a.layers.push_back({LayerKind::conv, "conv" + n, widths[i], 3, 1, 1, true});
    a.layers.push_back({LayerKind::maxpool, "pool" + n, 0, 2, 0, 2, false});
  }
  return a;
}

Architecture Architecture::vgg16(int input_h, int input_w, int input_c) {
  Architecture a;
  a.id = "vgg16";
  a.input_h = input_h;
  a.input_w = input_w;
  a.input_c = input_c;
  const int block_widths[5] = {64, 128, 256, 512, 512};
  const int convs_per_block[5] = {2, 2, 3, 3, 3};
  for (int b = 0; b < 5; ++b) {
    for (int i = 0; i < convs_per_block[b]; ++i) {
      a.layers.push_back({LayerKind::conv,
                          "conv" + std::to_string(b + 1) + "_" + std::to_string(i + 1),
                          block_widths[b], 3, 1, 1, true});
    }
    a.layers.push_back({LayerKind::maxpool, "pool" + std::to_string(b + 1), 0, 2, 0, 2, false});
  }
  return a;
}

bool Architecture::has_tap(const std::string& tap) const {
  return tap == "input" || layer_index(tap) >= 0;
}

int Architecture::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return static_cast<int>(i);
  return -1;
}

TensorShape Architecture::shape_at(const std::string& tap) const {
  TensorShape s = input_shape();
  if (tap == "input") return s;
  const int idx = layer_index(tap);
  if (idx < 0) throw UsageError("unknown tap layer '" + tap + "' in architecture " + id);
  for (int i = 0; i <= idx; ++i) s = out_shape(s, layers[static_cast<std::size_t>(i)]);
  return s;
}

long descriptor_dim(const Architecture& arch, const std::string& tap) {
  return arch.shape_at(tap).count();
}

EmbeddingModel EmbeddingModel::create(Architecture arch, const std::string& tap,
                                      std::uint64_t seed) {
  if (!arch.has_tap(tap))
    throw UsageError("unknown tap layer '" + tap + "' in architecture " + arch.id);
  EmbeddingModel m;
  m.arch = std::move(arch);
  m.tap = tap;
  m.params.resize(m.arch.layers.size());
  TensorShape s = m.arch.input_shape();
  for (std::size_t i = 0; i < m.arch.layers.size(); ++i) {
    const LayerSpec& l = m.arch.layers[i];
    if (l.kind == LayerKind::conv) {
      // He-style gain so post-ReLU activation scale survives the stack
      const int fan_in = s.c * l.kernel * l.kernel;
      const double bound = 2.0 / std::sqrt(static_cast<double>(fan_in));
      Rng rng(derive_seed(seed, "conv-init", i));
      ConvParams& p = m.params[i];
      p.w.resize(static_cast<std::size_t>(l.out_channels) * fan_in);
      for (float& v : p.w) v = static_cast<float>(rng.uniform(-bound, bound));
      p.b.assign(static_cast<std::size_t>(l.out_channels), 0.0f);
    }
    s = out_shape(s, l);
  }
  const int d = m.tap_dim();
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(derive_seed(seed, "head-init"));
  m.head_w.resize(static_cast<std::size_t>(kHeadDim) * d);
  for (float& v : m.head_w) v = static_cast<float>(rng.uniform(-bound, bound));
  m.head_b.assign(kHeadDim, 0.0f);
  return m;
}

Tensor EmbeddingModel::forward_to(const Tensor& input, const std::string& upto) const {
  if (input.c != arch.input_c || input.h != arch.input_h || input.w != arch.input_w)
    throw DataError("forward: input tensor is " + std::to_string(input.c) + "x" +
                    std::to_string(input.h) + "x" + std::to_string(input.w) + ", model expects " +
                    std::to_string(arch.input_c) + "x" + std::to_string(arch.input_h) + "x" +
                    std::to_string(arch.input_w));
  if (upto == "input") return input;
  const int idx = arch.layer_index(upto);
  if (idx < 0) throw UsageError("unknown tap layer '" + upto + "' in architecture " + arch.id);
  Tensor cur = input;
  std::vector<float> scratch;
  for (int i = 0; i <= idx; ++i) {
    const LayerSpec& l = arch.layers[static_cast<std::size_t>(i)];
    cur = l.kind == LayerKind::conv
              ? conv_forward(cur, l, params[static_cast<std::size_t>(i)], scratch)
              : pool_forward(cur, l, nullptr);
  }
  return cur;
}

Tensor EmbeddingModel::input_tensor(const Image& im) const {
  if (im.c != arch.input_c)
    throw DataError("image has " + std::to_string(im.c) + " channels, model expects " +
                    std::to_string(arch.input_c));
  Tensor t = im.h == arch.input_h && im.w == arch.input_w
                 ? tensor_from_image(im)
                 : tensor_from_image(resize_bilinear(im, arch.input_h, arch.input_w));
  if (mean_subtract) {
    const std::size_t plane = static_cast<std::size_t>(t.h) * t.w;
    for (int c = 0; c < t.c; ++c) {
      float* p = t.v.data() + static_cast<std::size_t>(c) * plane;
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      const float mean = static_cast<float>(sum / static_cast<double>(plane));
      for (std::size_t i = 0; i < plane; ++i) p[i] -= mean;
    }
  }
  return t;
}

void EmbeddingModel::head_apply(const float* tap_values, float* out) const {
  const int d = tap_dim();
  for (int r = 0; r < kHeadDim; ++r) {
    const float* wrow = head_w.data() + static_cast<std::size_t>(r) * d;
    float acc = head_b[static_cast<std::size_t>(r)];
    for (int i = 0; i < d; ++i) acc += wrow[i] * tap_values[i];
    out[r] = acc;
  }
}

Descriptor extract_features(const EmbeddingModel& m, const Image& image, const std::string& tap) {
  const Tensor t = m.forward_to(m.input_tensor(image), tap);
  Descriptor d;
  d.values = flatten(t);
  d.source = tap;
  return d;
}

Descriptor embed(const EmbeddingModel& m, const Image& image) {
  if (m.head_w.empty()) throw UsageError("embed: model head is not initialized");
  const Tensor t = m.forward_to(m.input_tensor(image), m.tap);
  Descriptor d;
  d.values.resize(EmbeddingModel::kHeadDim);
  d.source = "head128";
  m.head_apply(t.v.data(), d.values.data());
  return d;
}

std::vector<Descriptor> extract_features_batch(const EmbeddingModel& m,
                                               const std::vector<const Image*>& images,
                                               const std::string& tap) {
  std::vector<Descriptor> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = extract_features(m, *images[i], tap); });
  return out;
}

std::vector<Descriptor> embed_batch(const EmbeddingModel& m,
                                    const std::vector<const Image*>& images) {
  std::vector<Descriptor> out(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out[i] = embed(m, *images[i]); });
  return out;
}

Tensor forward_trace(const EmbeddingModel& m, const Tensor& input, ForwardTrace& trace) {
  trace.input = input;
  trace.outputs.clear();
  trace.pool_argmax.clear();
  if (m.tap == "input") return input;
  const int idx = m.arch.layer_index(m.tap);
  if (idx < 0) throw UsageError("unknown tap layer '" + m.tap + "'");
  trace.outputs.reserve(static_cast<std::size_t>(idx) + 1);
  trace.pool_argmax.resize(static_cast<std::size_t>(idx) + 1);
  const Tensor* cur = &input;
  std::vector<float> scratch;
  for (int i = 0; i <= idx; ++i) {
    const LayerSpec& l = m.arch.layers[static_cast<std::size_t>(i)];
    Tensor next =
        l.kind == LayerKind::conv
            ? conv_forward(*cur, l, m.params[static_cast<std::size_t>(i)], scratch)
            : pool_forward(*cur, l, &trace.pool_argmax[static_cast<std::size_t>(i)]);
    trace.outputs.push_back(std::move(next));
    cur = &trace.outputs.back();
  }
  return trace.outputs.back();
}

ModelGrads ModelGrads::zeros_like(const EmbeddingModel& m) {
  ModelGrads g;
  g.conv.resize(m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    g.conv[i].w.assign(m.params[i].w.size(), 0.0f);
    g.conv[i].b.assign(m.params[i].b.size(), 0.0f);
  }
  g.head_w.assign(m.head_w.size(), 0.0f);
  g.head_b.assign(m.head_b.size(), 0.0f);
  return g;
}

void ModelGrads::reset() {
  for (ConvParams& p : conv) {
    std::fill(p.w.begin(), p.w.end(), 0.0f);
    std::fill(p.b.begin(), p.b.end(), 0.0f);
  }
  std::fill(head_w.begin(), head_w.end(), 0.0f);
  std::fill(head_b.begin(), head_b.end(), 0.0f);
}

void backward_from_tap(const EmbeddingModel& m, const ForwardTrace& trace, const Tensor& d_tap,
                       ModelGrads& grads) {
  if (m.tap == "input") return;  // nothing upstream of the input
  const int idx = m.arch.layer_index(m.tap);
  Tensor d_out = d_tap;
  std::vector<float> cols, d_cols;
  for (int i = idx; i >= 0; --i) {
    const LayerSpec& l = m.arch.layers[static_cast<std::size_t>(i)];
    const Tensor& in = i == 0 ? trace.input : trace.outputs[static_cast<std::size_t>(i) - 1];
    const Tensor& out = trace.outputs[static_cast<std::size_t>(i)];
    if (l.kind == LayerKind::maxpool) {
      Tensor d_in = Tensor::zeros(in.c, in.h, in.w);
      const std::vector<int>& amax = trace.pool_argmax[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < d_out.v.size(); ++j)
        d_in.v[static_cast<std::size_t>(amax[j])] += d_out.v[j];
      d_out = std::move(d_in);
      continue;
    }
    // conv: mask the activation, then grads via the im2col matrices
    if (l.relu) {
      for (std::size_t j = 0; j < d_out.v.size(); ++j)
        if (out.v[j] <= 0.0f) d_out.v[j] = 0.0f;
    }
    const int kk = in.c * l.kernel * l.kernel;
    const int n = out.h * out.w;
    im2col(in, l, out.h, out.w, cols);
    ConvParams& g = grads.conv[static_cast<std::size_t>(i)];
    CMapRM dym(d_out.v.data(), out.c, n);
    CMapRM cm(cols.data(), kk, n);
    MapRM gw(g.w.data(), out.c, kk);
    gw.noalias() += dym * cm.transpose();
    for (int co = 0; co < out.c; ++co) {
      const float* row = d_out.v.data() + static_cast<std::size_t>(co) * n;
      float acc = 0.0f;
      for (int j = 0; j < n; ++j) acc += row[j];
      g.b[static_cast<std::size_t>(co)] += acc;
    }
    if (i > 0) {
      d_cols.assign(static_cast<std::size_t>(kk) * n, 0.0f);
      CMapRM wm(m.params[static_cast<std::size_t>(i)].w.data(), out.c, kk);
      MapRM dcm(d_cols.data(), kk, n);
      dcm.noalias() = wm.transpose() * dym;
      Tensor d_in = Tensor::zeros(in.c, in.h, in.w);
      col2im_add(d_cols, l, out.h, out.w, d_in);
      d_out = std::move(d_in);
    }
  }
}

void head_forward_rows(const EmbeddingModel& m, const float* x, int n, float* y) {
  const int d = m.tap_dim();
  CMapRM xm(x, n, d);
  CMapRM wm(m.head_w.data(), EmbeddingModel::kHeadDim, d);
  MapRM ym(y, n, EmbeddingModel::kHeadDim);
  ym.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < EmbeddingModel::kHeadDim; ++r)
      y[static_cast<std::size_t>(i) * EmbeddingModel::kHeadDim + r] +=
          m.head_b[static_cast<std::size_t>(r)];
}

void head_backward_rows(const EmbeddingModel& m, const float* x, const float* d_y, int n,
                        ModelGrads& grads, float* d_x) {
  const int d = m.tap_dim();
  CMapRM xm(x, n, d);
  CMapRM dym(d_y, n, EmbeddingModel::kHeadDim);
  MapRM gw(grads.head_w.data(), EmbeddingModel::kHeadDim, d);
  gw.noalias() += dym.transpose() * xm;
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < EmbeddingModel::kHeadDim; ++r)
      grads.head_b[static_cast<std::size_t>(r)] +=
          d_y[static_cast<std::size_t>(i) * EmbeddingModel::kHeadDim + r];
  if (d_x) {
    MapRM dxm(d_x, n, d);
    CMapRM wm(m.head_w.data(), EmbeddingModel::kHeadDim, d);
    dxm.noalias() = dym * wm;
  }
}

void sgd_step(EmbeddingModel& m, const ModelGrads& grads, double lr, bool include_backbone) {
  const float f = static_cast<float>(lr);
  for (std::size_t i = 0; i < m.head_w.size(); ++i) m.head_w[i] -= f * grads.head_w[i];
  for (std::size_t i = 0; i < m.head_b.size(); ++i) m.head_b[i] -= f * grads.head_b[i];
  if (!include_backbone) return;
  for (std::size_t l = 0; l < m.params.size(); ++l) {
    ConvParams& p = m.params[l];
    const ConvParams& g = grads.conv[l];
    for (std::size_t i = 0; i < p.w.size(); ++i) p.w[i] -= f * g.w[i];
    for (std::size_t i = 0; i < p.b.size(); ++i) p.b[i] -= f * g.b[i];
  }
}

std::uint32_t backbone_checksum(const EmbeddingModel& m) {
  std::uint32_t crc = 0;
  for (const ConvParams& p : m.params) {
    if (!p.w.empty()) crc = crc32_bytes(p.w.data(), p.w.size() * sizeof(float), crc);
    if (!p.b.empty()) crc = crc32_bytes(p.b.data(), p.b.size() * sizeof(float), crc);
  }
  return crc;
}

}  // namespace seasonmatch
