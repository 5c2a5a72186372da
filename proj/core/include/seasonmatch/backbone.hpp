#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seasonmatch/image.hpp"
#include "seasonmatch/tensor.hpp"

namespace seasonmatch {

enum class LayerKind { conv, maxpool };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::string name;
  int out_channels = 0;  // conv only
  int kernel = 3;
  int pad = 1;     // conv only; pooling is unpadded
  int stride = 1;
  bool relu = true;  // conv activation; taps read post-activation values
};

struct TensorShape {
  int c = 0;
  int h = 0;
  int w = 0;
  long count() const { return static_cast<long>(c) * h * w; }
};

// Ordered stack of named layers over a fixed input size. "input" is a
// valid tap naming the raw image tensor.
struct Architecture {
  std::string id;
  int input_h = 0;
  int input_w = 0;
  int input_c = 0;
  std::vector<LayerSpec> layers;

  // Reduced VGG-style stack: one conv3x3+ReLU and one maxpool2 per
  // block (conv1..convN / pool1..poolN).
  static Architecture desk(int input_h, int input_w, int input_c,
                           const std::vector<int>& widths = {16, 32, 48, 64});
  // The 13-conv/5-pool VGG-16 convolutional stack (conv1_1 .. pool5).
  static Architecture vgg16(int input_h = 224, int input_w = 224, int input_c = 3);

  bool has_tap(const std::string& tap) const;
  int layer_index(const std::string& name) const;  // -1 if absent
  TensorShape input_shape() const { return {input_c, input_h, input_w}; }
  // Output shape after the named layer ("input" gives the input shape).
  TensorShape shape_at(const std::string& tap) const;
};

// Flattened activation count at a tap; pure shape computation, no
// parameters involved.
long descriptor_dim(const Architecture& arch, const std::string& tap);

struct Descriptor {
  std::vector<float> values;
  std::string source;  // layer tag or "head128"

  int dim() const { return static_cast<int>(values.size()); }
};

struct ConvParams {
  std::vector<float> w;  // out_c x in_c x k x k
  std::vector<float> b;  // out_c
};

// Backbone plus a 128-output linear head (no activation) on the tap
// layer's flattened output. Forward passes are deterministic given
// parameters and input.
struct EmbeddingModel {
  static constexpr int kHeadDim = 128;

  Architecture arch;
  std::string tap;
  std::vector<ConvParams> params;  // aligned with arch.layers, empty for pools
  std::vector<float> head_w;       // kHeadDim x tap_dim, row-major
  std::vector<float> head_b;       // kHeadDim
  bool mean_subtract = false;      // per-channel input centering (config flag)

  // Seeded init: conv and head weights uniform in +-1/sqrt(fan_in),
  // biases zero.
  static EmbeddingModel create(Architecture arch, const std::string& tap, std::uint64_t seed);

  int tap_dim() const { return static_cast<int>(descriptor_dim(arch, tap)); }

  // Runs the stack through `upto` (inclusive) and returns that layer's
  // post-activation tensor.
  Tensor forward_to(const Tensor& input, const std::string& upto) const;

  // Adapts an image to the model input: channel mismatch is an error,
  // spatial mismatch is resized bilinearly.
  Tensor input_tensor(const Image& im) const;

  void head_apply(const float* tap_values, float* out) const;  // one vector
};

// Post-activation values of the named layer, flattened channel-major
// then row-major spatial.
Descriptor extract_features(const EmbeddingModel& m, const Image& image, const std::string& tap);

// 128-d descriptor: head over the model's own tap.
Descriptor embed(const EmbeddingModel& m, const Image& image);

// Batched variants; per-image results are bit-identical to the
// one-by-one calls regardless of threading.
std::vector<Descriptor> extract_features_batch(const EmbeddingModel& m,
                                               const std::vector<const Image*>& images,
                                               const std::string& tap);
std::vector<Descriptor> embed_batch(const EmbeddingModel& m,
                                    const std::vector<const Image*>& images);

// ---- training support ----------------------------------------------------

// Per-layer forward record needed for backprop.
struct ForwardTrace {
  Tensor input;
  std::vector<Tensor> outputs;               // post-activation, through tap
  std::vector<std::vector<int>> pool_argmax;  // flat input offsets per pool output
};

Tensor forward_trace(const EmbeddingModel& m, const Tensor& input, ForwardTrace& trace);

struct ModelGrads {
  std::vector<ConvParams> conv;  // same shapes as model params
  std::vector<float> head_w;
  std::vector<float> head_b;

  static ModelGrads zeros_like(const EmbeddingModel& m);
  void reset();
};

// Backprop of a gradient at the tap output into conv parameter grads
// (accumulated into `grads.conv`).
void backward_from_tap(const EmbeddingModel& m, const ForwardTrace& trace, const Tensor& d_tap,
                       ModelGrads& grads);

// x: n rows of tap_dim -> y: n rows of kHeadDim.
void head_forward_rows(const EmbeddingModel& m, const float* x, int n, float* y);
// Accumulates head grads; d_x (n x tap_dim) is written if non-null.
void head_backward_rows(const EmbeddingModel& m, const float* x, const float* d_y, int n,
                        ModelGrads& grads, float* d_x);

// grad step: p -= lr * g for the head, and for conv params too when
// include_backbone is set.
void sgd_step(EmbeddingModel& m, const ModelGrads& grads, double lr, bool include_backbone);

// CRC-32 over all backbone parameter bytes; cheap frozen-backbone check.
std::uint32_t backbone_checksum(const EmbeddingModel& m);

}  // namespace seasonmatch
