#include "seasonmatch/synth.hpp"

#include <algorithm>
#include <cmath>

#include "seasonmatch/error.hpp"
#include "seasonmatch/rng.hpp"

namespace seasonmatch {

namespace {

// Hash-lattice value noise: deterministic, O(1) per sample, no tables.
double lattice_value(std::uint64_t seed, int octave, long cx, long cy) {
  std::uint64_t h = seed;
  h = splitmix64(h ^ (0x9e37u + static_cast<std::uint64_t>(octave)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(cx) * 0x100000001b3ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(cy) * 0xc2b2ae3d27d4eb4fULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y, double cell) {
  const double gx = x / cell;
  const double gy = y / cell;
  const long cx = static_cast<long>(std::floor(gx));
  const long cy = static_cast<long>(std::floor(gy));
  const double tx = smoothstep(gx - cx);
  const double ty = smoothstep(gy - cy);
  const double v00 = lattice_value(seed, octave, cx, cy);
  const double v10 = lattice_value(seed, octave, cx + 1, cy);
  const double v01 = lattice_value(seed, octave, cx, cy + 1);
  const double v11 = lattice_value(seed, octave, cx + 1, cy + 1);
  const double top = v00 + (v10 - v00) * tx;
  const double bot = v01 + (v11 - v01) * tx;
  return top + (bot - top) * ty;
}

// Multi-octave field in [0,1] sampled at strip coordinates.
double field(std::uint64_t seed, double x, double y) {
  const double v = 0.50 * value_noise(seed, 0, x, y, 24.0) +
                   0.30 * value_noise(seed, 1, x, y, 9.0) +
                   0.20 * value_noise(seed, 2, x, y, 3.5);
  return v;
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_places < 1) throw UsageError("synth: n_places must be >= 1");
  if (cfg.conditions.empty()) throw UsageError("synth: need at least one condition");
  if (cfg.height < 4 || cfg.width < 4) throw UsageError("synth: image size must be >= 4x4");
  if (cfg.channels != 1 && cfg.channels != 3)
    throw UsageError("synth: channels must be 1 or 3");
  for (const SynthCondition& c : cfg.conditions) {
    if (c.brightness < -1.0 || c.brightness > 1.0)
      throw UsageError("synth: brightness out of [-1,1] for '" + c.name + "'");
    if (c.hue < -3.2 || c.hue > 3.2)
      throw UsageError("synth: hue rotation out of [-pi,pi] for '" + c.name + "'");
    if (c.noise < 0.0 || c.noise > 1.0)
      throw UsageError("synth: noise amplitude out of [0,1] for '" + c.name + "'");
    if (c.whiten < 0.0 || c.whiten > 1.0)
      throw UsageError("synth: whitening fraction out of [0,1] for '" + c.name + "'");
  }
}

int crop_stride(const SynthConfig& cfg) { return std::max(1, cfg.width / 3); }

// Rotation of RGB space about the gray axis by `angle` radians.
void hue_matrix(double angle, double m[3][3]) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = (1.0 - c) / 3.0;
  const double u = s / std::sqrt(3.0);
  m[0][0] = c + t;  m[0][1] = t - u;  m[0][2] = t + u;
  m[1][0] = t + u;  m[1][1] = c + t;  m[1][2] = t - u;
  m[2][0] = t - u;  m[2][1] = t + u;  m[2][2] = c + t;
}

}  // namespace

Image synth_base_scene(const SynthConfig& cfg, int place) {
  const std::uint64_t lum_seed = derive_seed(cfg.seed, "synth-lum");
  const std::uint64_t chroma_seed = derive_seed(cfg.seed, "synth-chroma");
  const int stride = crop_stride(cfg);
  Image im = Image::zeros(cfg.height, cfg.width, cfg.channels);
  for (int y = 0; y < cfg.height; ++y) {
    // brighter toward the top, like sky over terrain
    const double grad = 0.12 * (1.0 - static_cast<double>(y) / cfg.height);
    for (int x = 0; x < cfg.width; ++x) {
      const double sx = static_cast<double>(place) * stride + x;
      const double sy = y;
      const double lum = field(lum_seed, sx, sy);
      for (int ch = 0; ch < cfg.channels; ++ch) {
        double v = 0.15 + 0.55 * lum + grad;
        if (cfg.channels == 3) {
          // place identity rides mostly on the shared luminance field;
          // per-channel detail is strong chroma texture
          const double detail = field(chroma_seed + static_cast<std::uint64_t>(ch), sx, sy);
          v = 0.12 + 0.32 * lum + 0.38 * detail + grad;
        }
        im.at(y, x, ch) = static_cast<float>(std::fmin(1.0, std::fmax(0.0, v)));
      }
    }
  }
  return im;
}

AlignedCorpus synth_corpus(const SynthConfig& cfg) {
  validate(cfg);
  AlignedCorpus corpus;
  corpus.traverses.resize(static_cast<std::size_t>(cfg.n_conditions()));

  std::vector<Image> base(static_cast<std::size_t>(cfg.n_places));
  for (int i = 0; i < cfg.n_places; ++i) base[static_cast<std::size_t>(i)] = synth_base_scene(cfg, i);

  for (int c = 0; c < cfg.n_conditions(); ++c) {
    const SynthCondition& cond = cfg.conditions[static_cast<std::size_t>(c)];
    Traverse t;
    t.season = cond.name;
    t.source_id = "synth:" + cond.name;
    double m[3][3];
    hue_matrix(cond.hue, m);
    for (int i = 0; i < cfg.n_places; ++i) {
      Frame f;
      f.index = i;
      f.timestamp = i;
      f.lat = 60.0 + 1e-4 * i;  // ~11 m spacing along a meridian
      f.lon = 10.0;
      f.speed_kmh = 50.0;
      Image im = base[static_cast<std::size_t>(i)];
      Rng noise(derive_seed(cfg.seed, "synth-noise",
                            static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(cfg.n_places) +
                                static_cast<std::uint64_t>(i)));
      for (int y = 0; y < im.h; ++y) {
        for (int x = 0; x < im.w; ++x) {
          float px[3] = {0, 0, 0};
          for (int ch = 0; ch < im.c; ++ch) px[ch] = im.at(y, x, ch);
          if (im.c == 3 && cond.hue != 0.0) {
            const double r = m[0][0] * px[0] + m[0][1] * px[1] + m[0][2] * px[2];
            const double g = m[1][0] * px[0] + m[1][1] * px[1] + m[1][2] * px[2];
            const double b = m[2][0] * px[0] + m[2][1] * px[1] + m[2][2] * px[2];
            px[0] = static_cast<float>(r);
            px[1] = static_cast<float>(g);
            px[2] = static_cast<float>(b);
          }
          for (int ch = 0; ch < im.c; ++ch) {
            double v = px[ch];
            v += cond.brightness;
            v = (1.0 - cond.whiten) * v + cond.whiten * 1.0;
            v += cond.noise * (2.0 * noise.uniform() - 1.0);
            im.at(y, x, ch) = static_cast<float>(std::fmin(1.0, std::fmax(0.0, v)));
          }
        }
      }
      f.image = std::move(im);
      t.frames.push_back(std::move(f));
    }
    corpus.traverses[static_cast<std::size_t>(c)] = std::move(t);
  }
  corpus.validate();
  return corpus;
}

}  // namespace seasonmatch
