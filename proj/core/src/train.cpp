#include "seasonmatch/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "seasonmatch/error.hpp"
#include "seasonmatch/losses.hpp"
#include "seasonmatch/rng.hpp"
#include "seasonmatch/util.hpp"

namespace seasonmatch {

namespace {

constexpr int kEmb = EmbeddingModel::kHeadDim;

double euclidean(const float* a, const float* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// d(loss)/d(embedding a) for distance d = |a-b|: g * (a-b)/d, with the
// zero direction at coincident embeddings.
void add_distance_grad(const float* a, const float* b, double d, double g, double scale,
                       float* out) {
  if (d <= 0.0 || g == 0.0) return;
  const double f = scale * g / d;
  for (int i = 0; i < kEmb; ++i)
    out[i] += static_cast<float>(f * (static_cast<double>(a[i]) - static_cast<double>(b[i])));
}

struct SlotKey {
  int traverse;
  int index;
  bool operator<(const SlotKey& o) const {
    return traverse != o.traverse ? traverse < o.traverse : index < o.index;
  }
};

void check_slot(const AlignedCorpus& corpus, const SlotRef& s) {
  if (s.traverse < 0 || s.traverse >= corpus.n_traverses() || s.index < 0 ||
      s.index >= corpus.length())
    throw UsageError("training sample references slot (" + std::to_string(s.traverse) + "," +
                     std::to_string(s.index) + ") outside the corpus");
}

const Image& slot_image(const AlignedCorpus& corpus, const SlotRef& s) {
  const Image& im =
      corpus.traverse(s.traverse).frames[static_cast<std::size_t>(s.index)].image;
  if (im.empty())
    throw DataError("frame (" + std::to_string(s.traverse) + "," + std::to_string(s.index) +
                    ") has no pixels loaded");
  return im;
}

// One epoch-shuffled order of sample ids.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "epoch-shuffle", static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_u64(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

class Trainer {
 public:
  Trainer(EmbeddingModel& model, const AlignedCorpus& corpus, const TrainConfig& cfg)
      : model_(model), corpus_(corpus), cfg_(cfg), grads_(ModelGrads::zeros_like(model)) {}

  std::vector<EpochStats> run(const TrainingSamples& samples, const EpochCallback& on_epoch) {
    const std::size_t n = std::visit([](const auto& v) { return v.size(); }, samples);
    if (n == 0) throw UsageError("training sample set is empty");
    if (cfg_.epochs < 1) throw UsageError("epochs must be >= 1");
    if (cfg_.batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (cfg_.learning_rate < 0.0) throw UsageError("learning rate must be >= 0");
    if (cfg_.margin <= 0.0 || cfg_.contrastive_margin <= 0.0)
      throw UsageError("margins must be positive");

    std::visit([&](const auto& v) { validate_slots(v); }, samples);
    if (!cfg_.fine_tune) build_tap_cache(samples);

    std::vector<EpochStats> history;
    long seen = 0;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      const std::vector<std::size_t> order = shuffled_order(n, cfg_.seed, epoch);
      double loss_sum = 0.0;
      for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg_.batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg_.batch_size));
        const double batch_loss = std::visit(
            [&](const auto& v) { return run_batch(v, order, start, end); }, samples);
        if (!std::isfinite(batch_loss))
          throw NumericalError("non-finite loss in epoch " + std::to_string(epoch) +
                               ", batch at sample " + std::to_string(start) +
                               "; reduce the learning rate");
        loss_sum += batch_loss * static_cast<double>(end - start);
      }
      seen += static_cast<long>(n);
      EpochStats st;
      st.epoch = epoch;
      st.mean_loss = loss_sum / static_cast<double>(n);
      st.samples_seen = seen;
      history.push_back(st);
      if (on_epoch) on_epoch(model_, st);
    }
    return history;
  }

 private:
  template <typename Sample>
  void validate_slots(const std::vector<Sample>& samples) {
    for (const Sample& s : samples) {
      if constexpr (std::is_same_v<Sample, PairSample>) {
        check_slot(corpus_, s.anchor);
        check_slot(corpus_, s.other);
      } else {
        check_slot(corpus_, s.neutral);
        check_slot(corpus_, s.positive);
        check_slot(corpus_, s.negative);
      }
    }
  }

  void note_slot(const SlotRef& s) {
    const SlotKey k{s.traverse, s.index};
    if (!cache_rows_.count(k)) cache_rows_.emplace(k, cache_rows_.size());
  }

  void build_tap_cache(const TrainingSamples& samples) {
    std::visit(
        [&](const auto& v) {
          for (const auto& s : v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PairSample>) {
              note_slot(s.anchor);
              note_slot(s.other);
            } else {
              note_slot(s.neutral);
              note_slot(s.positive);
              note_slot(s.negative);
            }
          }
        },
        samples);
    const int d = model_.tap_dim();
    tap_cache_.assign(cache_rows_.size() * static_cast<std::size_t>(d), 0.0f);
    std::vector<const SlotKey*> keys(cache_rows_.size());
    for (const auto& [k, row] : cache_rows_) keys[row] = &k;
    parallel_for(keys.size(), [&](std::size_t i) {
      const Image& im = slot_image(corpus_, {keys[i]->traverse, keys[i]->index});
      const Tensor tap = model_.forward_to(model_.input_tensor(im), model_.tap);
      std::copy(tap.v.begin(), tap.v.end(),
                tap_cache_.begin() + static_cast<std::size_t>(i) * d);
    });
  }

  // Tap rows for the given slots: cached when frozen, recomputed (with
  // traces) when fine-tuning.
  void gather_tap_rows(const std::vector<SlotRef>& slots, std::vector<float>& rows,
                       std::vector<ForwardTrace>* traces) {
    const int d = model_.tap_dim();
    rows.assign(slots.size() * static_cast<std::size_t>(d), 0.0f);
    if (traces) traces->assign(slots.size(), ForwardTrace{});
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!cfg_.fine_tune) {
        const std::size_t row = cache_rows_.at(SlotKey{slots[i].traverse, slots[i].index});
        std::copy_n(tap_cache_.begin() + static_cast<std::size_t>(row) * d, d,
                    rows.begin() + static_cast<std::size_t>(i) * d);
      } else {
        const Image& im = slot_image(corpus_, slots[i]);
        const Tensor tap = forward_trace(model_, model_.input_tensor(im), (*traces)[i]);
        std::copy(tap.v.begin(), tap.v.end(), rows.begin() + static_cast<std::size_t>(i) * d);
      }
    }
  }

  // Shared tail: head backward, optional backbone backward, SGD step.
  void apply_batch(const std::vector<float>& tap_rows, const std::vector<float>& d_emb,
                   std::vector<ForwardTrace>* traces) {
    const int n = static_cast<int>(tap_rows.size()) / model_.tap_dim();
    grads_.reset();
    std::vector<float> d_tap;
    if (cfg_.fine_tune) d_tap.assign(tap_rows.size(), 0.0f);
    head_backward_rows(model_, tap_rows.data(), d_emb.data(), n, grads_,
                       cfg_.fine_tune ? d_tap.data() : nullptr);
    if (cfg_.fine_tune) {
      const TensorShape ts = model_.arch.shape_at(model_.tap);
      for (int i = 0; i < n; ++i) {
        Tensor g;
        g.c = ts.c;
        g.h = ts.h;
        g.w = ts.w;
        g.v.assign(d_tap.begin() + static_cast<std::size_t>(i) * model_.tap_dim(),
                   d_tap.begin() + static_cast<std::size_t>(i + 1) * model_.tap_dim());
        backward_from_tap(model_, (*traces)[static_cast<std::size_t>(i)], g, grads_);
      }
    }
    sgd_step(model_, grads_, cfg_.learning_rate, cfg_.fine_tune);
  }

  double run_batch(const std::vector<PairSample>& samples,
                   const std::vector<std::size_t>& order, std::size_t start, std::size_t end) {
    const int b = static_cast<int>(end - start);
    std::vector<SlotRef> slots;
    slots.reserve(2 * static_cast<std::size_t>(b));
    for (std::size_t s = start; s < end; ++s) {
      slots.push_back(samples[order[s]].anchor);
      slots.push_back(samples[order[s]].other);
    }
    std::vector<ForwardTrace> traces;
    std::vector<float> tap_rows;
    gather_tap_rows(slots, tap_rows, cfg_.fine_tune ? &traces : nullptr);
    std::vector<float> emb(slots.size() * static_cast<std::size_t>(kEmb));
    head_forward_rows(model_, tap_rows.data(), static_cast<int>(slots.size()), emb.data());

    std::vector<float> d_emb(emb.size(), 0.0f);
    const double inv_b = 1.0 / b;
    double loss_sum = 0.0;
    for (int i = 0; i < b; ++i) {
      const PairSample& p = samples[order[start + static_cast<std::size_t>(i)]];
      const float* ea = emb.data() + static_cast<std::size_t>(2 * i) * kEmb;
      const float* eo = emb.data() + static_cast<std::size_t>(2 * i + 1) * kEmb;
      const double d = euclidean(ea, eo, kEmb);
      loss_sum += contrastive_loss(d, p.label, cfg_.contrastive_margin);
      const double g = contrastive_loss_grad(d, p.label, cfg_.contrastive_margin);
      float* da = d_emb.data() + static_cast<std::size_t>(2 * i) * kEmb;
      float* do_ = d_emb.data() + static_cast<std::size_t>(2 * i + 1) * kEmb;
      add_distance_grad(ea, eo, d, g, inv_b, da);
      add_distance_grad(eo, ea, d, g, inv_b, do_);
    }
    apply_batch(tap_rows, d_emb, cfg_.fine_tune ? &traces : nullptr);
    return loss_sum * inv_b;
  }

  double run_batch(const std::vector<TripletSample>& samples,
                   const std::vector<std::size_t>& order, std::size_t start, std::size_t end) {
    const int b = static_cast<int>(end - start);
    std::vector<SlotRef> slots;
    slots.reserve(3 * static_cast<std::size_t>(b));
    for (std::size_t s = start; s < end; ++s) {
      slots.push_back(samples[order[s]].neutral);
      slots.push_back(samples[order[s]].positive);
      slots.push_back(samples[order[s]].negative);
    }
    std::vector<ForwardTrace> traces;
    std::vector<float> tap_rows;
    gather_tap_rows(slots, tap_rows, cfg_.fine_tune ? &traces : nullptr);
    std::vector<float> emb(slots.size() * static_cast<std::size_t>(kEmb));
    head_forward_rows(model_, tap_rows.data(), static_cast<int>(slots.size()), emb.data());

    std::vector<float> d_emb(emb.size(), 0.0f);
    const double inv_b = 1.0 / b;
    double loss_sum = 0.0;
    for (int i = 0; i < b; ++i) {
      const float* en = emb.data() + static_cast<std::size_t>(3 * i) * kEmb;
      const float* ep = emb.data() + static_cast<std::size_t>(3 * i + 1) * kEmb;
      const float* eg = emb.data() + static_cast<std::size_t>(3 * i + 2) * kEmb;
      const double d_p = euclidean(en, ep, kEmb);
      const double d_n = euclidean(en, eg, kEmb);
      loss_sum += wohlhart_lepetit_loss(d_p, d_n, cfg_.margin);
      const TripletLossGrad g = wohlhart_lepetit_grad(d_p, d_n, cfg_.margin);
      float* dn = d_emb.data() + static_cast<std::size_t>(3 * i) * kEmb;
      float* dp = d_emb.data() + static_cast<std::size_t>(3 * i + 1) * kEmb;
      float* dg = d_emb.data() + static_cast<std::size_t>(3 * i + 2) * kEmb;
      add_distance_grad(en, ep, d_p, g.d_dp, inv_b, dn);
      add_distance_grad(ep, en, d_p, g.d_dp, inv_b, dp);
      add_distance_grad(en, eg, d_n, g.d_dn, inv_b, dn);
      add_distance_grad(eg, en, d_n, g.d_dn, inv_b, dg);
    }
    apply_batch(tap_rows, d_emb, cfg_.fine_tune ? &traces : nullptr);
    return loss_sum * inv_b;
  }

  EmbeddingModel& model_;
  const AlignedCorpus& corpus_;
  const TrainConfig& cfg_;
  ModelGrads grads_;
  std::map<SlotKey, std::size_t> cache_rows_;
  std::vector<float> tap_cache_;
};

}  // namespace

std::vector<EpochStats> train(EmbeddingModel& model, const AlignedCorpus& corpus,
                              const TrainingSamples& samples, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  Trainer t(model, corpus, cfg);
  return t.run(samples, on_epoch);
}

std::string training_log_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,mean_loss,samples_seen\n";
  for (const EpochStats& st : history) {
    out += std::to_string(st.epoch);
    out += ',';
    out += fmt_g17(st.mean_loss);
    out += ',';
    out += std::to_string(st.samples_seen);
    out += '\n';
  }
  return out;
}

}  // namespace seasonmatch
