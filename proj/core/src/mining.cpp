#include "seasonmatch/mining.hpp"

#include <algorithm>
#include <unordered_set>

#include "seasonmatch/error.hpp"
#include "seasonmatch/rng.hpp"

namespace seasonmatch {

namespace {

// n distinct uniform draws from [0, total), emitted in draw order.
std::vector<std::uint64_t> draw_distinct(std::uint64_t n, std::uint64_t total, Rng& rng,
                                         const char* what) {
  if (n > total)
    throw DataError(std::string("requested ") + std::to_string(n) + " " + what +
                    " but only " + std::to_string(total) + " are eligible");
  std::vector<std::uint64_t> out;
  out.reserve(n);
  if (n == 0) return out;
  if (total <= 2 * n) {
    // dense request: partial Fisher-Yates over the whole range
    std::vector<std::uint64_t> pool(total);
    for (std::uint64_t i = 0; i < total; ++i) pool[i] = i;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t j = i + rng.uniform_u64(total - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(n) * 2);
  while (out.size() < n) {
    const std::uint64_t r = rng.uniform_u64(total);
    if (seen.insert(r).second) out.push_back(r);
  }
  return out;
}

std::uint64_t pair_count(int t) {
  return static_cast<std::uint64_t>(t) * (static_cast<std::uint64_t>(t) - 1) / 2;
}

}  // namespace

Miner::Miner(int n_traverses, std::vector<int> allowed, PlaceLabeling labeling,
             int negative_exclusion)
    : n_traverses_(n_traverses),
      allowed_(std::move(allowed)),
      labeling_(labeling),
      neg_sep_(std::max(labeling.same_place_sep, negative_exclusion)) {
  if (n_traverses_ < 2) throw UsageError("mining needs a corpus with at least 2 traverses");
  if (allowed_.empty()) throw UsageError("mining needs a non-empty index set");
  if (labeling_.same_place_sep < 0) throw UsageError("same_place_sep must be >= 0");
  if (negative_exclusion < 0) throw UsageError("negative_exclusion must be >= 0");
  if (!std::is_sorted(allowed_.begin(), allowed_.end()))
    throw UsageError("mining index set must be sorted");

  const int a = static_cast<int>(allowed_.size());
  win_lo_.resize(a);
  win_hi_.resize(a);
  near_lo_.resize(a);
  near_hi_.resize(a);
  cum_win_.assign(static_cast<std::size_t>(a) + 1, 0);
  std::vector<std::uint64_t> neg_per_pos(a), trip_per_pos(a);
  const std::uint64_t t = static_cast<std::uint64_t>(n_traverses_);
  for (int i = 0; i < a; ++i) {
    const int v = allowed_[static_cast<std::size_t>(i)];
    win_lo_[i] = static_cast<int>(
        std::lower_bound(allowed_.begin(), allowed_.end(), v - labeling_.same_place_sep) -
        allowed_.begin());
    win_hi_[i] = static_cast<int>(
        std::upper_bound(allowed_.begin(), allowed_.end(), v + labeling_.same_place_sep) -
        allowed_.begin());
    near_lo_[i] = static_cast<int>(
        std::lower_bound(allowed_.begin(), allowed_.end(), v - neg_sep_) - allowed_.begin());
    near_hi_[i] = static_cast<int>(
        std::upper_bound(allowed_.begin(), allowed_.end(), v + neg_sep_) - allowed_.begin());
    const std::uint64_t win = static_cast<std::uint64_t>(win_hi_[i] - win_lo_[i]);
    const std::uint64_t far = static_cast<std::uint64_t>(a - (near_hi_[i] - near_lo_[i]));
    const std::uint64_t far_above = static_cast<std::uint64_t>(a - near_hi_[i]);
    cum_win_[static_cast<std::size_t>(i) + 1] = cum_win_[static_cast<std::size_t>(i)] + win;
    neg_per_pos[static_cast<std::size_t>(i)] = far_above;  // same-traverse partners after slot
    trip_per_pos[static_cast<std::size_t>(i)] = (t - 1) * win * t * far;
    pop_.negative_pairs += t * far_above + pair_count(n_traverses_) * far;
    pop_.triplets += t * trip_per_pos[static_cast<std::size_t>(i)];
  }
  pop_.positive_pairs = pair_count(n_traverses_) * cum_win_[static_cast<std::size_t>(a)];

  // per-slot prefixes, slot id = traverse * a + position
  cum_neg_pairs_.assign(static_cast<std::size_t>(n_traverses_) * a + 1, 0);
  cum_triplets_.assign(static_cast<std::size_t>(n_traverses_) * a + 1, 0);
  std::size_t s = 0;
  for (int tr = 0; tr < n_traverses_; ++tr) {
    for (int i = 0; i < a; ++i, ++s) {
      const std::uint64_t far = static_cast<std::uint64_t>(a - (near_hi_[i] - near_lo_[i]));
      const std::uint64_t c =
          neg_per_pos[static_cast<std::size_t>(i)] +
          static_cast<std::uint64_t>(n_traverses_ - 1 - tr) * far;
      cum_neg_pairs_[s + 1] = cum_neg_pairs_[s] + c;
      cum_triplets_[s + 1] = cum_triplets_[s] + trip_per_pos[static_cast<std::size_t>(i)];
    }
  }
}

int Miner::far_position(int i, std::uint64_t q) const {
  // far positions are [0, near_lo) then [near_hi, end)
  const std::uint64_t below = static_cast<std::uint64_t>(near_lo_[i]);
  if (q < below) return static_cast<int>(q);
  return static_cast<int>(q - below) + near_hi_[i];
}

PairSample Miner::positive_at(std::uint64_t rank) const {
  const std::uint64_t w = cum_win_.back();
  const std::uint64_t pair_id = rank / w;
  std::uint64_t r = rank % w;
  // traverse pair (ta, tb) with ta < tb, lexicographic ordinal
  int ta = 0;
  std::uint64_t span = static_cast<std::uint64_t>(n_traverses_ - 1);
  std::uint64_t off = pair_id;
  while (off >= span) {
    off -= span;
    ++ta;
    span = static_cast<std::uint64_t>(n_traverses_ - 1 - ta);
  }
  const int tb = ta + 1 + static_cast<int>(off);
  const int i = static_cast<int>(
      std::upper_bound(cum_win_.begin(), cum_win_.end(), r) - cum_win_.begin() - 1);
  const int j = win_lo_[i] + static_cast<int>(r - cum_win_[static_cast<std::size_t>(i)]);
  PairSample p;
  p.anchor = {ta, allowed_[static_cast<std::size_t>(i)]};
  p.other = {tb, allowed_[static_cast<std::size_t>(j)]};
  p.label = PairLabel::positive;
  return p;
}

PairSample Miner::negative_at(std::uint64_t rank) const {
  const int a = static_cast<int>(allowed_.size());
  const std::size_t slot = static_cast<std::size_t>(
      std::upper_bound(cum_neg_pairs_.begin(), cum_neg_pairs_.end(), rank) -
      cum_neg_pairs_.begin() - 1);
  std::uint64_t q = rank - cum_neg_pairs_[slot];
  const int tr = static_cast<int>(slot) / a;
  const int i = static_cast<int>(slot) % a;
  PairSample p;
  p.anchor = {tr, allowed_[static_cast<std::size_t>(i)]};
  p.label = PairLabel::negative;
  const std::uint64_t far_above = static_cast<std::uint64_t>(a - near_hi_[i]);
  if (q < far_above) {
    p.other = {tr, allowed_[static_cast<std::size_t>(near_hi_[i] + static_cast<int>(q))]};
    return p;
  }
  q -= far_above;
  const std::uint64_t far = static_cast<std::uint64_t>(a - (near_hi_[i] - near_lo_[i]));
  const int t2 = tr + 1 + static_cast<int>(q / far);
  p.other = {t2, allowed_[static_cast<std::size_t>(far_position(i, q % far))]};
  return p;
}

TripletSample Miner::triplet_at(std::uint64_t rank) const {
  const int a = static_cast<int>(allowed_.size());
  const std::size_t slot = static_cast<std::size_t>(
      std::upper_bound(cum_triplets_.begin(), cum_triplets_.end(), rank) -
      cum_triplets_.begin() - 1);
  std::uint64_t q = rank - cum_triplets_[slot];
  const int tn = static_cast<int>(slot) / a;
  const int i = static_cast<int>(slot) % a;
  const std::uint64_t win = static_cast<std::uint64_t>(win_hi_[i] - win_lo_[i]);
  const std::uint64_t far = static_cast<std::uint64_t>(a - (near_hi_[i] - near_lo_[i]));
  const std::uint64_t neg_count = static_cast<std::uint64_t>(n_traverses_) * far;
  const std::uint64_t pos_choice = q / neg_count;
  const std::uint64_t neg_choice = q % neg_count;
  const int tp_ord = static_cast<int>(pos_choice / win);
  TripletSample t;
  t.neutral = {tn, allowed_[static_cast<std::size_t>(i)]};
  t.positive = {tp_ord < tn ? tp_ord : tp_ord + 1,
                allowed_[static_cast<std::size_t>(win_lo_[i] + static_cast<int>(pos_choice % win))]};
  t.negative = {static_cast<int>(neg_choice / far),
                allowed_[static_cast<std::size_t>(far_position(i, neg_choice % far))]};
  return t;
}

std::vector<PairSample> Miner::sample_pairs(std::uint64_t n_pos, std::uint64_t n_neg,
                                            std::uint64_t seed) const {
  std::vector<PairSample> out;
  out.reserve(n_pos + n_neg);
  {
    Rng rng(derive_seed(seed, "mine-positive"));
    for (std::uint64_t r : draw_distinct(n_pos, pop_.positive_pairs, rng, "positive pairs"))
      out.push_back(positive_at(r));
  }
  {
    Rng rng(derive_seed(seed, "mine-negative"));
    for (std::uint64_t r : draw_distinct(n_neg, pop_.negative_pairs, rng, "negative pairs"))
      out.push_back(negative_at(r));
  }
  return out;
}

std::vector<TripletSample> Miner::sample_triplets(std::uint64_t n, std::uint64_t seed) const {
  std::vector<TripletSample> out;
  out.reserve(n);
  Rng rng(derive_seed(seed, "mine-triplet"));
  for (std::uint64_t r : draw_distinct(n, pop_.triplets, rng, "triplets"))
    out.push_back(triplet_at(r));
  return out;
}

Miner make_miner(const AlignedCorpus& corpus, const PlaceLabeling& labeling,
                 int negative_exclusion, const Partition* partition) {
  if (corpus.n_traverses() < 2)
    throw UsageError("mining needs a corpus with at least 2 traverses");
  std::vector<int> allowed;
  if (partition) {
    if (partition->total != corpus.length())
      throw DataError("partition covers " + std::to_string(partition->total) +
                      " frames but corpus has " + std::to_string(corpus.length()));
    allowed = partition->train_indices;
  } else {
    allowed.resize(static_cast<std::size_t>(corpus.length()));
    for (int i = 0; i < corpus.length(); ++i) allowed[static_cast<std::size_t>(i)] = i;
  }
  return Miner(corpus.n_traverses(), std::move(allowed), labeling, negative_exclusion);
}

std::vector<PairSample> mine_pairs(const AlignedCorpus& corpus, const PlaceLabeling& labeling,
                                   std::uint64_t n_pos, std::uint64_t n_neg, std::uint64_t seed,
                                   int negative_exclusion, const Partition* partition) {
  return make_miner(corpus, labeling, negative_exclusion, partition)
      .sample_pairs(n_pos, n_neg, seed);
}

std::vector<TripletSample> mine_triplets(const AlignedCorpus& corpus,
                                         const PlaceLabeling& labeling, std::uint64_t n,
                                         std::uint64_t seed, int negative_exclusion,
                                         const Partition* partition) {
  return make_miner(corpus, labeling, negative_exclusion, partition).sample_triplets(n, seed);
}

}  // namespace seasonmatch
