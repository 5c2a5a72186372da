#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "seasonmatch/losses.hpp"
#include "seasonmatch/types.hpp"

namespace seasonmatch {

struct SlotRef {
  int traverse = 0;
  int index = 0;

  bool operator==(const SlotRef&) const = default;
};

// Positive: same place (|di| <= same_place_sep) across two different
// traverses. Negative: |di| greater than both same_place_sep and
// negative_exclusion, any traverses.
struct PairSample {
  SlotRef anchor;
  SlotRef other;
  PairLabel label = PairLabel::positive;

  bool operator==(const PairSample&) const = default;
};

struct TripletSample {
  SlotRef neutral;
  SlotRef positive;
  SlotRef negative;

  bool operator==(const TripletSample&) const = default;
};

struct MiningPopulation {
  std::uint64_t positive_pairs = 0;
  std::uint64_t negative_pairs = 0;  // unordered pairs of slots
  std::uint64_t triplets = 0;
};

// Uniform without-replacement sampling over the eligible pair/triplet
// sets, done by unranking into the lexicographically ordered virtual
// population (never materialized). Deterministic for a fixed seed.
class Miner {
 public:
  // allowed: sorted eligible frame indices (the train set when a
  // partition applies, otherwise all of [0, N)).
  Miner(int n_traverses, std::vector<int> allowed, PlaceLabeling labeling,
        int negative_exclusion);

  const MiningPopulation& population() const { return pop_; }

  std::vector<PairSample> sample_pairs(std::uint64_t n_pos, std::uint64_t n_neg,
                                       std::uint64_t seed) const;
  std::vector<TripletSample> sample_triplets(std::uint64_t n, std::uint64_t seed) const;

 private:
  PairSample positive_at(std::uint64_t rank) const;
  PairSample negative_at(std::uint64_t rank) const;
  TripletSample triplet_at(std::uint64_t rank) const;
  int far_position(int i, std::uint64_t q) const;

  int n_traverses_;
  std::vector<int> allowed_;
  PlaceLabeling labeling_;
  int neg_sep_;  // max(same_place_sep, negative_exclusion)

  // per allowed position: window and exclusion ranges as positions
  std::vector<int> win_lo_, win_hi_;    // |value delta| <= same_place_sep
  std::vector<int> near_lo_, near_hi_;  // |value delta| <= neg_sep
  std::vector<std::uint64_t> cum_win_;        // prefix of win sizes
  std::vector<std::uint64_t> cum_neg_pairs_;  // prefix of per-slot negative-partner counts
  std::vector<std::uint64_t> cum_triplets_;   // prefix of per-slot triplet counts
  MiningPopulation pop_;
};

// Spec-level conveniences over an aligned corpus; partition restricts
// sampling to train indices.
Miner make_miner(const AlignedCorpus& corpus, const PlaceLabeling& labeling,
                 int negative_exclusion, const Partition* partition = nullptr);

std::vector<PairSample> mine_pairs(const AlignedCorpus& corpus, const PlaceLabeling& labeling,
                                   std::uint64_t n_pos, std::uint64_t n_neg, std::uint64_t seed,
                                   int negative_exclusion = 3,
                                   const Partition* partition = nullptr);

std::vector<TripletSample> mine_triplets(const AlignedCorpus& corpus,
                                         const PlaceLabeling& labeling, std::uint64_t n,
                                         std::uint64_t seed, int negative_exclusion = 3,
                                         const Partition* partition = nullptr);

}  // namespace seasonmatch
