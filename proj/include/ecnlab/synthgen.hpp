#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ecnlab/core.hpp"

// Desk-scale synthetic corpora with exact ground-truth labels, in the
// large-train / small-gold / held-out-test regime. Generation is pure and
// seeded; every sample draws from a stream derived from (seed, split, index),
// so the splits are independent of one another and of the split sizes.

namespace ecnlab {

struct SeqGenConfig {
  int n_train = 2000;
  int n_gold = 60;
  int n_test = 400;

  // Entity classes get disjoint vocabularies of Title-case words; a share of
  // the ORG vocabulary is all-caps acronyms and a share of TIM is year-like
  // digit strings.
  std::vector<int> entity_vocab_sizes = {40, 40, 40, 40};  // PER GEO ORG TIM
  int filler_vocab_size = 400;  // lowercase content words
  double decoy_fraction = 0.10;  // share of filler vocab that is Title-case
  double function_word_share = 0.50;  // chance a filler slot is a function word

  int sentence_len_min = 10;  // body tokens; a final "." is appended
  int sentence_len_max = 16;
  double entity_density = 1.0;  // expected entities per sentence
  int entity_len_min = 2;
  int entity_len_max = 4;

  std::uint64_t seed = 7;
};

struct GridGenConfig {
  int n_train = 400;
  int n_gold = 60;
  int n_test = 400;

  int height = 32;
  int width = 32;

  int band_height_min = 8;   // horizontal road band
  int band_height_max = 14;
  int vehicle_count_min = 1;
  int vehicle_count_max = 3;
  int vehicle_h_min = 3;
  int vehicle_h_max = 6;
  int vehicle_w_min = 4;
  int vehicle_w_max = 8;

  std::array<double, 3> other_color = {0.25, 0.55, 0.30};
  std::array<double, 3> road_color = {0.35, 0.35, 0.38};
  std::vector<std::array<double, 3>> vehicle_palette = {
      {0.80, 0.15, 0.15}, {0.15, 0.25, 0.80}, {0.88, 0.82, 0.30}, {0.92, 0.92, 0.95}};
  double color_noise = 0.06;  // per-pixel Gaussian sigma, clamped to [0,1]

  std::uint64_t seed = 7;
};

struct GeneratedSplits {
  TagSet tagset;
  Dataset train;  // role clean until corrupted downstream
  Dataset gold;
  Dataset test;
};

// Sequence corpus: labels O PER GEO ORG TIM, background O.
GeneratedSplits gen_synthetic_sequences(const SeqGenConfig& cfg);

// Grid corpus: labels other road vehicle, background other.
GeneratedSplits gen_synthetic_grids(const GridGenConfig& cfg);

}  // namespace ecnlab
