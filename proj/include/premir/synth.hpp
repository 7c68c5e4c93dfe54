#pragma once

#include <cstdint>
#include <utility>

#include "premir/seqdata.hpp"

namespace premir {

// Desk-scale test data. Positives are clean stem-loops (random stem of
// complementary pairs, a 3-8 base loop, short tails, a little mutation noise
// on the 3' side); negatives shuffle the letters of a positive-style
// sequence, which preserves composition but destroys the hairpin.
struct SynthConfig {
  std::size_t n_pos = 16;
  std::size_t n_neg = 16;
  std::size_t len_lo = 70;
  std::size_t len_hi = 90;
  std::uint64_t seed = 1;
  double stem_mutation_rate = 0.05;
  // Fraction of positives whose loop starts with the GNRA-like motif GAAA;
  // gives the sequence branch a learnable signal on top of the palindrome.
  double loop_motif_rate = 0.7;
};

std::pair<Dataset, Dataset> synth_datasets(const SynthConfig& config);

}  // namespace premir
