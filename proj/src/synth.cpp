#include "premir/synth.hpp"

#include <algorithm>
#include <string>

#include "premir/errors.hpp"
#include "premir/rng.hpp"

namespace premir {

namespace {

constexpr char kBases[] = {'A', 'C', 'G', 'U'};

char complement(char c) {
  switch (c) {
    case 'A': return 'U';
    case 'U': return 'A';
    case 'C': return 'G';
    default: return 'C';
  }
}

std::string random_bases(std::size_t n, Rng& rng) {
  std::string s(n, 'A');
  for (char& c : s) c = kBases[rng.next_below(4)];
  return s;
}

std::string stem_loop_sequence(std::size_t length, const SynthConfig& cfg, Rng& rng) {
  std::size_t loop = 3 + rng.next_below(6);            // 3..8
  std::size_t tail5 = rng.next_below(6);               // 0..5
  std::size_t tail3 = rng.next_below(6);
  // keep the stem dominant; shrink tails if the target length is small
  while (length < loop + tail5 + tail3 + 8) {
    if (tail5 > 0) --tail5;
    else if (tail3 > 0) --tail3;
    else if (loop > 3) --loop;
    else break;
  }
  std::size_t stem = (length - loop - tail5 - tail3) / 2;
  loop = length - tail5 - tail3 - 2 * stem;  // absorb the parity remainder

  std::string five = random_bases(stem, rng);
  std::string loop_bases = random_bases(loop, rng);
  if (loop >= 4 && rng.next_double() < cfg.loop_motif_rate)
    loop_bases.replace(0, 4, "GAAA");
  std::string three(stem, 'A');
  for (std::size_t i = 0; i < stem; ++i) {
    char c = complement(five[stem - 1 - i]);
    if (rng.next_double() < cfg.stem_mutation_rate) c = kBases[rng.next_below(4)];
    three[i] = c;
  }
  return random_bases(tail5, rng) + five + loop_bases + three + random_bases(tail3, rng);
}

}  // namespace

std::pair<Dataset, Dataset> synth_datasets(const SynthConfig& cfg) {
  if (cfg.n_pos == 0 || cfg.n_neg == 0)
    throw ValidationError("synth: need at least one sample per class");
  if (cfg.len_lo < 16 || cfg.len_hi < cfg.len_lo)
    throw ValidationError("synth: degenerate length range [" + std::to_string(cfg.len_lo) +
                          ", " + std::to_string(cfg.len_hi) + "]");

  Rng root(cfg.seed);
  Rng pos_rng = root.derive("synth-pos");
  Rng neg_rng = root.derive("synth-neg");

  Dataset pos, neg;
  pos.name = "synth-positive";
  neg.name = "synth-negative";

  for (std::size_t i = 0; i < cfg.n_pos; ++i) {
    const std::size_t length = cfg.len_lo + pos_rng.next_below(cfg.len_hi - cfg.len_lo + 1);
    pos.samples.push_back(
        {"pos_" + std::to_string(i), {stem_loop_sequence(length, cfg, pos_rng)}, 1});
  }
  for (std::size_t i = 0; i < cfg.n_neg; ++i) {
    const std::size_t length = cfg.len_lo + neg_rng.next_below(cfg.len_hi - cfg.len_lo + 1);
    std::string seq = stem_loop_sequence(length, cfg, neg_rng);
    std::vector<char> letters(seq.begin(), seq.end());
    neg_rng.shuffle(letters);
    neg.samples.push_back(
        {"neg_" + std::to_string(i), {std::string(letters.begin(), letters.end())}, 0});
  }
  return {std::move(pos), std::move(neg)};
}

}  // namespace premir
