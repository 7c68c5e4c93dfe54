#pragma once

#include <map>
#include <string>
#include <vector>

#include "premir/folding.hpp"

namespace premir {

// Positions are 1-based inclusive, following RNA coordinate conventions.
// A hairpin loop is a maximal dot run whose immediate left neighbor is '('
// and immediate right neighbor is ')'.
struct LoopSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const LoopSpan&) const = default;
};

// The split/flip decomposition of a structure: forward = x_t[1..k-1],
// backward_flipped = reverse(x_t[k..n]). Reversing backward_flipped and
// appending it to forward reconstructs the input exactly.
struct StructureSplit {
  std::string forward;
  std::string backward_flipped;
  std::size_t split_index = 0;  // k, 1-based position where the backward part begins
};

/// All hairpin loops in 5'->3' order; bulges and dangling ends are excluded.
std::vector<LoopSpan> find_hairpin_loops(const DotBracketStructure& s);

/// The 1-based split position k. One loop: k = floor((start+end)/2) + 1.
/// Multiple loops: same formula with the first loop's start and the last
/// loop's end. No loop: k = floor(n/2) + 1 (sequence midpoint).
std::size_t split_index(const DotBracketStructure& s);

StructureSplit split_and_flip(const DotBracketStructure& s);

// One sample, fully preprocessed for the network.
struct PreparedSample {
  std::string id;
  std::string sequence;          // ACGU
  std::string structure;         // validated dot-bracket, same length
  std::size_t split_index = 0;   // k
  std::string forward;           // x_f
  std::string backward_flipped;  // x_r
  int label = 0;
};

/// Folds (or looks up) and splits every sample, in dataset order.
std::vector<PreparedSample> prepare_dataset(
    const Dataset& data, const std::map<std::string, DotBracketStructure>& structures);

}  // namespace premir
