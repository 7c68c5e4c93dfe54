#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "premir/seqdata.hpp"

namespace premir {

/// Minimum number of unpaired bases enclosed by a hairpin pair. The built-in
/// folder enforces it; externally supplied structures are not required to.
inline constexpr int kDefaultMinLoop = 3;

// Validated dot-bracket string. Construct through parse_dotbracket,
// nussinov_fold or from_pair_table so balance always holds.
struct DotBracketStructure {
  std::string symbols;

  std::size_t size() const { return symbols.size(); }
  const std::string& str() const { return symbols; }
};

// Per-position partner index, -1 when unpaired. Pairs are symmetric and
// non-crossing.
struct PairTable {
  std::vector<int> partner;

  std::size_t size() const { return partner.size(); }
  std::size_t pair_count() const;
};

/// Validates balance and alphabet; errors carry the position (0-based) of the
/// first violation.
DotBracketStructure parse_dotbracket(const std::string& text);

/// Maximum base-pairing fold over {A-U, G-C, G-U}, non-crossing, with at
/// least `min_loop` unpaired bases inside every hairpin. The traceback is
/// deterministic: the unpaired-j case is preferred, then pairing partners in
/// increasing position order.
DotBracketStructure nussinov_fold(const NucleotideSequence& seq,
                                  int min_loop = kDefaultMinLoop);

/// True for the pair rules the folder uses (Watson-Crick plus G-U wobble).
bool can_pair(char a, char b);

PairTable to_pair_table(const DotBracketStructure& s);
DotBracketStructure from_pair_table(const PairTable& t);

/// Reads a Vienna-style structure file (header / sequence / structure record
/// triples; an optional trailing "(energy)" on the structure line is
/// discarded). Returns one structure per dataset sample: entries missing from
/// the file are folded with nussinov_fold. Unknown ids produce a warning and
/// are ignored; a structure whose length disagrees with its sample is an
/// error naming the id.
std::map<std::string, DotBracketStructure> load_vienna(
    const std::filesystem::path& path, const Dataset& data,
    int min_loop = kDefaultMinLoop, std::vector<std::string>* warnings = nullptr);

/// Folds every sample (used when no Vienna file is supplied).
std::map<std::string, DotBracketStructure> fold_dataset(const Dataset& data,
                                                        int min_loop = kDefaultMinLoop);

}  // namespace premir
