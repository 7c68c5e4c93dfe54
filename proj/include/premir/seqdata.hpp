#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "premir/rng.hpp"

namespace premir {

// RNA sequence over {A,C,G,U}. FASTA ingestion folds case and maps T to U;
// any other symbol is a hard error rather than a silent skip.
struct NucleotideSequence {
  std::string symbols;

  std::size_t size() const { return symbols.size(); }
};

struct Sample {
  std::string id;
  NucleotideSequence sequence;
  int label = 0;  // 1 = precursor miRNA, 0 = negative
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t count_label(int label) const;
};

struct FoldAssignment {
  std::size_t num_folds = 0;
  std::vector<std::size_t> assignment;  // per-sample fold index in [0, num_folds)
};

/// Reads one FASTA file; every record gets `label`. Multi-line records are
/// concatenated, T/t becomes U, and anything outside {A,C,G,U,T} fails with
/// the record id and the offending character.
Dataset load_fasta(const std::filesystem::path& path, int label);

/// Single-line-per-sequence FASTA writer (the loader accepts any wrapping).
void write_fasta(const std::filesystem::path& path, const Dataset& data);

/// Concatenates datasets, enforcing unique sample ids.
Dataset merge(const Dataset& a, const Dataset& b, const std::string& name);

/// Per-class shuffle under the seeded stream, then round-robin assignment.
/// Fold sizes per class differ by at most one. Errors if any class has
/// fewer than k members.
FoldAssignment stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

/// Same assignment computed directly from per-sample labels.
FoldAssignment stratified_folds(const std::vector<int>& labels, std::size_t k,
                                std::uint64_t seed);

/// A fresh seeded permutation of [0, n) per epoch, chunked into batches of m
/// (the final batch may be smaller).
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t m,
                                                  std::uint64_t seed, std::size_t epoch);

/// Same, drawing the permutation from an already-derived stream.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t m, Rng stream);

}  // namespace premir
