#pragma once

#include <cstdint>
#include <string>

#include "premir/tensor.hpp"

namespace premir {

/// Which input branches the model uses.
enum class Modality { multimodal, seq_only, str_only };

/// How structure reaches the network: the palindrome-aware split/flip pair of
/// streams, or the raw unsplit string through a single LSTM.
enum class StructureInput { split_flip, raw_structure };

std::string to_string(Modality m);
std::string to_string(StructureInput s);
Modality modality_from_string(const std::string& s);
StructureInput structure_input_from_string(const std::string& s);

// Every training knob in one serializable record.
struct Hyperparameters {
  std::size_t hidden_size = 10;
  std::size_t embed_seq_dim = 4;
  std::size_t embed_str_dim = 3;
  double dropout_rate = 0.2;
  std::size_t batch_size = 128;
  std::size_t epochs = 500;
  AdamConfig adam;
  std::uint64_t seed = 1;
  Modality modality = Modality::multimodal;
  StructureInput structure_input = StructureInput::split_flip;

  void validate() const;

  bool operator==(const Hyperparameters&) const = default;
};

}  // namespace premir
