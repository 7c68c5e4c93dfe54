#include "premir/hyperparameters.hpp"

#include "premir/errors.hpp"

namespace premir {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::multimodal: return "multimodal";
    case Modality::seq_only: return "seq";
    case Modality::str_only: return "str";
  }
  throw InternalError("unknown modality");
}

std::string to_string(StructureInput s) {
  return s == StructureInput::split_flip ? "split_flip" : "raw_structure";
}

Modality modality_from_string(const std::string& s) {
  if (s == "multimodal") return Modality::multimodal;
  if (s == "seq" || s == "seq_only") return Modality::seq_only;
  if (s == "str" || s == "str_only") return Modality::str_only;
  throw ValidationError("unknown mode \"" + s + "\" (expected multimodal|seq|str)");
}

StructureInput structure_input_from_string(const std::string& s) {
  if (s == "split_flip" || s == "on") return StructureInput::split_flip;
  if (s == "raw_structure" || s == "off") return StructureInput::raw_structure;
  throw ValidationError("unknown palindrome setting \"" + s + "\" (expected on|off)");
}

void Hyperparameters::validate() const {
  if (hidden_size == 0) throw ValidationError("hidden_size must be positive");
  if (embed_seq_dim == 0 || embed_str_dim == 0)
    throw ValidationError("embedding dimensions must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ValidationError("dropout_rate must be in [0, 1)");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (adam.alpha < 0.0) throw ValidationError("adam alpha must be non-negative");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0)
    throw ValidationError("adam betas must be in [0, 1)");
  if (adam.epsilon <= 0.0) throw ValidationError("adam epsilon must be positive");
}

}  // namespace premir
