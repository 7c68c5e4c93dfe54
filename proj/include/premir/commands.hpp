#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "premir/eval.hpp"
#include "premir/hyperparameters.hpp"
#include "premir/prep.hpp"
#include "premir/synth.hpp"

namespace premir {

// Shared input selection: either a preprocessing cache, or raw FASTA files
// (positive and/or negative) with an optional Vienna structure file.
struct InputSpec {
  std::filesystem::path cache;
  std::filesystem::path pos;
  std::filesystem::path neg;
  std::filesystem::path vienna;
  int min_loop = kDefaultMinLoop;
};

/// Resolves an InputSpec to prepared samples (folding and splitting as needed).
std::vector<PreparedSample> load_inputs(const InputSpec& in);

struct SynthCommand {
  SynthConfig config;
  std::filesystem::path out_dir;
};
void run_synth(const SynthCommand& cmd, const nlohmann::json& provenance);

struct FoldCommand {
  InputSpec inputs;
  std::filesystem::path out_file;
};
void run_fold(const FoldCommand& cmd, const nlohmann::json& provenance);

struct PreprocessCommand {
  InputSpec inputs;            // raw FASTA side
  std::filesystem::path out_cache;
};
void run_preprocess(const PreprocessCommand& cmd, const nlohmann::json& provenance);

struct TrainCommand {
  InputSpec inputs;
  Hyperparameters hp;
  std::filesystem::path out_dir;
};
void run_train(const TrainCommand& cmd, const nlohmann::json& provenance);

struct CrossvalCommand {
  InputSpec inputs;
  Hyperparameters hp;
  CrossValConfig cv;
  std::filesystem::path out_dir;
};
void run_crossval(const CrossvalCommand& cmd, const nlohmann::json& provenance);

struct AblateCommand {
  InputSpec inputs;
  Hyperparameters hp;
  CrossValConfig cv;
  std::filesystem::path out_dir;
};
void run_ablate(const AblateCommand& cmd, const nlohmann::json& provenance);

struct PredictCommand {
  InputSpec inputs;
  std::filesystem::path weights;
  std::filesystem::path out_file;
};
void run_predict(const PredictCommand& cmd, const nlohmann::json& provenance);

struct TraceCommand {
  InputSpec inputs;
  std::filesystem::path weights;
  std::string sample_id;
  std::filesystem::path out_dir;
};
void run_trace(const TraceCommand& cmd, const nlohmann::json& provenance);

}  // namespace premir
