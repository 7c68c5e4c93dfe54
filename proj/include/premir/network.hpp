#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "premir/eval.hpp"
#include "premir/hyperparameters.hpp"
#include "premir/prep.hpp"
#include "premir/rng.hpp"
#include "premir/tensor.hpp"

namespace premir {

// LSTM parameters with the four gates stacked row-wise in the order
// input, forget, candidate, output: w is (4H x d), u is (4H x H), b is 4H.
struct LstmParams {
  Matrix w;
  Matrix u;
  Vec b;

  std::size_t hidden() const { return b.size() / 4; }
  bool empty() const { return b.empty(); }
};

struct DenseParams {
  Matrix w;  // out x in
  Vec b;

  bool empty() const { return b.empty(); }
};

// All trainable parameters. Which blocks exist depends on the modality and
// structure-input flags; absent blocks stay empty.
struct ModelWeights {
  Hyperparameters hp;

  Matrix embed_seq;  // 4 x embed_seq_dim
  Matrix embed_fwd;  // 3 x embed_str_dim (also the single table in raw mode)
  Matrix embed_bwd;  // 3 x embed_str_dim
  LstmParams lstm_seq;
  LstmParams lstm_fwd;
  LstmParams lstm_bwd;
  DenseParams fc_seq;    // hidden -> 2
  DenseParams fc_str;    // 2*hidden -> 2 (split) or hidden -> 2 (raw)
  DenseParams fc_multi;  // 4 -> 2 (multimodal) or 2 -> 2 (single modality)

  /// Zero-valued weights with the shapes implied by hp.
  static ModelWeights zeros(const Hyperparameters& hp);
  /// Seeded initialization: Glorot-uniform input/dense weights, orthogonal
  /// recurrent weights, forget-gate bias 1, embeddings uniform +-0.05.
  static ModelWeights init(const Hyperparameters& hp, Rng stream);

  std::size_t param_count() const;
  Vec flatten() const;
  void assign_from_flat(std::span<const double> flat);

  bool uses_sequence() const { return hp.modality != Modality::str_only; }
  bool uses_structure() const { return hp.modality != Modality::seq_only; }
  bool split_structure() const {
    return uses_structure() && hp.structure_input == StructureInput::split_flip;
  }
};

// Per-timestep hidden and cell states of one LSTM branch.
struct BranchTrace {
  std::vector<Vec> h;
  std::vector<Vec> c;

  std::size_t steps() const { return h.size(); }
};

struct ForwardTrace {
  BranchTrace seq;
  BranchTrace fwd;  // forward structure (or the whole structure in raw mode)
  BranchTrace bwd;  // flipped backward structure
  Vec h_seq, h_fwd, h_bwd;  // final branch outputs
  Vec y_seq;  // F_seq output
  Vec y_str;  // F_str output
  Vec y_hat;  // final 2-dim prediction
};

enum class RunMode { train, infer };

/// Embedding lookup: row i of the result is the table row of symbol i.
/// Symbols outside [0, table.rows) are an error.
Matrix embed(const std::vector<int>& stream, const Matrix& table);

struct LstmRun {
  Vec final_h;  // zero vector when the input has no timesteps
  BranchTrace trace;
};

/// Standard LSTM recurrence over the rows of x (one embedded symbol per row):
/// hard-sigmoid gates, tanh candidate and cell-to-hidden nonlinearity,
/// h_0 = c_0 = 0.
LstmRun lstm_forward(const Matrix& x, const LstmParams& params);

/// One forward pass. In train mode dropout masks are drawn from
/// `dropout_stream` (required); in infer mode the pass is deterministic.
ForwardTrace forward(const PreparedSample& sample, const ModelWeights& weights,
                     RunMode mode, Rng* dropout_stream = nullptr);

// --- training -------------------------------------------------------------------

struct TrainResult {
  ModelWeights weights;
  std::vector<double> loss_curve;  // mean per-sample squared error per epoch
  std::vector<EpochMetrics> heldout_metrics;
};

struct TrainOptions {
  const std::vector<PreparedSample>* heldout = nullptr;
  std::vector<std::size_t> snapshot_epochs;  // 1-based, sorted
};

/// Algorithm: per epoch, a fresh shuffled set of mini-batches; per batch,
/// accumulate hand-derived gradients over the samples and take one Adam step.
/// Fully determined by (data order, hp, stream).
TrainResult train(const std::vector<PreparedSample>& data, const Hyperparameters& hp,
                  const Rng& stream, const TrainOptions& options = {});

// --- inference --------------------------------------------------------------------

struct Prediction {
  std::string id;
  int label = 0;
  double score = 0.0;  // y_hat[1] / (y_hat[0] + y_hat[1])
  std::array<double, 2> y_hat{0.0, 0.0};
};

/// label = argmax over the two outputs; a tie is the negative class.
std::vector<Prediction> predict(const std::vector<PreparedSample>& samples,
                                const ModelWeights& weights);

/// Batch loss and gradients without updating (used by the gradient checker).
struct BatchGradients {
  double loss = 0.0;
  ModelWeights grads;  // same shapes as the weights
};
BatchGradients batch_gradients(const std::vector<PreparedSample>& batch,
                               const ModelWeights& weights, RunMode mode,
                               Rng* dropout_stream = nullptr);

// --- trace export ------------------------------------------------------------------

// Cell-state matrices aligned with sequence positions (rows = hidden units,
// columns = positions). The structure matrix re-flips the backward branch so
// column p always describes position p of the input.
struct TraceExport {
  std::string id;
  std::string sequence;
  std::string structure;
  std::size_t split_index = 0;
  Matrix seq_cells;  // hidden x |x_s| (empty in str_only mode)
  Matrix str_cells;  // hidden x |x_t| (empty in seq_only mode)
};

TraceExport capture_trace(const PreparedSample& sample, const ModelWeights& weights);

// --- weight serialization -------------------------------------------------------------

nlohmann::json weights_to_json(const ModelWeights& w);
ModelWeights weights_from_json(const nlohmann::json& j);
void save_weights(const std::filesystem::path& path, const ModelWeights& w,
                  const nlohmann::json& provenance);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace premir
