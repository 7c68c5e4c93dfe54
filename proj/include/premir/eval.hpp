#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "premir/hyperparameters.hpp"
#include "premir/prep.hpp"

namespace premir {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
};

// The seven metrics of the evaluation protocol. Prevalence-dependent ones can
// be computed either from the raw counts or at an equal class prior
// ("balanced"); undefined ratios are NaN, never a silent zero. MCC uses the
// usual zero-denominator -> 0 convention.
struct MetricsReport {
  double se = 0.0;
  double sp = 0.0;
  double ppv = 0.0;
  double acc = 0.0;
  double f_score = 0.0;
  double mcc = 0.0;
  double g_mean = 0.0;
  ConfusionCounts counts;
  bool balanced = false;
};

ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Metrics evaluated at an equal class prior: ppv = se/(se+1-sp),
/// acc = (se+sp)/2, f = 2*ppv*se/(ppv+se),
/// mcc = (se+sp-1)/sqrt((se+1-sp)(sp+1-se)), g_mean = sqrt(se*sp).
/// Requires both classes present.
MetricsReport balanced_metrics(const ConfusionCounts& c);

/// The same metrics from the raw counts (prevalence-dependent).
MetricsReport raw_metrics(const ConfusionCounts& c);

// --- cross-validation --------------------------------------------------------

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  MetricsReport balanced;
  MetricsReport raw;
};

struct FoldRun {
  std::size_t fold = 0;
  std::vector<EpochMetrics> snapshots;
  std::vector<double> loss_curve;  // training loss, one entry per epoch
};

// Arithmetic means over folds x window epochs, NaN epochs excluded with
// counts, plus the across-fold standard deviation of per-fold window means
// (the error bars of the figures).
struct MetricValues {
  double se = 0.0, sp = 0.0, ppv = 0.0, acc = 0.0, f_score = 0.0, mcc = 0.0, g_mean = 0.0;
};

struct WindowSummary {
  MetricValues mean;
  MetricValues fold_std;
  std::map<std::string, std::size_t> nan_excluded;  // metric name -> excluded cells
  std::size_t window_lo = 0;
  std::size_t window_hi = 0;
};

struct CrossValReport {
  std::size_t num_folds = 0;
  std::uint64_t seed = 0;
  Hyperparameters hp;
  std::size_t window_lo = 0;
  std::size_t window_hi = 0;
  std::vector<FoldRun> folds;
  WindowSummary balanced_summary;
  WindowSummary raw_summary;
};

struct CrossValConfig {
  std::size_t num_folds = 5;
  std::size_t eval_every = 10;  // snapshot cadence outside the window
  // Convergence window, 1-based inclusive. 0 means auto: [ceil(0.9*epochs), epochs].
  std::size_t window_lo = 0;
  std::size_t window_hi = 0;
  std::size_t threads = 0;  // 0 = min(num_folds, hardware)
};

/// Epochs at which held-out metrics are recorded: every eval_every-th epoch,
/// every epoch inside the window, and the final epoch.
std::vector<std::size_t> snapshot_epochs(std::size_t epochs, std::size_t eval_every,
                                         std::size_t window_lo, std::size_t window_hi);

WindowSummary window_average(const std::vector<FoldRun>& folds, std::size_t lo, std::size_t hi,
                             bool balanced);

/// Trains one model per fold (stratified, seeded from hp.seed), recording
/// held-out metrics per snapshot epoch, then window-averages them. Folds may
/// train concurrently; the report is identical regardless of thread count.
CrossValReport cross_validate(const std::vector<PreparedSample>& data,
                              const Hyperparameters& hp, const CrossValConfig& config);

// --- ablations -----------------------------------------------------------------

struct AblationReport {
  std::uint64_t seed = 0;
  std::size_t num_folds = 0;
  // Mode name -> full cross-validation report. All modes share the same fold
  // assignment, so differences are attributable to the model.
  std::map<std::string, CrossValReport> modes;
};

/// Runs cross-validation for {multimodal, seq_only, str_only} and for
/// raw_structure (multimodal without the split/flip preprocessing), all with
/// shared folds.
AblationReport ablation_suite(const std::vector<PreparedSample>& data,
                              const Hyperparameters& hp, const CrossValConfig& config);

// --- serialization ----------------------------------------------------------------

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const WindowSummary& s);
nlohmann::json to_json(const CrossValReport& r);
nlohmann::json to_json(const AblationReport& r);
nlohmann::json to_json(const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(const nlohmann::json& j);

/// Plain-text table in the benchmark column order (SE, SP, F-score, g-mean).
std::string summary_table(const std::map<std::string, WindowSummary>& rows);

}  // namespace premir
