#include "premir/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "premir/errors.hpp"
#include "premir/network.hpp"
#include "premir/seqdata.hpp"

namespace premir {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricField {
  const char* name;
  double MetricsReport::* report;
  double MetricValues::* values;
};

constexpr MetricField kMetricFields[] = {
    {"se", &MetricsReport::se, &MetricValues::se},
    {"sp", &MetricsReport::sp, &MetricValues::sp},
    {"ppv", &MetricsReport::ppv, &MetricValues::ppv},
    {"acc", &MetricsReport::acc, &MetricValues::acc},
    {"f_score", &MetricsReport::f_score, &MetricValues::f_score},
    {"mcc", &MetricsReport::mcc, &MetricValues::mcc},
    {"g_mean", &MetricsReport::g_mean, &MetricValues::g_mean},
};

double f_from(double ppv, double se) {
  if (!(ppv + se > 0.0)) return kNaN;  // also catches NaN ppv
  return 2.0 * ppv * se / (ppv + se);
}

void require_both_classes(const ConfusionCounts& c, const char* fn) {
  if (c.positives() == 0)
    throw ValidationError(std::string(fn) + ": no positive samples evaluated");
  if (c.negatives() == 0)
    throw ValidationError(std::string(fn) + ": no negative samples evaluated");
}

}  // namespace

ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw ValidationError("confusion: predictions and labels differ in length");
  if (predictions.empty()) throw ValidationError("confusion: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
      throw ValidationError("confusion: labels and predictions must be 0 or 1");
    if (labels[i] == 1)
      (predictions[i] == 1 ? c.tp : c.fn) += 1;
    else
      (predictions[i] == 0 ? c.tn : c.fp) += 1;
  }
  return c;
}

MetricsReport balanced_metrics(const ConfusionCounts& c) {
  require_both_classes(c, "balanced_metrics");
  MetricsReport m;
  m.counts = c;
  m.balanced = true;
  m.se = static_cast<double>(c.tp) / static_cast<double>(c.positives());
  m.sp = static_cast<double>(c.tn) / static_cast<double>(c.negatives());
  const double fpr = 1.0 - m.sp;
  m.ppv = (m.se + fpr > 0.0) ? m.se / (m.se + fpr) : kNaN;
  m.acc = 0.5 * (m.se + m.sp);
  m.f_score = f_from(m.ppv, m.se);
  const double mcc_den = (m.se + fpr) * (m.sp + 1.0 - m.se);
  m.mcc = (mcc_den > 0.0) ? (m.se + m.sp - 1.0) / std::sqrt(mcc_den) : 0.0;
  m.g_mean = std::sqrt(m.se * m.sp);
  return m;
}

MetricsReport raw_metrics(const ConfusionCounts& c) {
  require_both_classes(c, "raw_metrics");
  MetricsReport m;
  m.counts = c;
  m.balanced = false;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  m.se = tp / (tp + fn);
  m.sp = tn / (tn + fp);
  m.ppv = (tp + fp > 0.0) ? tp / (tp + fp) : kNaN;
  m.acc = (tp + tn) / (tp + tn + fp + fn);
  m.f_score = f_from(m.ppv, m.se);
  const double mcc_den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = (mcc_den > 0.0) ? (tp * tn - fp * fn) / std::sqrt(mcc_den) : 0.0;
  m.g_mean = std::sqrt(m.se * m.sp);
  return m;
}

std::vector<std::size_t> snapshot_epochs(std::size_t epochs, std::size_t eval_every,
                                         std::size_t window_lo, std::size_t window_hi) {
  std::vector<bool> wanted(epochs + 1, false);
  if (eval_every > 0)
    for (std::size_t e = eval_every; e <= epochs; e += eval_every) wanted[e] = true;
  for (std::size_t e = std::max<std::size_t>(window_lo, 1);
       e <= std::min(window_hi, epochs); ++e)
    wanted[e] = true;
  wanted[epochs] = true;
  std::vector<std::size_t> out;
  for (std::size_t e = 1; e <= epochs; ++e)
    if (wanted[e]) out.push_back(e);
  return out;
}

WindowSummary window_average(const std::vector<FoldRun>& folds, std::size_t lo,
                             std::size_t hi, bool balanced) {
  WindowSummary out;
  out.window_lo = lo;
  out.window_hi = hi;
  for (const MetricField& field : kMetricFields) {
    double sum = 0.0;
    std::size_t count = 0, excluded = 0;
    std::vector<double> fold_means;
    for (const FoldRun& fold : folds) {
      double fold_sum = 0.0;
      std::size_t fold_count = 0;
      for (const EpochMetrics& em : fold.snapshots) {
        if (em.epoch < lo || em.epoch > hi) continue;
        const MetricsReport& r = balanced ? em.balanced : em.raw;
        const double v = r.*(field.report);
        if (std::isnan(v)) {
          ++excluded;
          continue;
        }
        fold_sum += v;
        ++fold_count;
      }
      if (fold_count > 0) {
        fold_means.push_back(fold_sum / static_cast<double>(fold_count));
        sum += fold_sum;
        count += fold_count;
      }
    }
    out.mean.*(field.values) = count > 0 ? sum / static_cast<double>(count) : kNaN;
    double std_dev = 0.0;
    if (fold_means.size() > 1) {
      double mean_of_means = 0.0;
      for (double v : fold_means) mean_of_means += v;
      mean_of_means /= static_cast<double>(fold_means.size());
      double ss = 0.0;
      for (double v : fold_means) ss += (v - mean_of_means) * (v - mean_of_means);
      std_dev = std::sqrt(ss / static_cast<double>(fold_means.size() - 1));
    }
    out.fold_std.*(field.values) = std_dev;
    if (excluded > 0) out.nan_excluded[field.name] = excluded;
  }
  return out;
}

CrossValReport cross_validate(const std::vector<PreparedSample>& data,
                              const Hyperparameters& hp, const CrossValConfig& config) {
  hp.validate();
  if (config.num_folds < 2) throw ValidationError("cross_validate: need at least 2 folds");

  const std::size_t window_lo =
      config.window_lo > 0 ? config.window_lo : (9 * hp.epochs + 9) / 10;
  const std::size_t window_hi = config.window_hi > 0 ? config.window_hi : hp.epochs;
  if (window_lo > window_hi || window_hi > hp.epochs || window_lo < 1)
    throw ValidationError("cross_validate: bad convergence window [" +
                          std::to_string(window_lo) + ", " + std::to_string(window_hi) + "]");

  std::vector<int> labels;
  labels.reserve(data.size());
  for (const PreparedSample& s : data) labels.push_back(s.label);
  const FoldAssignment fa = stratified_folds(labels, config.num_folds, hp.seed);

  const std::vector<std::size_t> snaps =
      snapshot_epochs(hp.epochs, config.eval_every, window_lo, window_hi);

  CrossValReport report;
  report.num_folds = config.num_folds;
  report.seed = hp.seed;
  report.hp = hp;
  report.window_lo = window_lo;
  report.window_hi = window_hi;
  report.folds.resize(config.num_folds);

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t threads =
      std::min(config.num_folds, config.threads > 0 ? config.threads : hw);

  std::atomic<std::size_t> next_fold{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t f = next_fold.fetch_add(1);
      if (f >= config.num_folds) return;
      try {
        std::vector<PreparedSample> train_set, heldout;
        for (std::size_t i = 0; i < data.size(); ++i)
          (fa.assignment[i] == f ? heldout : train_set).push_back(data[i]);

        TrainOptions options;
        options.heldout = &heldout;
        options.snapshot_epochs = snaps;
        TrainResult result =
            train(train_set, hp, Rng(hp.seed).derive("cv").derive(f), options);

        FoldRun& run = report.folds[f];
        run.fold = f;
        run.snapshots = std::move(result.heldout_metrics);
        run.loss_curve = std::move(result.loss_curve);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  report.balanced_summary = window_average(report.folds, window_lo, window_hi, true);
  report.raw_summary = window_average(report.folds, window_lo, window_hi, false);
  return report;
}

AblationReport ablation_suite(const std::vector<PreparedSample>& data,
                              const Hyperparameters& hp, const CrossValConfig& config) {
  AblationReport report;
  report.seed = hp.seed;
  report.num_folds = config.num_folds;

  auto with = [&hp](Modality m, StructureInput s) {
    Hyperparameters out = hp;
    out.modality = m;
    out.structure_input = s;
    return out;
  };

  // Same hp.seed everywhere, so every mode sees identical fold assignments.
  report.modes["multimodal"] =
      cross_validate(data, with(Modality::multimodal, StructureInput::split_flip), config);
  report.modes["seq_only"] =
      cross_validate(data, with(Modality::seq_only, StructureInput::split_flip), config);
  report.modes["str_only"] =
      cross_validate(data, with(Modality::str_only, StructureInput::split_flip), config);
  report.modes["raw_structure"] =
      cross_validate(data, with(Modality::multimodal, StructureInput::raw_structure), config);
  return report;
}

// --- serialization --------------------------------------------------------------

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j;
  for (const MetricField& field : kMetricFields) j[field.name] = m.*(field.report);
  j["counts"] = {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn},
                 {"fn", m.counts.fn}};
  j["balanced"] = m.balanced;
  return j;
}

nlohmann::json to_json(const WindowSummary& s) {
  nlohmann::json mean, fold_std;
  for (const MetricField& field : kMetricFields) {
    mean[field.name] = s.mean.*(field.values);
    fold_std[field.name] = s.fold_std.*(field.values);
  }
  return {{"window", {{"lo", s.window_lo}, {"hi", s.window_hi}}},
          {"mean", mean},
          {"fold_std", fold_std},
          {"nan_excluded", s.nan_excluded}};
}

nlohmann::json to_json(const Hyperparameters& hp) {
  return {{"hidden_size", hp.hidden_size},
          {"embed_seq_dim", hp.embed_seq_dim},
          {"embed_str_dim", hp.embed_str_dim},
          {"dropout_rate", hp.dropout_rate},
          {"batch_size", hp.batch_size},
          {"epochs", hp.epochs},
          {"adam",
           {{"alpha", hp.adam.alpha},
            {"beta1", hp.adam.beta1},
            {"beta2", hp.adam.beta2},
            {"epsilon", hp.adam.epsilon}}},
          {"seed", hp.seed},
          {"modality", to_string(hp.modality)},
          {"structure_input", to_string(hp.structure_input)}};
}

Hyperparameters hyperparameters_from_json(const nlohmann::json& j) {
  Hyperparameters hp;
  try {
    hp.hidden_size = j.at("hidden_size").get<std::size_t>();
    hp.embed_seq_dim = j.at("embed_seq_dim").get<std::size_t>();
    hp.embed_str_dim = j.at("embed_str_dim").get<std::size_t>();
    hp.dropout_rate = j.at("dropout_rate").get<double>();
    hp.batch_size = j.at("batch_size").get<std::size_t>();
    hp.epochs = j.at("epochs").get<std::size_t>();
    hp.adam.alpha = j.at("adam").at("alpha").get<double>();
    hp.adam.beta1 = j.at("adam").at("beta1").get<double>();
    hp.adam.beta2 = j.at("adam").at("beta2").get<double>();
    hp.adam.epsilon = j.at("adam").at("epsilon").get<double>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.modality = modality_from_string(j.at("modality").get<std::string>());
    hp.structure_input =
        structure_input_from_string(j.at("structure_input").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed hyperparameter record: ") + e.what());
  }
  hp.validate();
  return hp;
}

nlohmann::json to_json(const CrossValReport& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const FoldRun& fold : r.folds) {
    nlohmann::json snapshots = nlohmann::json::array();
    for (const EpochMetrics& em : fold.snapshots)
      snapshots.push_back(
          {{"epoch", em.epoch}, {"balanced", to_json(em.balanced)}, {"raw", to_json(em.raw)}});
    folds.push_back({{"fold", fold.fold},
                     {"snapshots", std::move(snapshots)},
                     {"loss_curve", fold.loss_curve}});
  }
  return {{"num_folds", r.num_folds},
          {"seed", r.seed},
          {"hyperparameters", to_json(r.hp)},
          {"window", {{"lo", r.window_lo}, {"hi", r.window_hi}}},
          {"folds", std::move(folds)},
          {"balanced_summary", to_json(r.balanced_summary)},
          {"raw_summary", to_json(r.raw_summary)}};
}

nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json modes;
  for (const auto& [name, report] : r.modes) modes[name] = to_json(report);
  return {{"seed", r.seed}, {"num_folds", r.num_folds}, {"modes", std::move(modes)}};
}

std::string summary_table(const std::map<std::string, WindowSummary>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %9s %8s\n", "", "SE", "SP", "F-score",
                "g-mean");
  out += line;
  for (const auto& [name, s] : rows) {
    std::snprintf(line, sizeof(line), "%-16s %8.4f %8.4f %9.4f %8.4f\n", name.c_str(),
                  s.mean.se, s.mean.sp, s.mean.f_score, s.mean.g_mean);
    out += line;
  }
  return out;
}

}  // namespace premir
