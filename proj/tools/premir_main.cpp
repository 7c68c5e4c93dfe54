#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "premir/commands.hpp"
#include "premir/errors.hpp"
#include "premir/version.hpp"

namespace {

using premir::Hyperparameters;
using premir::ValidationError;

std::pair<std::size_t, std::size_t> parse_range(const std::string& text, const char* flag) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError(std::string(flag) + " expects LO:HI, got \"" + text + "\"");
  try {
    return {std::stoull(text.substr(0, colon)), std::stoull(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(flag) + " expects LO:HI, got \"" + text + "\"");
  }
}

void add_input_flags(CLI::App* cmd, premir::InputSpec& in, bool with_cache = true) {
  cmd->add_option("--pos", in.pos, "positive-class FASTA file");
  cmd->add_option("--neg", in.neg, "negative-class FASTA file");
  cmd->add_option("--vienna", in.vienna, "structure file (header/sequence/structure triples)");
  if (with_cache) cmd->add_option("--cache", in.cache, "preprocessing cache file");
  cmd->add_option("--min-loop", in.min_loop, "minimum hairpin loop size for the folder")
      ->check(CLI::NonNegativeNumber);
}

void add_hp_flags(CLI::App* cmd, Hyperparameters& hp, std::string& mode,
                  std::string& palindrome) {
  cmd->add_option("--seed", hp.seed, "run seed (all randomness derives from it)");
  cmd->add_option("--epochs", hp.epochs, "training epochs");
  cmd->add_option("--batch", hp.batch_size, "mini-batch size");
  cmd->add_option("--hidden", hp.hidden_size, "LSTM hidden units");
  cmd->add_option("--dropout", hp.dropout_rate, "dropout rate on dense-layer inputs");
  cmd->add_option("--lr", hp.adam.alpha, "Adam learning rate");
  cmd->add_option("--mode", mode, "multimodal|seq|str");
  cmd->add_option("--palindrome", palindrome, "on (split/flip) | off (raw structure)");
}

nlohmann::json provenance_for(const CLI::App& app, const CLI::App* cmd) {
  nlohmann::json args = nlohmann::json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->count() == 0 || opt->get_name().empty()) continue;
    args[opt->get_name()] = opt->results().size() == 1 ? opt->results()[0]
                                                       : nlohmann::json(opt->results());
  }
  return {{"tool", app.get_name()},
          {"version", premir::kVersion},
          {"command", cmd->get_name()},
          {"args", std::move(args)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"precursor miRNA classifier: folding, split/flip preprocessing, "
               "three-branch LSTM training and evaluation"};
  app.set_version_flag("--version", premir::kVersion);
  app.require_subcommand(1);

  // synth
  premir::SynthCommand synth;
  std::string synth_len = "70:90";
  CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic stem-loop corpus");
  c_synth->add_option("--n-pos", synth.config.n_pos, "positive count");
  c_synth->add_option("--n-neg", synth.config.n_neg, "negative count");
  c_synth->add_option("--len", synth_len, "sequence length range LO:HI");
  c_synth->add_option("--seed", synth.config.seed, "generator seed");
  c_synth->add_option("--out", synth.out_dir, "output directory")->required();

  // fold
  premir::FoldCommand fold;
  CLI::App* c_fold = app.add_subcommand("fold", "fold sequences to dot-bracket structures");
  add_input_flags(c_fold, fold.inputs, /*with_cache=*/false);
  c_fold->add_option("--out", fold.out_file, "output structure file")->required();

  // preprocess
  premir::PreprocessCommand prep;
  CLI::App* c_prep = app.add_subcommand("preprocess", "fold + split/flip into a cache file");
  add_input_flags(c_prep, prep.inputs, /*with_cache=*/false);
  c_prep->add_option("--cache", prep.out_cache, "cache file to write")->required();

  // train
  premir::TrainCommand train;
  std::string train_mode = "multimodal", train_palindrome = "on";
  CLI::App* c_train = app.add_subcommand("train", "train one model on the full input");
  add_input_flags(c_train, train.inputs);
  add_hp_flags(c_train, train.hp, train_mode, train_palindrome);
  c_train->add_option("--out", train.out_dir, "output directory")->required();

  // crossval
  premir::CrossvalCommand crossval;
  std::string cv_mode = "multimodal", cv_palindrome = "on", cv_window;
  CLI::App* c_cv = app.add_subcommand("crossval", "stratified k-fold cross-validation");
  add_input_flags(c_cv, crossval.inputs);
  add_hp_flags(c_cv, crossval.hp, cv_mode, cv_palindrome);
  c_cv->add_option("--folds", crossval.cv.num_folds, "number of folds");
  c_cv->add_option("--window", cv_window, "convergence window LO:HI (default last 10%)");
  c_cv->add_option("--eval-every", crossval.cv.eval_every, "snapshot cadence outside window");
  c_cv->add_option("--threads", crossval.cv.threads, "fold-parallel threads (0 = auto)");
  c_cv->add_option("--out", crossval.out_dir, "output directory")->required();

  // ablate
  premir::AblateCommand ablate;
  std::string ab_window;
  CLI::App* c_ab = app.add_subcommand(
      "ablate", "cross-validate multimodal, seq-only, str-only and raw-structure modes");
  add_input_flags(c_ab, ablate.inputs);
  std::string ab_mode = "multimodal", ab_palindrome = "on";
  add_hp_flags(c_ab, ablate.hp, ab_mode, ab_palindrome);
  c_ab->add_option("--folds", ablate.cv.num_folds, "number of folds");
  c_ab->add_option("--window", ab_window, "convergence window LO:HI (default last 10%)");
  c_ab->add_option("--eval-every", ablate.cv.eval_every, "snapshot cadence outside window");
  c_ab->add_option("--threads", ablate.cv.threads, "fold-parallel threads (0 = auto)");
  c_ab->add_option("--out", ablate.out_dir, "output directory")->required();

  // predict
  premir::PredictCommand predict;
  CLI::App* c_pred = app.add_subcommand("predict", "label samples with trained weights");
  add_input_flags(c_pred, predict.inputs);
  c_pred->add_option("--weights", predict.weights, "weights file")->required();
  c_pred->add_option("--out", predict.out_file, "output TSV")->required();

  // trace
  premir::TraceCommand trace;
  CLI::App* c_trace = app.add_subcommand("trace", "export LSTM cell-state transitions");
  add_input_flags(c_trace, trace.inputs);
  c_trace->add_option("--weights", trace.weights, "weights file")->required();
  c_trace->add_option("--id", trace.sample_id, "sample id to trace")->required();
  c_trace->add_option("--out", trace.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_synth) {
      auto [lo, hi] = parse_range(synth_len, "--len");
      synth.config.len_lo = lo;
      synth.config.len_hi = hi;
      premir::run_synth(synth, provenance_for(app, c_synth));
    } else if (*c_fold) {
      premir::run_fold(fold, provenance_for(app, c_fold));
    } else if (*c_prep) {
      premir::run_preprocess(prep, provenance_for(app, c_prep));
    } else if (*c_train) {
      train.hp.modality = premir::modality_from_string(train_mode);
      train.hp.structure_input = premir::structure_input_from_string(train_palindrome);
      premir::run_train(train, provenance_for(app, c_train));
    } else if (*c_cv) {
      crossval.hp.modality = premir::modality_from_string(cv_mode);
      crossval.hp.structure_input = premir::structure_input_from_string(cv_palindrome);
      if (!cv_window.empty()) {
        auto [lo, hi] = parse_range(cv_window, "--window");
        crossval.cv.window_lo = lo;
        crossval.cv.window_hi = hi;
      }
      premir::run_crossval(crossval, provenance_for(app, c_cv));
    } else if (*c_ab) {
      ablate.hp.modality = premir::modality_from_string(ab_mode);
      ablate.hp.structure_input = premir::structure_input_from_string(ab_palindrome);
      if (!ab_window.empty()) {
        auto [lo, hi] = parse_range(ab_window, "--window");
        ablate.cv.window_lo = lo;
        ablate.cv.window_hi = hi;
      }
      premir::run_ablate(ablate, provenance_for(app, c_ab));
    } else if (*c_pred) {
      premir::run_predict(predict, provenance_for(app, c_pred));
    } else if (*c_trace) {
      premir::run_trace(trace, provenance_for(app, c_trace));
    }
  } catch (const premir::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const premir::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
