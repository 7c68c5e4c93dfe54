#include "premir/commands.hpp"

#include <fstream>
#include <iostream>

#include "premir/cache.hpp"
#include "premir/errors.hpp"
#include "premir/folding.hpp"
#include "premir/network.hpp"
#include "premir/version.hpp"

namespace premir {

namespace {

void ensure_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string provenance_comment(const nlohmann::json& provenance) {
  return "# premir " + std::string(kVersion) + "\n# config: " + provenance.dump() + "\n";
}

Dataset load_fasta_inputs(const InputSpec& in) {
  if (in.pos.empty() && in.neg.empty())
    throw ValidationError("no input given: supply --cache, or --pos and/or --neg");
  if (!in.pos.empty() && !in.neg.empty())
    return merge(load_fasta(in.pos, 1), load_fasta(in.neg, 0), "dataset");
  return in.pos.empty() ? load_fasta(in.neg, 0) : load_fasta(in.pos, 1);
}

std::map<std::string, DotBracketStructure> resolve_structures(const InputSpec& in,
                                                              const Dataset& data) {
  if (!in.vienna.empty()) return load_vienna(in.vienna, data, in.min_loop);
  return fold_dataset(data, in.min_loop);
}

}  // namespace

std::vector<PreparedSample> load_inputs(const InputSpec& in) {
  if (!in.cache.empty()) {
    if (!in.pos.empty() || !in.neg.empty() || !in.vienna.empty())
      throw ValidationError("--cache cannot be combined with --pos/--neg/--vienna");
    return load_cache(in.cache);
  }
  const Dataset data = load_fasta_inputs(in);
  return prepare_dataset(data, resolve_structures(in, data));
}

void run_synth(const SynthCommand& cmd, const nlohmann::json& provenance) {
  ensure_out_dir(cmd.out_dir);
  const auto [pos, neg] = synth_datasets(cmd.config);
  write_fasta(cmd.out_dir / "pos.fa", pos);
  write_fasta(cmd.out_dir / "neg.fa", neg);
  nlohmann::json manifest = {{"provenance", provenance},
                             {"positives", pos.size()},
                             {"negatives", neg.size()},
                             {"files", {"pos.fa", "neg.fa"}}};
  write_json(cmd.out_dir / "synth_manifest.json", manifest);
  std::cout << "wrote " << (cmd.out_dir / "pos.fa").string() << " (" << pos.size()
            << " records) and " << (cmd.out_dir / "neg.fa").string() << " (" << neg.size()
            << " records)\n";
}

void run_fold(const FoldCommand& cmd, const nlohmann::json& provenance) {
  const Dataset data = load_fasta_inputs(cmd.inputs);
  const auto structures = resolve_structures(cmd.inputs, data);
  std::ofstream out = open_out(cmd.out_file);
  out << provenance_comment(provenance);
  for (const Sample& s : data.samples)
    out << '>' << s.id << '\n'
        << s.sequence.symbols << '\n'
        << structures.at(s.id).str() << '\n';
  if (!out) throw IoError("write failed: " + cmd.out_file.string());
  std::cout << "wrote " << cmd.out_file.string() << " (" << data.size() << " records)\n";
}

void run_preprocess(const PreprocessCommand& cmd, const nlohmann::json& provenance) {
  (void)provenance;  // cache rows must stay byte-stable across runs
  if (!cmd.inputs.cache.empty())
    throw ValidationError("preprocess reads raw FASTA inputs, not a cache");
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  save_cache(cmd.out_cache, samples);
  std::cout << "wrote " << cmd.out_cache.string() << " (" << samples.size() << " samples)\n";
}

void run_train(const TrainCommand& cmd, const nlohmann::json& provenance) {
  ensure_out_dir(cmd.out_dir);
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  const TrainResult result = train(samples, cmd.hp, Rng(cmd.hp.seed));

  save_weights(cmd.out_dir / "weights.json", result.weights, provenance);
  std::string curve = provenance_comment(provenance) + "epoch\tloss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu\t%.17g\n", e + 1, result.loss_curve[e]);
    curve += line;
  }
  write_text(cmd.out_dir / "loss_curve.tsv", curve);
  std::cout << "trained " << samples.size() << " samples for " << cmd.hp.epochs
            << " epochs; final loss " << result.loss_curve.back() << '\n'
            << "wrote " << (cmd.out_dir / "weights.json").string() << " and "
            << (cmd.out_dir / "loss_curve.tsv").string() << '\n';
}

void run_crossval(const CrossvalCommand& cmd, const nlohmann::json& provenance) {
  ensure_out_dir(cmd.out_dir);
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  const CrossValReport report = cross_validate(samples, cmd.hp, cmd.cv);

  nlohmann::json j = to_json(report);
  j["provenance"] = provenance;
  write_json(cmd.out_dir / "crossval_report.json", j);

  const std::map<std::string, WindowSummary> rows = {
      {"balanced", report.balanced_summary}, {"raw", report.raw_summary}};
  write_text(cmd.out_dir / "crossval_table.txt",
             provenance_comment(provenance) + summary_table(rows));
  std::cout << summary_table(rows);
  std::cout << "wrote " << (cmd.out_dir / "crossval_report.json").string() << '\n';
}

void run_ablate(const AblateCommand& cmd, const nlohmann::json& provenance) {
  ensure_out_dir(cmd.out_dir);
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  const AblationReport report = ablation_suite(samples, cmd.hp, cmd.cv);

  nlohmann::json j = to_json(report);
  j["provenance"] = provenance;
  write_json(cmd.out_dir / "ablation_report.json", j);

  std::map<std::string, WindowSummary> rows;
  for (const auto& [name, mode_report] : report.modes)
    rows[name] = mode_report.balanced_summary;
  write_text(cmd.out_dir / "ablation_table.txt",
             provenance_comment(provenance) + summary_table(rows));
  std::cout << summary_table(rows);
  std::cout << "wrote " << (cmd.out_dir / "ablation_report.json").string() << '\n';
}

void run_predict(const PredictCommand& cmd, const nlohmann::json& provenance) {
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  const ModelWeights weights = load_weights(cmd.weights);
  const std::vector<Prediction> preds = predict(samples, weights);

  std::string tsv = provenance_comment(provenance) + "id\tlabel\tscore\ty_neg\ty_pos\n";
  for (const Prediction& p : preds) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s\t%d\t%.6f\t%.6f\t%.6f\n", p.id.c_str(), p.label,
                  p.score, p.y_hat[0], p.y_hat[1]);
    tsv += line;
  }
  write_text(cmd.out_file, tsv);
  std::cout << "wrote " << cmd.out_file.string() << " (" << preds.size() << " rows)\n";
}

namespace {

std::string trace_csv(const nlohmann::json& provenance, const Matrix& cells,
                      const std::string& header_name, const std::string& chars) {
  std::string csv = provenance_comment(provenance);
  csv += "position";
  for (std::size_t p = 0; p < cells.cols; ++p) csv += ',' + std::to_string(p + 1);
  csv += '\n' + header_name;
  for (std::size_t p = 0; p < cells.cols; ++p) {
    csv += ',';
    csv += chars[p];
  }
  csv += '\n';
  for (std::size_t r = 0; r < cells.rows; ++r) {
    csv += "cell_" + std::to_string(r + 1);
    char num[32];
    for (std::size_t p = 0; p < cells.cols; ++p) {
      std::snprintf(num, sizeof(num), ",%.8g", cells(r, p));
      csv += num;
    }
    csv += '\n';
  }
  return csv;
}

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void run_trace(const TraceCommand& cmd, const nlohmann::json& provenance) {
  ensure_out_dir(cmd.out_dir);
  const std::vector<PreparedSample> samples = load_inputs(cmd.inputs);
  const ModelWeights weights = load_weights(cmd.weights);

  const PreparedSample* sample = nullptr;
  for (const PreparedSample& s : samples)
    if (s.id == cmd.sample_id) sample = &s;
  if (!sample)
    throw ValidationError("sample \"" + cmd.sample_id + "\" not found in the inputs");

  const TraceExport trace = capture_trace(*sample, weights);
  const std::string stem = "trace_" + trace.id;
  if (!trace.seq_cells.empty())
    write_text(cmd.out_dir / (stem + "_seq.csv"),
               trace_csv(provenance, trace.seq_cells, "sequence", trace.sequence));
  if (!trace.str_cells.empty())
    write_text(cmd.out_dir / (stem + "_str.csv"),
               trace_csv(provenance, trace.str_cells, "structure", trace.structure));

  nlohmann::json j = {{"id", trace.id},
                      {"sequence", trace.sequence},
                      {"structure", trace.structure},
                      {"split_index", trace.split_index},
                      {"provenance", provenance}};
  if (!trace.seq_cells.empty()) j["seq_cells"] = matrix_rows(trace.seq_cells);
  if (!trace.str_cells.empty()) j["str_cells"] = matrix_rows(trace.str_cells);
  write_json(cmd.out_dir / (stem + ".json"), j);
  std::cout << "wrote trace for \"" << trace.id << "\" to " << cmd.out_dir.string() << '\n';
}

}  // namespace premir
