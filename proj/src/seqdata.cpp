#include "premir/seqdata.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "premir/errors.hpp"

namespace premir {

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(),
                    [label](const Sample& s) { return s.label == label; }));
}

namespace {

char normalize_base(char c, const std::string& record_id) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return 'A';
    case 'C': return 'C';
    case 'G': return 'G';
    case 'U':
    case 'T': return 'U';
    default:
      throw ValidationError("record \"" + record_id + "\": invalid symbol '" +
                            std::string(1, c) + "' (expected A/C/G/U/T)");
  }
}

std::string header_id(const std::string& line) {
  // id = first whitespace-delimited token after '>'
  std::size_t start = 1;
  while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
  std::size_t end = start;
  while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
  return line.substr(start, end - start);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Dataset load_fasta(const std::filesystem::path& path, int label) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open FASTA file: " + path.string());

  Dataset data;
  data.name = path.filename().string();

  std::string line;
  std::string current_id;
  std::string current_seq;
  bool in_record = false;

  auto flush = [&]() {
    if (!in_record) return;
    if (current_seq.empty())
      throw ValidationError("record \"" + current_id + "\": empty sequence");
    data.samples.push_back({current_id, {current_seq}, label});
    current_seq.clear();
  };

  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty() || line[0] == ';') continue;
    if (line[0] == '>') {
      flush();
      current_id = header_id(line);
      if (current_id.empty())
        throw ValidationError("FASTA header without an id in " + path.string());
      in_record = true;
      continue;
    }
    if (!in_record)
      throw ValidationError("sequence data before any '>' header in " + path.string());
    for (char c : line) current_seq.push_back(normalize_base(c, current_id));
  }
  flush();

  if (data.samples.empty())
    throw ValidationError("no FASTA records in " + path.string());

  std::unordered_set<std::string> seen;
  for (const Sample& s : data.samples)
    if (!seen.insert(s.id).second)
      throw ValidationError("duplicate sample id \"" + s.id + "\" in " + path.string());

  return data;
}

void write_fasta(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write FASTA file: " + path.string());
  for (const Sample& s : data.samples)
    out << '>' << s.id << '\n' << s.sequence.symbols << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset merge(const Dataset& a, const Dataset& b, const std::string& name) {
  Dataset out;
  out.name = name;
  out.samples.reserve(a.size() + b.size());
  out.samples.insert(out.samples.end(), a.samples.begin(), a.samples.end());
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  std::unordered_set<std::string> seen;
  for (const Sample& s : out.samples)
    if (!seen.insert(s.id).second)
      throw ValidationError("duplicate sample id \"" + s.id + "\" when merging datasets");
  return out;
}

FoldAssignment stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const Sample& s : data.samples) labels.push_back(s.label);
  return stratified_folds(labels, k, seed);
}

FoldAssignment stratified_folds(const std::vector<int>& labels, std::size_t k,
                                std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_folds: k must be >= 2");

  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] == 1 ? pos : neg).push_back(i);

  if (pos.size() < k)
    throw ValidationError("stratified_folds: positive class has " +
                          std::to_string(pos.size()) + " samples, fewer than k=" +
                          std::to_string(k));
  if (neg.size() < k)
    throw ValidationError("stratified_folds: negative class has " +
                          std::to_string(neg.size()) + " samples, fewer than k=" +
                          std::to_string(k));

  FoldAssignment fa;
  fa.num_folds = k;
  fa.assignment.resize(labels.size());

  Rng stream = Rng(seed).derive("folds");
  Rng pos_stream = stream.derive("positive");
  Rng neg_stream = stream.derive("negative");
  pos_stream.shuffle(pos);
  neg_stream.shuffle(neg);
  for (std::size_t i = 0; i < pos.size(); ++i) fa.assignment[pos[i]] = i % k;
  for (std::size_t i = 0; i < neg.size(); ++i) fa.assignment[neg[i]] = i % k;
  return fa;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t m,
                                                  std::uint64_t seed, std::size_t epoch) {
  return minibatches(n, m, Rng(seed).derive("shuffle").derive(epoch));
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t m, Rng stream) {
  if (m == 0) throw ValidationError("minibatches: batch size must be >= 1");
  std::vector<std::size_t> order = stream.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += m) {
    const std::size_t end = std::min(n, start + m);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace premir
