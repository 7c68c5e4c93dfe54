#include "premir/folding.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "premir/errors.hpp"

namespace premir {

std::size_t PairTable::pair_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < partner.size(); ++i)
    if (partner[i] >= 0 && static_cast<std::size_t>(partner[i]) > i) ++n;
  return n;
}

DotBracketStructure parse_dotbracket(const std::string& text) {
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (--depth < 0)
        throw ValidationError("unbalanced ')' at position " + std::to_string(i));
    } else if (c != '.') {
      throw ValidationError("invalid structure character '" + std::string(1, c) +
                            "' at position " + std::to_string(i));
    }
  }
  if (depth != 0)
    throw ValidationError("unbalanced structure: " + std::to_string(depth) +
                          " unclosed '(' at end of string");
  return {text};
}

bool can_pair(char a, char b) {
  return (a == 'A' && b == 'U') || (a == 'U' && b == 'A') ||
         (a == 'G' && b == 'C') || (a == 'C' && b == 'G') ||
         (a == 'G' && b == 'U') || (a == 'U' && b == 'G');
}

DotBracketStructure nussinov_fold(const NucleotideSequence& seq, int min_loop) {
  if (min_loop < 0) throw ValidationError("nussinov_fold: min_loop must be >= 0");
  const std::string& s = seq.symbols;
  const std::size_t n = s.size();
  if (n == 0) throw ValidationError("nussinov_fold: empty sequence");

  const std::size_t min_span = static_cast<std::size_t>(min_loop) + 2;
  std::vector<std::vector<int>> dp(n, std::vector<int>(n, 0));

  for (std::size_t len = min_span; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len - 1;
      int best = dp[i][j - 1];  // j unpaired
      for (std::size_t k = i; k + min_span <= j + 1; ++k) {
        if (!can_pair(s[k], s[j])) continue;
        const int left = (k > i) ? dp[i][k - 1] : 0;
        const int inner = dp[k + 1][j - 1];
        best = std::max(best, left + 1 + inner);
      }
      dp[i][j] = best;
    }
  }

  std::string structure(n, '.');
  // Traceback, fixed tie order: prefer unpaired j, then partners k ascending.
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  stack.emplace_back(0, n - 1);
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    if (j < i || j - i + 1 < min_span) continue;
    if (dp[i][j] == dp[i][j - 1]) {
      stack.emplace_back(i, j - 1);
      continue;
    }
    for (std::size_t k = i; k + min_span <= j + 1; ++k) {
      if (!can_pair(s[k], s[j])) continue;
      const int left = (k > i) ? dp[i][k - 1] : 0;
      if (left + 1 + dp[k + 1][j - 1] != dp[i][j]) continue;
      structure[k] = '(';
      structure[j] = ')';
      if (k > i) stack.emplace_back(i, k - 1);
      stack.emplace_back(k + 1, j - 1);
      break;
    }
  }
  return {structure};
}

PairTable to_pair_table(const DotBracketStructure& s) {
  PairTable t;
  t.partner.assign(s.size(), -1);
  std::vector<int> open;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s.symbols[i];
    if (c == '(') {
      open.push_back(static_cast<int>(i));
    } else if (c == ')') {
      if (open.empty()) throw InternalError("to_pair_table: unbalanced structure");
      t.partner[i] = open.back();
      t.partner[open.back()] = static_cast<int>(i);
      open.pop_back();
    }
  }
  if (!open.empty()) throw InternalError("to_pair_table: unbalanced structure");
  return t;
}

DotBracketStructure from_pair_table(const PairTable& t) {
  std::string s(t.size(), '.');
  for (std::size_t i = 0; i < t.size(); ++i) {
    const int p = t.partner[i];
    if (p < 0) continue;
    if (static_cast<std::size_t>(p) > i)
      s[i] = '(';
    else
      s[i] = ')';
  }
  return parse_dotbracket(s);
}

namespace {

void warn(std::vector<std::string>* sink, const std::string& msg) {
  if (sink)
    sink->push_back(msg);
  else
    std::cerr << "warning: " << msg << '\n';
}

std::string structure_token(const std::string& line) {
  // Structure is the leading whitespace-free token; anything after the first
  // whitespace is the RNAfold energy annotation, e.g. "(((...))) (-23.40)".
  const std::size_t ws = line.find_first_of(" \t");
  return ws == std::string::npos ? line : line.substr(0, ws);
}

}  // namespace

std::map<std::string, DotBracketStructure> load_vienna(
    const std::filesystem::path& path, const Dataset& data, int min_loop,
    std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open structure file: " + path.string());

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.size(); ++i) index[data.samples[i].id] = i;

  std::map<std::string, DotBracketStructure> out;

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }

  for (std::size_t i = 0; i < lines.size();) {
    if (lines[i][0] != '>')
      throw ValidationError("expected '>' header in " + path.string() + ", got: " + lines[i]);
    std::size_t end = lines[i].find_first_of(" \t", 1);
    const std::string id = lines[i].substr(1, end == std::string::npos ? end : end - 1);
    if (i + 2 >= lines.size())
      throw ValidationError("truncated record for \"" + id + "\" in " + path.string());
    const std::string structure_text = structure_token(lines[i + 2]);
    i += 3;

    auto it = index.find(id);
    if (it == index.end()) {
      warn(warnings, "structure file entry \"" + id + "\" matches no sample; ignored");
      continue;
    }
    DotBracketStructure st;
    try {
      st = parse_dotbracket(structure_text);
    } catch (const ValidationError& e) {
      throw ValidationError("sample \"" + id + "\": " + e.what());
    }
    const std::size_t want = data.samples[it->second].sequence.size();
    if (st.size() != want)
      throw ValidationError("sample \"" + id + "\": structure length " +
                            std::to_string(st.size()) + " does not match sequence length " +
                            std::to_string(want));
    if (out.count(id))
      warn(warnings, "duplicate structure for \"" + id + "\"; keeping the last one");
    out[id] = std::move(st);
  }

  for (const Sample& s : data.samples)
    if (!out.count(s.id)) out[s.id] = nussinov_fold(s.sequence, min_loop);
  return out;
}

std::map<std::string, DotBracketStructure> fold_dataset(const Dataset& data, int min_loop) {
  std::map<std::string, DotBracketStructure> out;
  for (const Sample& s : data.samples) out[s.id] = nussinov_fold(s.sequence, min_loop);
  return out;
}

}  // namespace premir
