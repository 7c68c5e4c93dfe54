#include "premir/prep.hpp"

#include <algorithm>

#include "premir/errors.hpp"

namespace premir {

std::vector<LoopSpan> find_hairpin_loops(const DotBracketStructure& s) {
  const std::string& t = s.symbols;
  std::vector<LoopSpan> loops;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i] != '.') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < t.size() && t[j + 1] == '.') ++j;
    // dot run [i, j], 0-based
    if (i > 0 && j + 1 < t.size() && t[i - 1] == '(' && t[j + 1] == ')')
      loops.push_back({i + 1, j + 1});  // report 1-based
    i = j + 1;
  }
  return loops;
}

std::size_t split_index(const DotBracketStructure& s) {
  const std::vector<LoopSpan> loops = find_hairpin_loops(s);
  if (loops.empty()) return s.size() / 2 + 1;
  return (loops.front().start + loops.back().end) / 2 + 1;
}

StructureSplit split_and_flip(const DotBracketStructure& s) {
  const std::size_t k = split_index(s);
  StructureSplit out;
  out.split_index = k;
  out.forward = s.symbols.substr(0, k - 1);
  out.backward_flipped = s.symbols.substr(k - 1);
  std::reverse(out.backward_flipped.begin(), out.backward_flipped.end());
  return out;
}

std::vector<PreparedSample> prepare_dataset(
    const Dataset& data, const std::map<std::string, DotBracketStructure>& structures) {
  std::vector<PreparedSample> out;
  out.reserve(data.size());
  for (const Sample& s : data.samples) {
    auto it = structures.find(s.id);
    if (it == structures.end())
      throw InternalError("prepare_dataset: no structure for sample \"" + s.id + "\"");
    if (it->second.size() != s.sequence.size())
      throw ValidationError("sample \"" + s.id + "\": structure length " +
                            std::to_string(it->second.size()) +
                            " does not match sequence length " +
                            std::to_string(s.sequence.size()));
    const StructureSplit split = split_and_flip(it->second);
    out.push_back({s.id, s.sequence.symbols, it->second.symbols, split.split_index,
                   split.forward, split.backward_flipped, s.label});
  }
  return out;
}

}  // namespace premir
