#include "premir/cache.hpp"

#include <fstream>
#include <sstream>

#include "premir/errors.hpp"
#include "premir/folding.hpp"

namespace premir {

namespace {

constexpr const char* kCacheHeader = "#premir-cache\t1";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

void save_cache(const std::filesystem::path& path,
                const std::vector<PreparedSample>& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cache file: " + path.string());
  out << kCacheHeader << '\n';
  out << "#id\tlabel\tk\tsequence\tstructure\tforward\tbackward_flipped\n";
  for (const PreparedSample& s : samples)
    out << s.id << '\t' << s.label << '\t' << s.split_index << '\t' << s.sequence << '\t'
        << s.structure << '\t' << s.forward << '\t' << s.backward_flipped << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<PreparedSample> load_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cache file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty cache file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCacheHeader)
    throw ValidationError("cache version mismatch in " + path.string() +
                          " (expected \"" + kCacheHeader + "\")");

  std::vector<PreparedSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 7)
      throw ValidationError("cache line " + std::to_string(line_no) + ": expected 7 fields, got " +
                            std::to_string(f.size()));
    PreparedSample s;
    s.id = f[0];
    try {
      s.label = std::stoi(f[1]);
      s.split_index = static_cast<std::size_t>(std::stoull(f[2]));
    } catch (const std::exception&) {
      throw ValidationError("cache line " + std::to_string(line_no) + ": bad numeric field");
    }
    s.sequence = f[3];
    s.structure = f[4];
    s.forward = f[5];
    s.backward_flipped = f[6];

    if (s.label != 0 && s.label != 1)
      throw ValidationError("cache line " + std::to_string(line_no) + ": label must be 0 or 1");
    parse_dotbracket(s.structure);  // revalidate
    if (s.structure.size() != s.sequence.size() ||
        s.forward.size() + s.backward_flipped.size() != s.structure.size() ||
        s.split_index != s.forward.size() + 1)
      throw ValidationError("cache line " + std::to_string(line_no) +
                            ": inconsistent split for sample \"" + s.id + "\"");
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw ValidationError("cache file has no samples: " + path.string());
  return samples;
}

}  // namespace premir
