#pragma once

#include <filesystem>
#include <vector>

#include "premir/prep.hpp"

namespace premir {

// Versioned preprocessing cache: folding plus split/flip runs once per
// corpus, training reloads byte-identical inputs. Tab-separated text, one
// sample per row, refused on any version mismatch.
void save_cache(const std::filesystem::path& path,
                const std::vector<PreparedSample>& samples);
std::vector<PreparedSample> load_cache(const std::filesystem::path& path);

}  // namespace premir
