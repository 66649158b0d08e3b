#pragma once

#include "geninv/network.hpp"
#include "geninv/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace geninv {

// Portable weight format: a JSON manifest next to one raw binary per layer.
// Manifest fields (all required): dims, activation, activation_params,
// layers[], endianness ("little"), dtype ("f64le"). Binaries hold row-major
// 64-bit little-endian floats, rows*cols entries, no header.

GeneratorNetwork load_network(const std::filesystem::path& manifest_path);

void save_network(const GeneratorNetwork& net, const std::filesystem::path& manifest_path,
                  bool force = false);

/// iid N(0, 1/rows) weights per matrix so activations stay O(1) across widths.
GeneratorNetwork random_network(const std::vector<Index>& dims, const ActivationSpec& activation,
                                Rng& rng);

/// Whitespace-separated numbers; '#' starts a comment line.
Vec load_vector(const std::filesystem::path& path);
void save_vector(const Vec& v, const std::filesystem::path& path);

/// Whitespace-separated 0-based indices of OBSERVED coordinates.
IndexSet load_index_set(const std::filesystem::path& path);
void save_index_set(const IndexSet& s, const std::filesystem::path& path);

}  // namespace geninv
