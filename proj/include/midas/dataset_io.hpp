#pragma once

#include <cstdint>
#include <string>

#include "midas/types.hpp"

namespace midas {

// JSON Lines: one manifest line, then one trial object per line. Canonical
// key order and construction-time quantization make save/load/save
// byte-stable.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// FNV-1a over a canonical string; used for config hashes in provenance
uint64_t fnv1a(const std::string& s);

std::string hash_hex(uint64_t h);

}  // namespace midas
