#pragma once

#include <filesystem>

#include "caasr/tensor.hpp"

namespace caasr {

// Binary checkpoint: magic "CRECKPT1", then per tensor (sorted by name):
// u64 name length, UTF-8 name bytes, u64 rank, u64 dims, float64 row-major
// values. All integers and floats little-endian. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);

// Appends every stored tensor into params (which must not already contain
// them). Throws DataError on bad magic or truncation.
void load_checkpoint(const std::filesystem::path& path, ParamStore& params);

}  // namespace caasr
