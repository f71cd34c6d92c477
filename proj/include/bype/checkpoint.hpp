#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bype/tensor.hpp"

namespace bype::model {

// Flat self-describing parameter container. Layout, all little-endian:
//   magic "BYPE", u32 format version, then per-tensor records of
//   u32 name length, UTF-8 name, u32 rank, u64 extents, raw f64 data.
// Round-trips are bit-exact.

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& entries);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

} // namespace bype::model
