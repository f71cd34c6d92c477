#pragma once

#include <string>

#include "bype/tensor.hpp"

namespace bype::io {

// Binary portable graymap (P5, maxval 255). Each row of `samples` is one
// img_rows x img_cols tile; tiles are laid out row-major, grid_cols wide,
// values clamped to [0,1] then scaled.
void write_pgm_grid(const std::string& path, const Tensor& samples,
                    std::size_t img_rows, std::size_t img_cols,
                    std::size_t grid_cols);

} // namespace bype::io
