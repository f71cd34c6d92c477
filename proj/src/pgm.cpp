#include "bype/pgm.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace bype::io {

void write_pgm_grid(const std::string& path, const Tensor& samples,
                    std::size_t img_rows, std::size_t img_cols,
                    std::size_t grid_cols) {
    const std::size_t n = samples.rows();
    if (img_rows * img_cols != samples.cols())
        throw DimensionError("write_pgm_grid: tile extent != sample width");
    if (grid_cols == 0) throw UsageError("write_pgm_grid: grid_cols must be > 0");
    const std::size_t grid_rows = (n + grid_cols - 1) / grid_cols;
    const std::size_t W = grid_cols * img_cols;
    const std::size_t H = grid_rows * img_rows;
    std::vector<unsigned char> pix(W * H, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t tr = i / grid_cols, tc = i % grid_cols;
        for (std::size_t r = 0; r < img_rows; ++r) {
            for (std::size_t c = 0; c < img_cols; ++c) {
                double v = samples.at(i, r * img_cols + c);
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                pix[(tr * img_rows + r) * W + tc * img_cols + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot write PGM: " + path);
    os << "P5\n" << W << " " << H << "\n255\n";
    os.write(reinterpret_cast<const char*>(pix.data()),
             static_cast<std::streamsize>(pix.size()));
}

} // namespace bype::io
