#pragma once

#include <array>
#include <string>
#include <vector>

#include "bype/rng.hpp"
#include "bype/tensor.hpp"

namespace bype::data {

// A loaded dataset: rows in [0,1]^d plus optional integer labels.
struct Dataset {
    Tensor X; // [N x d]
    std::vector<int> labels;
    std::string name;
    std::size_t img_rows = 0; // image extent when rows are flattened images
    std::size_t img_cols = 0;

    std::size_t N() const { return X.rows(); }
    std::size_t d() const { return X.cols(); }
    bool labeled() const { return !labels.empty(); }
};

struct Splits {
    Dataset train, val, test;
};

// IDX (big-endian) ingestion; pixels scaled by 1/255. Label path optional.
Dataset load_idx(const std::string& images_path, const std::string& labels_path = "");

// CIFAR binary batches: records of one label byte + 3072 channel-planar
// bytes, scaled by 1/255, flattened without grayscale conversion.
Dataset load_cifar(const std::vector<std::string>& batch_paths);

// Parametric arm geometry of the synthetic pinwheel, shared with tests.
inline constexpr double kPinwheelR0 = 0.3;
inline constexpr double kPinwheelR1 = 0.9;
inline constexpr double kPinwheelRate = 3.0;
inline constexpr double kPinwheelRadialNoise = 0.05;
inline constexpr double kPinwheelAngularNoise = 0.15;

// 2-D spiral-arm mixture rescaled into [0,1]^2, labels = arm index. With
// noise = 0 every point lies exactly on its arm's parametric curve.
Dataset make_pinwheel(std::size_t classes, std::size_t per_class, double noise,
                      Rng& rng);

// Deterministic shuffled partition; fractions must sum to 1.
Splits split(const Dataset& ds, const std::array<double, 3>& fractions,
             std::uint64_t seed);

Dataset take(const Dataset& ds, std::size_t limit); // first `limit` rows

} // namespace bype::data
