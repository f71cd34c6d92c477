#include "bype/data.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

namespace bype::data {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void check_in_unit_range(const Tensor& X, const std::string& name) {
    for (std::size_t i = 0; i < X.numel(); ++i)
        if (!(X[i] >= 0.0 && X[i] <= 1.0))
            throw FormatError("dataset " + name + " has entries outside [0,1]");
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto bytes = read_all(images_path);
    if (bytes.size() < 16)
        throw FormatError("truncated IDX header in " + images_path + ": expected 16 bytes, got " +
                          std::to_string(bytes.size()));
    if (be32(bytes, 0) != kImageMagic)
        throw FormatError("bad IDX image magic in " + images_path);
    const std::size_t n = be32(bytes, 4);
    const std::size_t rows = be32(bytes, 8);
    const std::size_t cols = be32(bytes, 12);
    const std::size_t want = 16 + n * rows * cols;
    if (bytes.size() != want)
        throw FormatError("truncated IDX image file " + images_path + ": expected " +
                          std::to_string(want) + " bytes, got " +
                          std::to_string(bytes.size()));
    Dataset ds;
    ds.name = images_path;
    ds.img_rows = rows;
    ds.img_cols = cols;
    ds.X = Tensor({n, rows * cols});
    for (std::size_t i = 0; i < n * rows * cols; ++i)
        ds.X[i] = static_cast<double>(bytes[16 + i]) / 255.0;

    if (!labels_path.empty()) {
        const auto lb = read_all(labels_path);
        if (lb.size() < 8)
            throw FormatError("truncated IDX label header in " + labels_path);
        if (be32(lb, 0) != kLabelMagic)
            throw FormatError("bad IDX label magic in " + labels_path);
        const std::size_t ln = be32(lb, 4);
        if (ln != n)
            throw FormatError("IDX count mismatch: " + std::to_string(n) +
                              " images vs " + std::to_string(ln) + " labels");
        if (lb.size() != 8 + ln)
            throw FormatError("truncated IDX label file " + labels_path + ": expected " +
                              std::to_string(8 + ln) + " bytes, got " +
                              std::to_string(lb.size()));
        ds.labels.assign(lb.begin() + 8, lb.end());
    }
    check_in_unit_range(ds.X, ds.name);
    return ds;
}

Dataset load_cifar(const std::vector<std::string>& batch_paths) {
    constexpr std::size_t kRecord = 1 + 3072;
    Dataset ds;
    ds.name = "cifar";
    ds.img_rows = 32;
    ds.img_cols = 32; // three channel planes are kept flattened
    std::vector<double> pixels;
    for (const auto& path : batch_paths) {
        const auto bytes = read_all(path);
        if (bytes.empty() || bytes.size() % kRecord != 0)
            throw FormatError("CIFAR batch " + path + " is not a multiple of " +
                              std::to_string(kRecord) + " bytes (got " +
                              std::to_string(bytes.size()) + ")");
        const std::size_t n = bytes.size() / kRecord;
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char* rec = bytes.data() + i * kRecord;
            ds.labels.push_back(rec[0]);
            for (std::size_t j = 0; j < 3072; ++j)
                pixels.push_back(static_cast<double>(rec[1 + j]) / 255.0);
        }
    }
    const std::size_t n = ds.labels.size();
    ds.X = Tensor({n, 3072}, std::move(pixels));
    check_in_unit_range(ds.X, ds.name);
    return ds;
}

Dataset make_pinwheel(std::size_t classes, std::size_t per_class, double noise,
                      Rng& rng) {
    if (classes == 0 || per_class == 0)
        throw UsageError("make_pinwheel: counts must be positive");
    const std::size_t n = classes * per_class;
    Dataset ds;
    ds.name = "pinwheel";
    ds.X = Tensor({n, 2});
    ds.labels.resize(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const double base =
            2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
        for (std::size_t i = 0; i < per_class; ++i, ++row) {
            const double t = rng.uniform();
            const double r = kPinwheelR0 + (kPinwheelR1 - kPinwheelR0) * t +
                             noise * kPinwheelRadialNoise * rng.normal();
            const double a = base + kPinwheelRate * t +
                             noise * kPinwheelAngularNoise * rng.normal();
            double x = 0.5 + 0.5 * r * std::cos(a);
            double y = 0.5 + 0.5 * r * std::sin(a);
            x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
            y = y < 0.0 ? 0.0 : (y > 1.0 ? 1.0 : y);
            ds.X.at(row, 0) = x;
            ds.X.at(row, 1) = y;
            ds.labels[row] = static_cast<int>(c);
        }
    }
    return ds;
}

namespace {
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.name = ds.name;
    out.img_rows = ds.img_rows;
    out.img_cols = ds.img_cols;
    out.X = gather_rows(ds.X, idx);
    if (ds.labeled()) {
        out.labels.reserve(idx.size());
        for (auto i : idx) out.labels.push_back(ds.labels[i]);
    }
    return out;
}
} // namespace

Splits split(const Dataset& ds, const std::array<double, 3>& fractions,
             std::uint64_t seed) {
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw UsageError("split: negative fraction");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw UsageError("split: fractions must sum to 1");
    const std::size_t n = ds.N();
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    const auto n1 = static_cast<std::size_t>(std::lround(fractions[0] * static_cast<double>(n)));
    const auto n2 = static_cast<std::size_t>(std::lround(fractions[1] * static_cast<double>(n)));
    if (n1 + n2 > n) throw UsageError("split: rounding exceeded dataset size");
    std::vector<std::size_t> a(perm.begin(), perm.begin() + n1);
    std::vector<std::size_t> b(perm.begin() + n1, perm.begin() + n1 + n2);
    std::vector<std::size_t> c(perm.begin() + n1 + n2, perm.end());
    return {subset(ds, a), subset(ds, b), subset(ds, c)};
}

Dataset take(const Dataset& ds, std::size_t limit) {
    if (limit == 0 || limit >= ds.N()) return ds;
    std::vector<std::size_t> idx(limit);
    for (std::size_t i = 0; i < limit; ++i) idx[i] = i;
    return subset(ds, idx);
}

} // namespace bype::data
