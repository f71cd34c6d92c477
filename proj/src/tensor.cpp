#include "bype/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "bype/kernels.hpp"

namespace bype {

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i)
        os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void ensure_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite())
        throw NumericError("non-finite value in " + what);
}

void ensure_finite(double v, const std::string& what) {
    if (!std::isfinite(v))
        throw NumericError("non-finite value in " + what);
}

namespace {
const kernels::Table& K() { return kernels::active(); }

void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             a.shape_str() + " vs " + b.shape_str());
}
} // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
    const std::size_t m = ta ? a.cols() : a.rows();
    const std::size_t ka = ta ? a.rows() : a.cols();
    const std::size_t kb = tb ? b.cols() : b.rows();
    const std::size_t n = tb ? b.rows() : b.cols();
    if (ka != kb)
        throw DimensionError("matmul: inner extents differ, " + a.shape_str() +
                             (ta ? "^T" : "") + " * " + b.shape_str() +
                             (tb ? "^T" : ""));
    Tensor c({m, n});
    K().matmul(a.data(), b.data(), c.data(), m, n, ka, ta, tb, false);
    return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same(a, b, "add");
    Tensor c = Tensor::zeros_like(a);
    K().add(a.data(), b.data(), c.data(), a.numel());
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same(a, b, "sub");
    Tensor c = Tensor::zeros_like(a);
    K().sub(a.data(), b.data(), c.data(), a.numel());
    return c;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same(a, b, "mul");
    Tensor c = Tensor::zeros_like(a);
    K().mul(a.data(), b.data(), c.data(), a.numel());
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c = Tensor::zeros_like(a);
    K().scale(a.data(), s, c.data(), a.numel());
    return c;
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > a.rows())
        throw DimensionError("slice_rows: range out of bounds");
    const std::size_t c = a.cols();
    Tensor out({r1 - r0, c});
    std::memcpy(out.data(), a.data() + r0 * c, (r1 - r0) * c * sizeof(double));
    return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols())
        throw DimensionError("concat_rows: column counts differ");
    Tensor out({a.rows() + b.rows(), a.cols()});
    std::memcpy(out.data(), a.data(), a.numel() * sizeof(double));
    std::memcpy(out.data() + a.numel(), b.data(), b.numel() * sizeof(double));
    return out;
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx) {
    const std::size_t c = a.cols();
    Tensor out({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= a.rows()) throw DimensionError("gather_rows: index out of range");
        std::memcpy(out.row_ptr(i), a.row_ptr(idx[i]), c * sizeof(double));
    }
    return out;
}

Tensor tile_rows(const Tensor& row, std::size_t n) {
    const std::size_t c = row.numel();
    Tensor out({n, c});
    for (std::size_t i = 0; i < n; ++i)
        std::memcpy(out.row_ptr(i), row.data(), c * sizeof(double));
    return out;
}

double sum(const Tensor& a) { return K().sum(a.data(), a.numel()); }

double mean(const Tensor& a) {
    if (a.numel() == 0) throw DimensionError("mean of empty tensor");
    return K().sum(a.data(), a.numel()) / static_cast<double>(a.numel());
}

double dot(const Tensor& a, const Tensor& b) {
    check_same(a, b, "dot");
    return K().dot(a.data(), b.data(), a.numel());
}

double sqdist(const Tensor& a, const Tensor& b) {
    check_same(a, b, "sqdist");
    return K().sqdiff(a.data(), b.data(), a.numel());
}

double log_sum_exp(const Tensor& v, const Tensor& weights) {
    check_same(v, weights, "log_sum_exp");
    if (v.numel() == 0) throw DimensionError("log_sum_exp of empty tensor");
    double m = -HUGE_VAL;
    bool any_positive = false;
    for (std::size_t i = 0; i < v.numel(); ++i) {
        if (weights[i] < 0.0)
            throw DomainError("log_sum_exp: negative weight");
        if (weights[i] == 0.0) continue;
        any_positive = true;
        if (!std::isfinite(v[i]))
            throw NumericError("non-finite value in log_sum_exp input");
        if (v[i] > m) m = v[i];
    }
    if (!any_positive)
        throw DomainError("log_sum_exp: all weights are zero");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i)
        if (weights[i] > 0.0) acc += weights[i] * std::exp(v[i] - m);
    return m + std::log(acc);
}

double log_sum_exp(const Tensor& v) {
    if (v.numel() == 0) throw DimensionError("log_sum_exp of empty tensor");
    const double m = kernels::active().maxv(v.data(), v.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) acc += std::exp(v[i] - m);
    return m + std::log(acc);
}

} // namespace bype
