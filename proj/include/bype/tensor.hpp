#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "bype/errors.hpp"

namespace bype {

// Dense row-major tensor of 64-bit floats. Immutable by convention once
// handed to another module; mutation happens only on freshly built values.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw DimensionError("Tensor: shape does not match data length");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor row(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }
    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }

    // 2-D helpers; a rank-1 tensor is treated as a single row.
    std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
    std::size_t cols() const {
        return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : numel());
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols(); }
    double* row_ptr(std::size_t i) { return data_.data() + i * cols(); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;
    bool all_finite() const;

  private:
    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto e : s) n *= e;
        return s.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Throws NumericError naming `what` when any entry is non-finite.
void ensure_finite(const Tensor& t, const std::string& what);
void ensure_finite(double v, const std::string& what);

// Plain tensor math on the active kernel backend (no gradient tracking).
Tensor matmul(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx);
Tensor tile_rows(const Tensor& row, std::size_t n);
double sum(const Tensor& a);
double mean(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
double sqdist(const Tensor& a, const Tensor& b);

// log sum_i w_i exp(v_i), max-subtracted; weights nonnegative, at least one
// strictly positive. Safe for |v_i| up to about 1e4.
double log_sum_exp(const Tensor& v, const Tensor& weights);
double log_sum_exp(const Tensor& v); // unit weights

} // namespace bype
