#include "bype/tape.hpp"

#include <cmath>
#include <cstring>

#include "bype/kernels.hpp"

namespace bype {
namespace {
const kernels::Table& K() { return kernels::active(); }
} // namespace

int Tape::push(Tensor v, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(v), std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad(int id) {
    if (grads_[id].numel() == 0) grads_[id] = Tensor(nodes_[id].value.shape());
    return grads_[id];
}

int Tape::constant(Tensor v) { return push(std::move(v)); }

int Tape::param(const std::string& name, const Tensor& v) {
    const int id = push(v);
    params_.emplace_back(name, id);
    return id;
}

int Tape::matmul(int a, int b, bool ta, bool tb) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    const std::size_t m = ta ? A.cols() : A.rows();
    const std::size_t ka = ta ? A.rows() : A.cols();
    const std::size_t kb = tb ? B.cols() : B.rows();
    const std::size_t n = tb ? B.rows() : B.cols();
    if (ka != kb)
        throw DimensionError("matmul: inner extents differ, " + A.shape_str() +
                             (ta ? "^T" : "") + " * " + B.shape_str() +
                             (tb ? "^T" : ""));
    Tensor C({m, n});
    K().matmul(A.data(), B.data(), C.data(), m, n, ka, ta, tb, false);
    return push(std::move(C), [a, b, ta, tb, m, n, ka](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        const Tensor& B = t.val(b);
        // dA and dB in the physical layouts of a and b
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        if (!ta)
            K().matmul(g.data(), B.data(), ga.data(), m, ka, n, false, !tb, true);
        else
            K().matmul(B.data(), g.data(), ga.data(), ka, m, n, tb, true, true);
        if (!tb)
            K().matmul(A.data(), g.data(), gb.data(), ka, n, m, !ta, false, true);
        else
            K().matmul(g.data(), A.data(), gb.data(), n, ka, m, true, ta, true);
    });
}

int Tape::add(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
        throw DimensionError("add: shape mismatch " + A.shape_str() + " vs " +
                             B.shape_str());
    Tensor C = Tensor::zeros_like(A);
    K().add(A.data(), B.data(), C.data(), A.numel());
    return push(std::move(C), [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(1.0, g.data(), t.grad(a).data(), g.numel());
        K().axpy(1.0, g.data(), t.grad(b).data(), g.numel());
    });
}

int Tape::sub(int a, int b) { return add(a, scale(b, -1.0)); }

int Tape::mul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B))
        throw DimensionError("mul: shape mismatch " + A.shape_str() + " vs " +
                             B.shape_str());
    Tensor C = Tensor::zeros_like(A);
    K().mul(A.data(), B.data(), C.data(), A.numel());
    return push(std::move(C), [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        const Tensor& B = t.val(b);
        Tensor ta_buf = Tensor::zeros_like(g);
        K().mul(g.data(), B.data(), ta_buf.data(), g.numel());
        K().add(ta_buf.data(), t.grad(a).data(), t.grad(a).data(), g.numel());
        K().mul(g.data(), A.data(), ta_buf.data(), g.numel());
        K().add(ta_buf.data(), t.grad(b).data(), t.grad(b).data(), g.numel());
    });
}

int Tape::scale(int a, double s) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    K().scale(A.data(), s, C.data(), A.numel());
    return push(std::move(C), [a, s](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(s, g.data(), t.grad(a).data(), g.numel());
    });
}

int Tape::add_const(int a, double s) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = A[i] + s;
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(1.0, g.data(), t.grad(a).data(), g.numel());
    });
}

int Tape::add_rowvec(int a, int v) {
    const Tensor& A = val(a);
    const Tensor& V = val(v);
    if (V.numel() != A.cols())
        throw DimensionError("add_rowvec: vector length != column count");
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.rows(); ++i)
        K().add(A.row_ptr(i), V.data(), C.row_ptr(i), A.cols());
    return push(std::move(C), [a, v](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(1.0, g.data(), t.grad(a).data(), g.numel());
        Tensor& gv = t.grad(v);
        for (std::size_t i = 0; i < g.rows(); ++i)
            K().axpy(1.0, g.row_ptr(i), gv.data(), g.cols());
    });
}

int Tape::add_colvec(int a, int v) {
    const Tensor& A = val(a);
    const Tensor& V = val(v);
    if (V.numel() != A.rows())
        throw DimensionError("add_colvec: vector length != row count");
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.rows(); ++i) {
        const double s = V[i];
        for (std::size_t j = 0; j < A.cols(); ++j) C.at(i, j) = A.at(i, j) + s;
    }
    return push(std::move(C), [a, v](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(1.0, g.data(), t.grad(a).data(), g.numel());
        Tensor& gv = t.grad(v);
        for (std::size_t i = 0; i < g.rows(); ++i)
            gv[i] += K().sum(g.row_ptr(i), g.cols());
    });
}

int Tape::mul_scalar(int a, int s) {
    const Tensor& A = val(a);
    const Tensor& S = val(s);
    if (S.numel() != 1) throw DimensionError("mul_scalar: scalar node must be [1]");
    Tensor C = Tensor::zeros_like(A);
    K().scale(A.data(), S[0], C.data(), A.numel());
    return push(std::move(C), [a, s](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        const double sv = t.val(s)[0];
        K().axpy(sv, g.data(), t.grad(a).data(), g.numel());
        t.grad(s)[0] += K().dot(g.data(), A.data(), g.numel());
    });
}

int Tape::add_scalar(int a, int s) {
    const Tensor& A = val(a);
    const Tensor& S = val(s);
    if (S.numel() != 1) throw DimensionError("add_scalar: scalar node must be [1]");
    Tensor C = Tensor::zeros_like(A);
    const double sv = S[0];
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = A[i] + sv;
    return push(std::move(C), [a, s](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        K().axpy(1.0, g.data(), t.grad(a).data(), g.numel());
        t.grad(s)[0] += K().sum(g.data(), g.numel());
    });
}

int Tape::vexp(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = std::exp(A[i]);
    ensure_finite(C, "exp");
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& C = t.val(self);
        Tensor buf = Tensor::zeros_like(g);
        K().mul(g.data(), C.data(), buf.data(), g.numel());
        K().add(buf.data(), t.grad(a).data(), t.grad(a).data(), g.numel());
    });
}

int Tape::vlog(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = std::log(A[i]);
    ensure_finite(C, "log");
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] / A[i];
    });
}

int Tape::vtanh(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = std::tanh(A[i]);
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& C = t.val(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            ga[i] += g[i] * (1.0 - C[i] * C[i]);
    });
}

int Tape::vsigmoid(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    for (std::size_t i = 0; i < A.numel(); ++i)
        C[i] = 1.0 / (1.0 + std::exp(-A[i]));
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& C = t.val(self);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            ga[i] += g[i] * C[i] * (1.0 - C[i]);
    });
}

int Tape::vrelu(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    K().relu(A.data(), C.data(), A.numel());
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (A[i] > 0.0) ga[i] += g[i];
    });
}

int Tape::vsquare(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::zeros_like(A);
    K().square(A.data(), C.data(), A.numel());
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        const Tensor& A = t.val(a);
        Tensor buf = Tensor::zeros_like(g);
        K().mul(g.data(), A.data(), buf.data(), g.numel());
        K().axpy(2.0, buf.data(), t.grad(a).data(), g.numel());
    });
}

int Tape::sum(int a) {
    const Tensor& A = val(a);
    Tensor C = Tensor::scalar(K().sum(A.data(), A.numel()));
    return push(std::move(C), [a](Tape& t, int self) {
        const double g = t.grads_[self][0];
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
}

int Tape::mean(int a) {
    const Tensor& A = val(a);
    if (A.numel() == 0) throw DimensionError("mean of empty tensor");
    const double inv = 1.0 / static_cast<double>(A.numel());
    Tensor C = Tensor::scalar(K().sum(A.data(), A.numel()) * inv);
    return push(std::move(C), [a, inv](Tape& t, int self) {
        const double g = t.grads_[self][0] * inv;
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
}

int Tape::rowsum(int a) {
    const Tensor& A = val(a);
    Tensor C({A.rows()});
    for (std::size_t i = 0; i < A.rows(); ++i)
        C[i] = K().sum(A.row_ptr(i), A.cols());
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.rows(); ++i) {
            double* row = ga.row_ptr(i);
            const double gi = g[i];
            for (std::size_t j = 0; j < ga.cols(); ++j) row[j] += gi;
        }
    });
}

int Tape::colsum(int a) {
    const Tensor& A = val(a);
    Tensor C({A.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i)
        K().add(C.data(), A.row_ptr(i), C.data(), A.cols());
    return push(std::move(C), [a](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.rows(); ++i)
            K().axpy(1.0, g.data(), ga.row_ptr(i), ga.cols());
    });
}

int Tape::lse_rows(int a, Tensor weights) {
    const Tensor& A = val(a);
    const std::size_t r = A.rows(), c = A.cols();
    if (weights.numel() != c)
        throw DimensionError("lse_rows: weight length != column count");
    for (std::size_t j = 0; j < c; ++j)
        if (weights[j] < 0.0) throw DomainError("lse_rows: negative weight");
    // softmax-style responsibilities kept for the backward pass
    Tensor C({r});
    Tensor resp({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = A.row_ptr(i);
        double m = -HUGE_VAL;
        bool any_positive = false;
        for (std::size_t j = 0; j < c; ++j) {
            if (weights[j] <= 0.0) continue;
            any_positive = true;
            if (!std::isfinite(row[j]))
                throw NumericError("non-finite value in log_sum_exp input");
            if (row[j] > m) m = row[j];
        }
        if (!any_positive) throw DomainError("lse_rows: all weights are zero");
        double acc = 0.0;
        double* rrow = resp.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) {
            const double e = weights[j] > 0.0 ? weights[j] * std::exp(row[j] - m) : 0.0;
            rrow[j] = e;
            acc += e;
        }
        C[i] = m + std::log(acc);
        const double inv = 1.0 / acc;
        for (std::size_t j = 0; j < c; ++j) rrow[j] *= inv;
    }
    ensure_finite(C, "log_sum_exp");
    return push(std::move(C), [a, resp = std::move(resp)](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.rows(); ++i)
            K().axpy(g[i], resp.row_ptr(i), ga.row_ptr(i), ga.cols());
    });
}

int Tape::slice_rows(int a, std::size_t r0, std::size_t r1) {
    const Tensor& A = val(a);
    if (r0 > r1 || r1 > A.rows())
        throw DimensionError("slice_rows: range out of bounds");
    const std::size_t c = A.cols();
    Tensor C({r1 - r0, c});
    std::memcpy(C.data(), A.data() + r0 * c, (r1 - r0) * c * sizeof(double));
    return push(std::move(C), [a, r0](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        Tensor& ga = t.grad(a);
        K().axpy(1.0, g.data(), ga.data() + r0 * ga.cols(), g.numel());
    });
}

int Tape::concat_rows(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols() != B.cols())
        throw DimensionError("concat_rows: column counts differ");
    Tensor C({A.rows() + B.rows(), A.cols()});
    std::memcpy(C.data(), A.data(), A.numel() * sizeof(double));
    std::memcpy(C.data() + A.numel(), B.data(), B.numel() * sizeof(double));
    return push(std::move(C), [a, b](Tape& t, int self) {
        const Tensor& g = t.grads_[self];
        Tensor& ga = t.grad(a);
        Tensor& gb = t.grad(b);
        K().axpy(1.0, g.data(), ga.data(), ga.numel());
        K().axpy(1.0, g.data() + ga.numel(), gb.data(), gb.numel());
    });
}

GradMap Tape::backward(int root) {
    check(root);
    if (nodes_[root].value.numel() != 1)
        throw UsageError("backward: root must be a one-element node");
    grads_.assign(nodes_.size(), Tensor());
    grad(root)[0] = 1.0;
    for (int id = root; id >= 0; --id) {
        if (has_grad(id) && nodes_[id].back) nodes_[id].back(*this, id);
    }
    GradMap out;
    for (const auto& [name, id] : params_) {
        if (has_grad(id))
            out[name] = grads_[id];
        else
            out[name] = Tensor(nodes_[id].value.shape());
    }
    return out;
}

} // namespace bype
