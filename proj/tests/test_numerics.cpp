#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bype/rng.hpp"
#include "bype/tape.hpp"
#include "bype/tensor.hpp"
#include "oracles.hpp"

using bype::Tensor;
using bype::Tape;

TEST_CASE("matmul identity and arithmetic") {
    const Tensor I({2, 2}, {1, 0, 0, 1});
    const Tensor v({2, 1}, {3, 4});
    const Tensor r = bype::matmul(I, v);
    CHECK(r[0] == 3);
    CHECK(r[1] == 4);
    const Tensor a({1, 2}, {1, 2});
    const Tensor b({2, 1}, {3, 4});
    CHECK(bype::matmul(a, b)[0] == 11);
}

TEST_CASE("matmul 5x7 * 7x3 against the triple-loop oracle") {
    bype::Rng rng(3);
    Tensor A({5, 7});
    Tensor B({7, 3});
    for (std::size_t i = 0; i < A.numel(); ++i) A[i] = 2.0 * rng.uniform() - 1.0;
    for (std::size_t i = 0; i < B.numel(); ++i) B[i] = 2.0 * rng.uniform() - 1.0;
    const Tensor got = bype::matmul(A, B);
    const Tensor want = oracles::matmul_ref(A, B);
    for (std::size_t i = 0; i < got.numel(); ++i)
        CHECK(std::fabs(got[i] - want[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch raises a dimension error") {
    const Tensor A({2, 3});
    const Tensor B({2, 3});
    CHECK_THROWS_AS((void)bype::matmul(A, B), bype::DimensionError);
}

TEST_CASE("log_sum_exp basics") {
    CHECK(bype::log_sum_exp(Tensor::row({0.0}), Tensor::row({1.0})) == 0.0);
    const double r =
        bype::log_sum_exp(Tensor::row({1000.0, 1000.0}), Tensor::row({1.0, 1.0}));
    CHECK(r == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
    // stays finite across the stated input range
    CHECK(std::isfinite(bype::log_sum_exp(Tensor::row({1e4, -1e4}),
                                          Tensor::row({1.0, 1.0}))));
    CHECK_THROWS_AS(
        (void)bype::log_sum_exp(Tensor::row({1.0}), Tensor::row({0.0})),
        bype::DomainError);
    CHECK_THROWS_AS(
        (void)bype::log_sum_exp(Tensor::row({1.0}), Tensor::row({-1.0})),
        bype::DomainError);
}

TEST_CASE("log_sum_exp random case vs extended-precision oracle") {
    bype::Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(6), w(6);
        for (auto& x : v) x = 200.0 * (rng.uniform() - 0.5);
        for (auto& x : w) x = rng.uniform() + 0.01;
        const double got = bype::log_sum_exp(Tensor::row(std::vector<double>(v)),
                                             Tensor::row(std::vector<double>(w)));
        CHECK(std::fabs(got - oracles::lse_ref(v, w)) < 1e-10);
    }
}

TEST_CASE("log_sum_exp shift invariance property") {
    bype::Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(5), w(5);
        for (auto& x : v) x = 8.0 * (rng.uniform() - 0.5);
        for (auto& x : w) x = rng.uniform();
        w[rng.index(5)] += 0.1; // keep at least one weight positive
        const double c = 40.0 * (rng.uniform() - 0.5);
        std::vector<double> vc = v;
        for (auto& x : vc) x += c;
        const double a = bype::log_sum_exp(Tensor::row(std::move(vc)),
                                           Tensor::row(std::vector<double>(w)));
        const double b = bype::log_sum_exp(Tensor::row(std::vector<double>(v)),
                                           Tensor::row(std::vector<double>(w)));
        CHECK(std::fabs(a - (b + c)) < 1e-10);
    }
}

TEST_CASE("backward of identity and square") {
    Tape t;
    const int x = t.param("x", Tensor::scalar(3.0));
    CHECK(t.backward(x).at("x")[0] == 1.0);

    Tape t2;
    const int y = t2.param("x", Tensor::scalar(3.0));
    const int sq = t2.vsquare(y);
    CHECK(t2.backward(sq).at("x")[0] == 6.0);
}

TEST_CASE("backward: parameter absent from the computation gets zeros") {
    Tape t;
    const int x = t.param("x", Tensor::scalar(2.0));
    const int unused = t.param("unused", Tensor({3}));
    (void)unused;
    const int y = t.vsquare(x);
    const auto g = t.backward(y);
    REQUIRE(g.count("unused") == 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(g.at("unused")[i] == 0.0);
}

TEST_CASE("backward rejects roots that are not on the tape") {
    Tape t;
    (void)t.param("x", Tensor::scalar(1.0));
    CHECK_THROWS_AS((void)t.backward(17), bype::UsageError);
    const int mat = t.constant(Tensor({2, 2}));
    CHECK_THROWS_AS((void)t.backward(mat), bype::UsageError); // non-scalar root
}

TEST_CASE("backward is additive in the objective") {
    bype::Rng rng(6);
    Tensor x0({4});
    for (std::size_t i = 0; i < 4; ++i) x0[i] = 2.0 * rng.uniform() - 1.0;

    auto grad_of = [&x0](int which) {
        Tape t;
        const int x = t.param("x", x0);
        const int f = t.sum(t.vsquare(x));          // f = sum x^2
        const int g = t.sum(t.vtanh(x));            // g = sum tanh x
        const int both = t.add(f, g);
        return t.backward(which == 0 ? f : which == 1 ? g : both).at("x");
    };
    const Tensor gf = grad_of(0), gg = grad_of(1), gboth = grad_of(2);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::fabs(gboth[i] - (gf[i] + gg[i])) < 1e-10);
}

TEST_CASE("two-layer MLP gradient matches central finite differences") {
    bype::Rng rng(7);
    Tensor W1({5, 3}), b1({5}), W2({1, 5}), b2({1}), x({1, 3});
    for (auto* t : {&W1, &b1, &W2, &b2, &x})
        for (std::size_t i = 0; i < t->numel(); ++i)
            (*t)[i] = 2.0 * (2.0 * rng.uniform() - 1.0);

    auto value = [&]() {
        Tape t;
        const int xi = t.constant(x);
        const int h = t.vtanh(t.add_rowvec(t.matmul(xi, t.constant(W1), false, true),
                                           t.constant(b1)));
        const int o = t.add_rowvec(t.matmul(h, t.constant(W2), false, true),
                                   t.constant(b2));
        return t.val(t.sum(o))[0];
    };
    Tape t;
    const int w1 = t.param("W1", W1), bb1 = t.param("b1", b1);
    const int w2 = t.param("W2", W2), bb2 = t.param("b2", b2);
    const int xi = t.constant(x);
    const int h = t.vtanh(t.add_rowvec(t.matmul(xi, w1, false, true), bb1));
    const int o = t.add_rowvec(t.matmul(h, w2, false, true), bb2);
    const auto grads = t.backward(t.sum(o));

    for (auto& [name, tensor] : std::map<std::string, Tensor*>{
             {"W1", &W1}, {"b1", &b1}, {"W2", &W2}, {"b2", &b2}}) {
        const Tensor fd = oracles::finite_diff(*tensor, value);
        const Tensor& an = grads.at(name);
        for (std::size_t i = 0; i < fd.numel(); ++i)
            CHECK(oracles::grad_close(an[i], fd[i], 1e-4));
    }
}

TEST_CASE("every primitive passes a finite-difference spot check") {
    bype::Rng rng(8);
    Tensor A({3, 4}), B({3, 4}), V({4}), U({3}), S({1});
    for (auto* t : {&A, &B})
        for (std::size_t i = 0; i < t->numel(); ++i)
            (*t)[i] = 0.5 + rng.uniform(); // keep log/linear domains safe
    for (std::size_t i = 0; i < 4; ++i) V[i] = 2.0 * rng.uniform() - 1.0;
    for (std::size_t i = 0; i < 3; ++i) U[i] = 2.0 * rng.uniform() - 1.0;
    S[0] = 0.7;

    struct Case {
        const char* name;
        std::function<int(Tape&, int, int, int, int, int)> build;
    };
    // builders receive node ids (a, b, v, u, s)
    const std::vector<Case> cases = {
        {"matmul_nn", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.matmul(a, t.matmul(b, a, true, false)));
         }},
        {"matmul_nt", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.matmul(a, b, false, true));
         }},
        {"matmul_tn", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.matmul(a, b, true, false));
         }},
        {"matmul_tt", [](Tape& t, int a, int, int, int u, int) {
             return t.sum(t.matmul(a, u, true, true)); // [4x3] * [3x1]
         }},
        {"add", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.add(a, b));
         }},
        {"sub_mul", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.mul(t.sub(a, b), a));
         }},
        {"rowvec_colvec", [](Tape& t, int a, int, int v, int u, int) {
             return t.sum(t.add_colvec(t.add_rowvec(a, v), u));
         }},
        {"exp_log", [](Tape& t, int a, int, int, int, int) {
             return t.sum(t.vlog(t.vexp(a)));
         }},
        {"tanh_sigmoid", [](Tape& t, int a, int, int, int, int) {
             return t.sum(t.vsigmoid(t.vtanh(a)));
         }},
        {"relu", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.vrelu(t.sub(a, b)));
         }},
        {"square_mean", [](Tape& t, int a, int, int, int, int) {
             return t.mean(t.vsquare(a));
         }},
        {"rowsum_colsum", [](Tape& t, int a, int, int, int, int) {
             return t.add(t.sum(t.rowsum(a)), t.mean(t.colsum(a)));
         }},
        {"lse_rows", [](Tape& t, int a, int, int, int, int) {
             return t.sum(t.lse_rows(a, Tensor::row({0.5, 1.0, 0.0, 2.0})));
         }},
        {"mul_add_scalar", [](Tape& t, int a, int, int, int, int s) {
             return t.sum(t.add_scalar(t.mul_scalar(a, s), s));
         }},
        {"slice_concat", [](Tape& t, int a, int b, int, int, int) {
             return t.sum(t.concat_rows(t.slice_rows(a, 0, 2), b));
         }},
    };

    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto value = [&]() {
            Tape t;
            const int a = t.constant(A), b = t.constant(B), v = t.constant(V),
                      u = t.constant(U), s = t.constant(S);
            return t.val(c.build(t, a, b, v, u, s))[0];
        };
        Tape t;
        const int a = t.param("A", A), b = t.param("B", B), v = t.param("V", V),
                  u = t.param("U", U), s = t.param("S", S);
        const auto grads = t.backward(c.build(t, a, b, v, u, s));
        for (auto& [name, tensor] : std::map<std::string, Tensor*>{
                 {"A", &A}, {"B", &B}, {"V", &V}, {"U", &U}, {"S", &S}}) {
            const Tensor fd = oracles::finite_diff(*tensor, value);
            const Tensor& an = grads.at(name);
            for (std::size_t i = 0; i < fd.numel(); ++i)
                CHECK(oracles::grad_close(an[i], fd[i], 1e-4));
        }
    }
}

TEST_CASE("non-finite intermediates raise numeric errors") {
    Tape t;
    const int x = t.constant(Tensor::row({1.0e300}));
    CHECK_THROWS_AS((void)t.vexp(t.vsquare(x)), bype::NumericError);
    const int neg = t.constant(Tensor::row({-1.0}));
    CHECK_THROWS_AS((void)t.vlog(neg), bype::NumericError);
}
