#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bype/sampling.hpp"
#include "oracles.hpp"

using namespace bype;
using model::VaeParams;
using priors::PriorSpec;

namespace {

VaeParams tiny_vae(std::uint64_t seed) {
    model::VaeSpec s;
    s.d = 4;
    s.d_z = 2;
    s.hidden = 8;
    s.n_hidden = 2;
    Rng rng(seed);
    return VaeParams::init(s, rng);
}

PriorSpec bype_prior(std::uint64_t seed, std::size_t M, std::vector<double> w) {
    Rng rng(seed);
    coreset::Pseudocoreset c;
    c.U = Tensor({M, 4});
    for (std::size_t i = 0; i < c.U.numel(); ++i) c.U[i] = rng.uniform();
    double total = 0.0;
    for (double v : w) total += v;
    c.w = Tensor::row(std::move(w));
    c.N = total;
    return PriorSpec::bype(c);
}

} // namespace

TEST_CASE("weight concentrated on one pseudopoint fixes the provenance") {
    const VaeParams p = tiny_vae(1);
    const PriorSpec spec = bype_prior(2, 3, {0.0, 5.0, 0.0});
    Rng rng(3);
    const auto batch = sampling::generate(p, spec, 100, rng);
    for (auto prov : batch.provenance) CHECK(prov == 1);
}

TEST_CASE("tiny sigma clusters latents at the component mean") {
    VaeParams p = tiny_vae(4);
    p.set_sigma2(1e-8);
    const PriorSpec spec = bype_prior(5, 1, {7.0});
    const Tensor mu = model::prior_component_mean(p, spec.core.U);
    Rng rng(6);
    const auto batch = sampling::generate(p, spec, 50, rng);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::fabs(batch.latents.at(i, j) - mu.at(0, j)) < 1e-3);
}

TEST_CASE("generation frequencies follow the weights") {
    const VaeParams p = tiny_vae(7);
    const PriorSpec spec = bype_prior(8, 3, {1.0, 1.0, 2.0});
    Rng rng(9);
    const auto batch = sampling::generate(p, spec, 40000, rng);
    std::size_t counts[3] = {0, 0, 0};
    for (auto prov : batch.provenance) ++counts[prov];
    const double want[3] = {0.25, 0.25, 0.5};
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(std::fabs(counts[i] / 40000.0 - want[i]) < 0.01);
}

TEST_CASE("generation is deterministic and provenance-complete") {
    const VaeParams p = tiny_vae(10);
    const PriorSpec spec = bype_prior(11, 4, {1.0, 2.0, 3.0, 4.0});
    Rng a(12), b(12);
    const auto ba = sampling::generate(p, spec, 64, a);
    const auto bb = sampling::generate(p, spec, 64, b);
    for (std::size_t i = 0; i < ba.samples.numel(); ++i)
        CHECK(ba.samples[i] == bb.samples[i]);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(ba.provenance[i] == bb.provenance[i]);
        CHECK(ba.provenance[i] >= 0);
        CHECK(ba.provenance[i] < 4);
    }
    // sigmoid head keeps samples strictly inside (0,1)
    for (std::size_t i = 0; i < ba.samples.numel(); ++i) {
        CHECK(ba.samples[i] > 0.0);
        CHECK(ba.samples[i] < 1.0);
    }
}

TEST_CASE("gaussian prior samples carry no provenance") {
    const VaeParams p = tiny_vae(13);
    Rng rng(14);
    const auto batch = sampling::generate(p, PriorSpec::gaussian(), 8, rng);
    for (auto prov : batch.provenance) CHECK(prov == -1);
}

TEST_CASE("interpolation endpoints and spacing") {
    const VaeParams p = tiny_vae(15);
    const Tensor xa = Tensor::row({0.1, 0.7, 0.3, 0.9});
    const Tensor xb = Tensor::row({0.8, 0.2, 0.6, 0.4});
    const auto batch = sampling::interpolate(p, xa, xb, 5);
    REQUIRE(batch.samples.rows() == 5);

    const Tensor da = model::decode_mean(p, model::encode(p, xa).first);
    const Tensor db = model::decode_mean(p, model::encode(p, xb).first);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(batch.samples.at(0, j) == da[j]);
        CHECK(batch.samples.at(4, j) == db[j]);
    }
    // midpoint latent is exactly the average of the endpoint means
    const Tensor ma = model::encode(p, xa).first;
    const Tensor mb = model::encode(p, xb).first;
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(batch.latents.at(2, j) == (ma[j] + mb[j]) / 2.0);
    // consecutive differences agree to 1e-12
    for (std::size_t i = 0; i + 2 < 5; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::fabs((batch.latents.at(i + 1, j) - batch.latents.at(i, j)) -
                            (batch.latents.at(i + 2, j) -
                             batch.latents.at(i + 1, j))) < 1e-12);
    CHECK_THROWS_AS((void)sampling::interpolate(p, xa, xb, 1), bype::UsageError);
}

TEST_CASE("augmentation synthesis carries labels and degenerates to reconstruction") {
    VaeParams p = tiny_vae(16);
    Rng xr(17);
    Tensor X({6, 4});
    for (std::size_t i = 0; i < X.numel(); ++i) X[i] = xr.uniform();
    const std::vector<int> labels = {0, 1, 1, 0, 2, 1};

    Rng rng(18);
    const auto batch =
        sampling::synthesize_augmentation(p, X, labels, sampling::Way::Posterior, rng);
    CHECK(batch.labels == labels);

    // sigma^2 -> 0 and posterior logvar -> -inf: synthesis equals encode-decode
    p.set_sigma2(1e-300);
    for (std::size_t i = 0; i < p.enc_logvar.W.numel(); ++i) p.enc_logvar.W[i] = 0;
    p.enc_logvar.b = Tensor::row({-600.0, -600.0});
    for (auto way : {sampling::Way::Posterior, sampling::Way::Prior}) {
        Rng r2(19);
        const auto degenerate = sampling::synthesize_augmentation(p, X, labels, way, r2);
        const Tensor recon = model::decode_mean(p, model::encode(p, X).first);
        for (std::size_t i = 0; i < recon.numel(); ++i)
            CHECK(degenerate.samples[i] == doctest::Approx(recon[i]).epsilon(1e-12));
    }
}

TEST_CASE("prior-way latent variance matches sigma^2") {
    VaeParams p = tiny_vae(20);
    p.set_sigma2(0.09);
    Tensor X({1, 4}, {0.2, 0.4, 0.6, 0.8});
    const std::vector<int> labels = {0};
    Rng rng(21);
    std::vector<double> z0;
    for (int rep = 0; rep < 10000; ++rep) {
        const auto b =
            sampling::synthesize_augmentation(p, X, labels, sampling::Way::Prior, rng);
        z0.push_back(b.latents.at(0, 0));
    }
    const auto ms = oracles::mean_std(z0);
    CHECK(std::fabs(ms.sd * ms.sd - 0.09) < 0.05 * 0.09);
}
