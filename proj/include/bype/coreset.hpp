#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "bype/model.hpp"
#include "bype/rng.hpp"
#include "bype/tensor.hpp"

namespace bype::coreset {

// M weighted pseudodata points standing in for a dataset of N points.
// Weights stay nonnegative under every update; the trainer's centering step
// keeps mean(w) at N/M. U is unconstrained in R^d.
struct Pseudocoreset {
    Tensor U;   // [M x d]
    Tensor w;   // [M], nonnegative
    double N = 0; // dataset size the total mass refers to

    std::size_t M() const { return w.numel(); }
    std::size_t d() const { return U.cols(); }
};

struct CoresetGradEstimate {
    Tensor grad_w; // [M]
    Tensor grad_U; // [M x d]
    std::size_t S = 0;
    std::size_t B = 0;
};

// A model the coreset optimizer can run against: a latent sampler from the
// current coreset approximation plus the potential log p(x|z) and its
// gradient in the data argument. bind(z) amortizes per-latent work (one
// decoder forward serves every batch point and pseudopoint).
struct CoresetModel {
    struct Bound {
        std::function<double(const double* x)> loglik;
        std::function<void(const double* u, double* out)> grad_loglik;
    };
    std::size_t d = 0;
    std::function<Tensor(Rng&)> draw_z;
    std::function<Bound(const Tensor& z)> bind;
};

// Uniform-without-replacement subsample with weights N/M.
Pseudocoreset init_coreset(const Tensor& X, std::size_t M, Rng& rng);

// Stochastic KL gradients from S latent samples and a minibatch. Centered
// score estimator; S must be at least 2. The injected-sample overload is the
// deterministic seam used by the estimator tests.
CoresetGradEstimate estimate_coreset_gradients(const CoresetModel& model,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::size_t S, Rng& rng);
CoresetGradEstimate estimate_coreset_gradients(const CoresetModel& model,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::span<const Tensor> zs);
// Convenience overload bound to a trained VAE (theta, phi frozen).
CoresetGradEstimate estimate_coreset_gradients(const model::VaeParams& p,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::size_t S, Rng& rng);

// Projected step: w <- max(w - step*grad_w, 0), U <- U - step*grad_U.
Pseudocoreset apply_coreset_update(const Pseudocoreset& c,
                                   const CoresetGradEstimate& g, double step);

// Shift every weight so mean(w) = N/M, then clamp at zero. When clamping
// fires the total mass is no longer exactly N; *clamped reports that.
Pseudocoreset center_weights(const Pseudocoreset& c, bool* clamped = nullptr);

// Mixture sampler over the coreset: component ~ w/sum(w), then
// z ~ N(mu_phi(u_m), sigma^2 I). Component index returned for provenance.
std::pair<Tensor, std::size_t> sample_coreset_mixture(const model::VaeParams& p,
                                                      const Pseudocoreset& c,
                                                      Rng& rng);
CoresetModel vae_coreset_model(const model::VaeParams& p, const Pseudocoreset& c);

// Conjugate Gaussian test model: standard-normal latent prior and identity
// unit-variance likelihood, so both the full-data and coreset posteriors are
// isotropic Gaussians in closed form.
struct ConjugateOracle {
    Tensor X; // [N x d], data living in latent space
};

double exact_gaussian_kl(const ConjugateOracle& o, const Pseudocoreset& c);
CoresetModel conjugate_model(const ConjugateOracle& o, const Pseudocoreset& c);

} // namespace bype::coreset
