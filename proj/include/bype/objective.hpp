#pragma once

#include "bype/priors.hpp"

namespace bype::objective {

// Two-term ELBO decomposition of a single reparameterized sample.
// total == recon - beta * kl_term holds by construction.
struct ElboBreakdown {
    double recon = 0;   // E_q[log p(x|z)] estimate
    double kl_term = 0; // E_q[log q(z|x) - log p(z)] estimate, same z
    double beta = 1;    // annealing coefficient in [0,1]
    double total = 0;
};

// Single-sample reparameterized ELBO. x is one point [d] or a batch
// [B x d] (batch terms are means over rows); eps matches with [d_z] or
// [B x d_z]. Gradients flow to theta and phi (and Vamp pseudo-inputs) but
// not to the coreset: U and w enter as constants.
ElboBreakdown elbo(const model::VaeParams& p, const priors::PriorSpec& spec,
                   const Tensor& x, const Tensor& eps, double beta);

// Same, also returning d(total)/d(param) for every registered parameter.
ElboBreakdown elbo_with_grads(const model::VaeParams& p,
                              const priors::PriorSpec& spec, const Tensor& x,
                              const Tensor& eps, double beta, GradMap& grads);

// -[log(1/K) + log sum_k exp(log p(x|z_k) + log p(z_k) - log q(z_k|x))]
double iwae_nll(const model::VaeParams& p, const priors::PriorSpec& spec,
                const Tensor& x, std::size_t K, Rng& rng);
// Deterministic variant with injected noise rows [K x d_z]; IWAE-1 with the
// same eps equals -elbo(...).total bit for bit.
double iwae_nll_with(const model::VaeParams& p, const priors::PriorSpec& spec,
                     const Tensor& x, const Tensor& eps_rows);

// Linear warmup: min(1, epoch / warmup_epochs).
double kl_annealing_schedule(std::size_t epoch, std::size_t warmup_epochs);

// Dataset-average single-sample estimate of E_q[log q(z|x) - log p(z)].
double kl_loss_diagnostic(const model::VaeParams& p, const priors::PriorSpec& spec,
                          const Tensor& X, Rng& rng);

} // namespace bype::objective
