#include "bype/objective.hpp"

#include <cmath>

namespace bype::objective {
namespace {

Tensor as_rows(const Tensor& x) {
    if (x.rank() == 2) return x;
    return Tensor({1, x.numel()},
                  std::vector<double>(x.data(), x.data() + x.numel()));
}

struct ElboGraph {
    Tape tape;
    int recon = -1, kl = -1, total = -1;
};

// Shared ELBO assembly; the IWAE path reuses the same row builders so that
// IWAE-1 and the ELBO agree bit for bit for shared noise.
void build_rows(Tape& t, const model::TapedVae& v, const priors::PriorSpec& spec,
                const priors::TapedPrior& tp, int xconst, int mu, int lv,
                const Tensor& eps, int& recon_rows, int& kl_rows) {
    const int z = model::reparam_rows(t, mu, lv, eps);
    recon_rows = model::decoder_loglik_rows(t, v, xconst, z);
    const int logq = model::gaussian_logpdf_rows(t, z, mu, lv);
    const int logp = priors::log_prior_rows(t, spec, tp, v, z);
    kl_rows = t.sub(logq, logp);
}

ElboGraph build_elbo(const model::VaeParams& p, const priors::PriorSpec& spec,
                     const Tensor& x, const Tensor& eps, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw UsageError("elbo: beta must be in [0,1]");
    ElboGraph g;
    const Tensor X = as_rows(x);
    const Tensor E = as_rows(eps);
    if (X.rows() != E.rows())
        throw DimensionError("elbo: x and eps row counts differ");
    const model::TapedVae v = model::bind(g.tape, p);
    const priors::TapedPrior tp = priors::bind_prior(g.tape, spec);
    const int xconst = g.tape.constant(X);
    auto [mu, lv] = model::encoder_rows(g.tape, v, xconst);
    int recon_rows = -1, kl_rows = -1;
    build_rows(g.tape, v, spec, tp, xconst, mu, lv, E, recon_rows, kl_rows);
    g.recon = g.tape.mean(recon_rows);
    g.kl = g.tape.mean(kl_rows);
    g.total = g.tape.sub(g.recon, g.tape.scale(g.kl, beta));
    return g;
}

ElboBreakdown breakdown_of(const ElboGraph& g, double beta) {
    ElboBreakdown b;
    b.recon = g.tape.val(g.recon)[0];
    b.kl_term = g.tape.val(g.kl)[0];
    b.beta = beta;
    b.total = g.tape.val(g.total)[0];
    ensure_finite(b.recon, "elbo reconstruction term");
    ensure_finite(b.kl_term, "elbo kl term");
    return b;
}

} // namespace

ElboBreakdown elbo(const model::VaeParams& p, const priors::PriorSpec& spec,
                   const Tensor& x, const Tensor& eps, double beta) {
    const ElboGraph g = build_elbo(p, spec, x, eps, beta);
    return breakdown_of(g, beta);
}

ElboBreakdown elbo_with_grads(const model::VaeParams& p,
                              const priors::PriorSpec& spec, const Tensor& x,
                              const Tensor& eps, double beta, GradMap& grads) {
    ElboGraph g = build_elbo(p, spec, x, eps, beta);
    grads = g.tape.backward(g.total);
    for (const auto& [name, t] : grads) ensure_finite(t, "gradient of " + name);
    return breakdown_of(g, beta);
}

double iwae_nll_with(const model::VaeParams& p, const priors::PriorSpec& spec,
                     const Tensor& x, const Tensor& eps_rows) {
    const Tensor E = as_rows(eps_rows);
    const std::size_t K = E.rows();
    if (K < 1) throw UsageError("iwae_nll: K must be at least 1");
    Tape t;
    const model::TapedVae v = model::bind(t, p);
    const priors::TapedPrior tp = priors::bind_prior(t, spec);
    const Tensor xrow = as_rows(x);
    if (xrow.rows() != 1) throw DimensionError("iwae_nll: x must be one point");
    auto [mu1, lv1] = model::encoder_rows(t, v, t.constant(xrow));
    // tile the posterior parameters across the K samples
    const int ones = t.constant(Tensor::full({K, 1}, 1.0));
    const int mu = t.matmul(ones, mu1);
    const int lv = t.matmul(ones, lv1);
    const int xk =
        t.constant(tile_rows(Tensor({xrow.cols()},
                                    std::vector<double>(xrow.data(),
                                                        xrow.data() + xrow.cols())),
                             K));
    int recon_rows = -1, kl_rows = -1;
    build_rows(t, v, spec, tp, xk, mu, lv, E, recon_rows, kl_rows);
    const int logw = t.sub(recon_rows, kl_rows);
    const double l = log_sum_exp(t.val(logw));
    const double nll = -(std::log(1.0 / static_cast<double>(K)) + l);
    ensure_finite(nll, "iwae_nll");
    return nll;
}

double iwae_nll(const model::VaeParams& p, const priors::PriorSpec& spec,
                const Tensor& x, std::size_t K, Rng& rng) {
    if (K < 1) throw UsageError("iwae_nll: K must be at least 1");
    Tensor eps({K, p.spec.d_z});
    for (std::size_t i = 0; i < eps.numel(); ++i) eps[i] = rng.normal();
    return iwae_nll_with(p, spec, x, eps);
}

double kl_annealing_schedule(std::size_t epoch, std::size_t warmup_epochs) {
    if (warmup_epochs < 1)
        throw UsageError("kl_annealing_schedule: warmup_epochs must be >= 1");
    const double b =
        static_cast<double>(epoch) / static_cast<double>(warmup_epochs);
    return b < 1.0 ? b : 1.0;
}

double kl_loss_diagnostic(const model::VaeParams& p, const priors::PriorSpec& spec,
                          const Tensor& X, Rng& rng) {
    const Tensor rows = as_rows(X);
    if (rows.rows() == 0) throw UsageError("kl_loss_diagnostic: empty dataset");
    Tensor eps({rows.rows(), p.spec.d_z});
    for (std::size_t i = 0; i < eps.numel(); ++i) eps[i] = rng.normal();
    Tape t;
    const model::TapedVae v = model::bind(t, p);
    const priors::TapedPrior tp = priors::bind_prior(t, spec);
    const int xconst = t.constant(rows);
    auto [mu, lv] = model::encoder_rows(t, v, xconst);
    const int z = model::reparam_rows(t, mu, lv, eps);
    const int logq = model::gaussian_logpdf_rows(t, z, mu, lv);
    const int logp = priors::log_prior_rows(t, spec, tp, v, z);
    const int kl = t.mean(t.sub(logq, logp));
    const double r = t.val(kl)[0];
    ensure_finite(r, "kl_loss_diagnostic");
    return r;
}

} // namespace bype::objective
