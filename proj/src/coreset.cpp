#include "bype/coreset.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "bype/kernels.hpp"

namespace bype::coreset {
namespace {
const kernels::Table& K() { return kernels::active(); }
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
} // namespace

Pseudocoreset init_coreset(const Tensor& X, std::size_t M, Rng& rng) {
    const std::size_t N = X.rows();
    if (M == 0 || M > N)
        throw UsageError("init_coreset: need 1 <= M <= N, got M=" +
                         std::to_string(M) + ", N=" + std::to_string(N));
    Pseudocoreset c;
    c.U = gather_rows(X, rng.sample_without_replacement(N, M));
    c.w = Tensor::full({M}, static_cast<double>(N) / static_cast<double>(M));
    c.N = static_cast<double>(N);
    return c;
}

CoresetGradEstimate estimate_coreset_gradients(const CoresetModel& model,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::span<const Tensor> zs) {
    const std::size_t S = zs.size();
    const std::size_t B = batch.rows();
    const std::size_t M = c.M();
    const std::size_t d = c.d();
    if (S < 2)
        throw UsageError("estimate_coreset_gradients: centered estimator needs S >= 2");
    if (B == 0) throw UsageError("estimate_coreset_gradients: empty minibatch");
    if (batch.cols() != d)
        throw DimensionError("estimate_coreset_gradients: batch width != coreset d");

    // Raw potentials and potential gradients per latent sample.
    Tensor L({S, B});   // log p(x_b | z_s)
    Tensor Lt({S, M});  // log p(u_m | z_s)
    std::vector<Tensor> H(S, Tensor({M, d}));
    for (std::size_t s = 0; s < S; ++s) {
        const auto bound = model.bind(zs[s]);
        for (std::size_t b = 0; b < B; ++b) L.at(s, b) = bound.loglik(batch.row_ptr(b));
        for (std::size_t m = 0; m < M; ++m) {
            Lt.at(s, m) = bound.loglik(c.U.row_ptr(m));
            bound.grad_loglik(c.U.row_ptr(m), H[s].row_ptr(m));
        }
        ensure_finite(L, "coreset batch log-likelihood");
        ensure_finite(Lt, "coreset pseudopoint log-likelihood");
    }

    // Center across samples.
    const double invS = 1.0 / static_cast<double>(S);
    auto center_columns = [&](Tensor& A) {
        for (std::size_t j = 0; j < A.cols(); ++j) {
            double m = 0.0;
            for (std::size_t s = 0; s < S; ++s) m += A.at(s, j);
            m *= invS;
            for (std::size_t s = 0; s < S; ++s) A.at(s, j) -= m;
        }
    };
    center_columns(L);
    center_columns(Lt);
    Tensor Hmean({M, d});
    for (std::size_t s = 0; s < S; ++s)
        K().axpy(invS, H[s].data(), Hmean.data(), M * d);
    for (std::size_t s = 0; s < S; ++s)
        K().axpy(-1.0, Hmean.data(), H[s].data(), M * d);

    // Sample covariance between the pseudopoint scores and the residual
    // (N/B) g_s^T 1 - g~_s^T w, Bessel-normalized so the estimator is
    // unbiased under exact posterior sampling.
    const double nb = c.N / static_cast<double>(B);
    Tensor acc_w({M});
    Tensor acc_U({M, d});
    for (std::size_t s = 0; s < S; ++s) {
        const double r = nb * K().sum(L.row_ptr(s), B) - K().dot(Lt.row_ptr(s), c.w.data(), M);
        K().axpy(r, Lt.row_ptr(s), acc_w.data(), M);
        K().axpy(r, H[s].data(), acc_U.data(), M * d);
    }
    const double norm = -1.0 / static_cast<double>(S - 1);

    CoresetGradEstimate est;
    est.S = S;
    est.B = B;
    est.grad_w = scale(acc_w, norm);
    est.grad_U = Tensor({M, d});
    for (std::size_t m = 0; m < M; ++m)
        K().scale(acc_U.row_ptr(m), norm * c.w[m], est.grad_U.row_ptr(m), d);
    ensure_finite(est.grad_w, "coreset weight gradient");
    ensure_finite(est.grad_U, "coreset pseudopoint gradient");
    return est;
}

CoresetGradEstimate estimate_coreset_gradients(const CoresetModel& model,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::size_t S, Rng& rng) {
    if (S < 2)
        throw UsageError("estimate_coreset_gradients: centered estimator needs S >= 2");
    std::vector<Tensor> zs;
    zs.reserve(S);
    for (std::size_t s = 0; s < S; ++s) zs.push_back(model.draw_z(rng));
    return estimate_coreset_gradients(model, c, batch, std::span<const Tensor>(zs));
}

CoresetGradEstimate estimate_coreset_gradients(const model::VaeParams& p,
                                               const Pseudocoreset& c,
                                               const Tensor& batch,
                                               std::size_t S, Rng& rng) {
    return estimate_coreset_gradients(vae_coreset_model(p, c), c, batch, S, rng);
}

Pseudocoreset apply_coreset_update(const Pseudocoreset& c,
                                   const CoresetGradEstimate& g, double step) {
    if (!(step > 0.0)) throw UsageError("apply_coreset_update: step must be > 0");
    if (g.grad_w.numel() != c.M() || !g.grad_U.same_shape(c.U))
        throw DimensionError("apply_coreset_update: gradient shapes do not match");
    Pseudocoreset out;
    out.N = c.N;
    out.w = Tensor({c.M()});
    for (std::size_t m = 0; m < c.M(); ++m) {
        const double v = c.w[m] - step * g.grad_w[m];
        out.w[m] = v > 0.0 ? v : 0.0;
    }
    out.U = Tensor::zeros_like(c.U);
    K().scale(g.grad_U.data(), -step, out.U.data(), c.U.numel());
    K().add(out.U.data(), c.U.data(), out.U.data(), c.U.numel());
    ensure_finite(out.U, "updated pseudopoints");
    return out;
}

Pseudocoreset center_weights(const Pseudocoreset& c, bool* clamped) {
    Pseudocoreset out = c;
    const double target = c.N / static_cast<double>(c.M());
    const double shift = target - mean(c.w);
    bool any_clamped = false;
    for (std::size_t m = 0; m < c.M(); ++m) {
        const double v = c.w[m] + shift;
        if (v < 0.0) {
            any_clamped = true;
            out.w[m] = 0.0;
        } else {
            out.w[m] = v;
        }
    }
    if (clamped != nullptr) *clamped = any_clamped;
    return out;
}

std::pair<Tensor, std::size_t> sample_coreset_mixture(const model::VaeParams& p,
                                                      const Pseudocoreset& c,
                                                      Rng& rng) {
    const double total = sum(c.w);
    if (!(total > 0.0))
        throw DomainError("coreset mixture: all weights are zero");
    const double u = rng.uniform() * total;
    std::size_t comp = c.M() - 1;
    double acc = 0.0;
    for (std::size_t m = 0; m < c.M(); ++m) {
        acc += c.w[m];
        if (u < acc) {
            comp = m;
            break;
        }
    }
    const Tensor mu = model::prior_component_mean(p, Tensor({1, c.d()},
        std::vector<double>(c.U.row_ptr(comp), c.U.row_ptr(comp) + c.d())));
    const double sd = std::sqrt(p.sigma2());
    Tensor z({mu.numel()});
    for (std::size_t j = 0; j < z.numel(); ++j) z[j] = mu[j] + sd * rng.normal();
    return {std::move(z), comp};
}

CoresetModel vae_coreset_model(const model::VaeParams& p, const Pseudocoreset& c) {
    // phi is frozen during a coreset step, so the component means can be
    // computed once.
    auto mu_U = std::make_shared<Tensor>(model::prior_component_mean(p, c.U));
    auto params = std::make_shared<model::VaeParams>(p);
    auto weights = std::make_shared<Tensor>(c.w);
    const double sd = std::sqrt(p.sigma2());
    const std::size_t d = p.spec.d;
    const std::size_t d_z = p.spec.d_z;

    CoresetModel m;
    m.d = d;
    m.draw_z = [mu_U, weights, sd, d_z](Rng& rng) {
        const double total = sum(*weights);
        if (!(total > 0.0)) throw DomainError("coreset mixture: all weights are zero");
        const double u = rng.uniform() * total;
        std::size_t comp = weights->numel() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights->numel(); ++i) {
            acc += (*weights)[i];
            if (u < acc) {
                comp = i;
                break;
            }
        }
        Tensor z({d_z});
        const double* mu = mu_U->row_ptr(comp);
        for (std::size_t j = 0; j < d_z; ++j) z[j] = mu[j] + sd * rng.normal();
        return z;
    };
    m.bind = [params, d](const Tensor& z) {
        auto mean = std::make_shared<Tensor>(model::decode_mean(*params, z));
        const double inv_var = 1.0 / params->obs_var();
        const double norm = -0.5 * static_cast<double>(d) *
                            (kLog2Pi + params->dec_logvar[0]);
        CoresetModel::Bound b;
        b.loglik = [mean, inv_var, norm, d](const double* x) {
            return -0.5 * inv_var * K().sqdiff(x, mean->data(), d) + norm;
        };
        b.grad_loglik = [mean, inv_var, d](const double* u, double* out) {
            // d/du of -||u - mean||^2 / (2 sigma_x^2)
            K().sub(mean->data(), u, out, d);
            K().scale(out, inv_var, out, d);
        };
        return b;
    };
    return m;
}

namespace {
struct IsoGaussian {
    Tensor mean;
    double var;
};

IsoGaussian weighted_posterior(const Tensor& pts, const Tensor& w) {
    const std::size_t d = pts.cols();
    double total = 0.0;
    Tensor m({d});
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        const double wi = w[i];
        total += wi;
        K().axpy(wi, pts.row_ptr(i), m.data(), d);
    }
    const double prec = 1.0 + total;
    return {scale(m, 1.0 / prec), 1.0 / prec};
}
} // namespace

double exact_gaussian_kl(const ConjugateOracle& o, const Pseudocoreset& c) {
    const std::size_t d = o.X.cols();
    if (c.d() != d)
        throw DimensionError("exact_gaussian_kl: dimension mismatch");
    const IsoGaussian pc = weighted_posterior(c.U, c.w);
    const IsoGaussian pf =
        weighted_posterior(o.X, Tensor::full({o.X.rows()}, 1.0));
    const double dd = static_cast<double>(d);
    const double ratio = pc.var / pf.var;
    const double md = sqdist(pf.mean, pc.mean);
    return 0.5 * (dd * ratio + md / pf.var - dd + dd * std::log(1.0 / ratio));
}

CoresetModel conjugate_model(const ConjugateOracle& o, const Pseudocoreset& c) {
    const IsoGaussian post = weighted_posterior(c.U, c.w);
    auto mean = std::make_shared<Tensor>(post.mean);
    const double sd = std::sqrt(post.var);
    const std::size_t d = o.X.cols();

    CoresetModel m;
    m.d = d;
    m.draw_z = [mean, sd, d](Rng& rng) {
        Tensor z({d});
        for (std::size_t j = 0; j < d; ++j) z[j] = (*mean)[j] + sd * rng.normal();
        return z;
    };
    m.bind = [d](const Tensor& z) {
        auto zz = std::make_shared<Tensor>(z);
        CoresetModel::Bound b;
        b.loglik = [zz, d](const double* x) {
            return -0.5 * K().sqdiff(x, zz->data(), d);
        };
        b.grad_loglik = [zz, d](const double* u, double* out) {
            K().sub(zz->data(), u, out, d);
        };
        return b;
    };
    return m;
}

} // namespace bype::coreset
