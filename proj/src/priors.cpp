#include "bype/priors.hpp"

#include <cmath>

namespace bype::priors {
namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Shared ByPE/Exemplar mixture body on the tape:
//   -d_z log(sqrt(2 pi) sigma) - log N + log sum_m w_m exp(-||z - mu_m||^2 / (2 sigma^2))
// with mu_m = mu_phi(points_m) evaluated through the coupled mean head.
int isotropic_mixture_rows(Tape& t, const model::TapedVae& v, int zrows,
                           int points, const Tensor& w, double n_mass) {
    const std::size_t d_z = v.spec.d_z;
    bool any_positive = false;
    for (std::size_t i = 0; i < w.numel(); ++i)
        if (w[i] > 0.0) any_positive = true;
    if (!any_positive) throw DomainError("mixture prior: all weights are zero");

    const int mu = model::encoder_mean_rows(t, v, points); // [M x d_z]
    const int cross = t.matmul(zrows, mu, false, true);    // [B x M]
    const int sq_z = t.rowsum(t.vsquare(zrows));           // [B]
    const int sq_mu = t.rowsum(t.vsquare(mu));             // [M]
    const int dist =
        t.add_colvec(t.add_rowvec(t.scale(cross, -2.0), sq_mu), sq_z);
    // -1/(2 sigma^2) as a node so gradients reach log_sigma2
    const int coef = t.scale(t.vexp(t.scale(v.log_sigma2, -1.0)), -0.5);
    const int arg = t.mul_scalar(dist, coef);
    const int lse = t.lse_rows(arg, w);
    const int logdet = t.scale(v.log_sigma2, -0.5 * static_cast<double>(d_z));
    return t.add_const(t.add_scalar(lse, logdet),
                       -0.5 * static_cast<double>(d_z) * kLog2Pi -
                           std::log(n_mass));
}

// Vamp: uniform mixture of full diagonal posteriors at the pseudo-inputs.
// The [B x K] quadratic form is assembled from matmuls so it stays batched:
//   sum_j (z_j - mu_kj)^2 / var_kj
//     = [z^2 inv_k^T] - 2 [z (mu inv)_k^T] + sum_j mu_kj^2 inv_kj
int vamp_rows(Tape& t, const model::TapedVae& v, int zrows, int pseudo) {
    const std::size_t d_z = v.spec.d_z;
    const std::size_t K = t.val(pseudo).rows();
    auto [mu, lv] = model::encoder_rows(t, v, pseudo); // [K x d_z] each
    const int inv = t.vexp(t.scale(lv, -1.0));
    const int a = t.matmul(t.vsquare(zrows), inv, false, true);      // [B x K]
    const int b = t.matmul(zrows, t.mul(mu, inv), false, true);      // [B x K]
    const int cc = t.rowsum(t.mul(t.vsquare(mu), inv));              // [K]
    const int ld = t.rowsum(lv);                                     // [K]
    const int quad = t.add_rowvec(t.add(a, t.scale(b, -2.0)), cc);
    const int inner = t.add_rowvec(quad, ld);
    const int logpdf = t.add_const(t.scale(inner, -0.5),
                                   -0.5 * static_cast<double>(d_z) * kLog2Pi);
    const int lse = t.lse_rows(logpdf, Tensor::full({K}, 1.0));
    return t.add_const(lse, -std::log(static_cast<double>(K)));
}
} // namespace

Kind kind_from_string(const std::string& s) {
    if (s == "gaussian") return Kind::StandardGaussian;
    if (s == "vamp") return Kind::Vamp;
    if (s == "exemplar") return Kind::Exemplar;
    if (s == "bype") return Kind::ByPE;
    throw UsageError("unknown prior kind: " + s);
}

std::string to_string(Kind k) {
    switch (k) {
    case Kind::StandardGaussian: return "gaussian";
    case Kind::Vamp: return "vamp";
    case Kind::Exemplar: return "exemplar";
    case Kind::ByPE: return "bype";
    }
    return "?";
}

PriorSpec PriorSpec::gaussian() { return PriorSpec{}; }

PriorSpec PriorSpec::vamp(Tensor pseudo_inputs, double n_mass) {
    PriorSpec s;
    s.kind = Kind::Vamp;
    s.pseudo_inputs = std::move(pseudo_inputs);
    s.n_mass = n_mass;
    return s;
}

PriorSpec PriorSpec::exemplar(Tensor X) {
    PriorSpec s;
    s.kind = Kind::Exemplar;
    s.n_mass = static_cast<double>(X.rows());
    s.exemplars = std::move(X);
    return s;
}

PriorSpec PriorSpec::bype(coreset::Pseudocoreset c) {
    PriorSpec s;
    s.kind = Kind::ByPE;
    s.n_mass = c.N;
    s.core = std::move(c);
    return s;
}

TapedPrior bind_prior(Tape& t, const PriorSpec& spec) {
    TapedPrior tp;
    if (spec.kind == Kind::Vamp)
        tp.vamp_pseudo = t.param("vamp.pseudo_inputs", spec.pseudo_inputs);
    return tp;
}

int log_prior_rows(Tape& t, const PriorSpec& spec, const TapedPrior& tp,
                   const model::TapedVae& v, int zrows) {
    switch (spec.kind) {
    case Kind::StandardGaussian: {
        const std::size_t d_z = v.spec.d_z;
        return t.add_const(t.scale(t.rowsum(t.vsquare(zrows)), -0.5),
                           -0.5 * static_cast<double>(d_z) * kLog2Pi);
    }
    case Kind::Vamp:
        return vamp_rows(t, v, zrows, tp.vamp_pseudo);
    case Kind::Exemplar:
        return isotropic_mixture_rows(t, v, zrows, t.constant(spec.exemplars),
                                      Tensor::full({spec.exemplars.rows()}, 1.0),
                                      spec.n_mass);
    case Kind::ByPE:
        return isotropic_mixture_rows(t, v, zrows, t.constant(spec.core.U),
                                      spec.core.w, spec.n_mass);
    }
    throw UsageError("log_prior_rows: bad prior kind");
}

double log_prior(const PriorSpec& spec, const model::VaeParams& p, const Tensor& z) {
    Tape t;
    const model::TapedVae v = model::bind(t, p);
    const TapedPrior tp = bind_prior(t, spec);
    const Tensor zr({1, z.numel()},
                    std::vector<double>(z.data(), z.data() + z.numel()));
    const int rows = log_prior_rows(t, spec, tp, v, t.constant(zr));
    const double r = t.val(rows)[0];
    ensure_finite(r, "log_prior");
    return r;
}

std::pair<Tensor, std::optional<std::size_t>> sample_prior(const PriorSpec& spec,
                                                           const model::VaeParams& p,
                                                           Rng& rng) {
    const std::size_t d_z = p.spec.d_z;
    switch (spec.kind) {
    case Kind::StandardGaussian: {
        Tensor z({d_z});
        for (std::size_t j = 0; j < d_z; ++j) z[j] = rng.normal();
        return {std::move(z), std::nullopt};
    }
    case Kind::Vamp: {
        const std::size_t K = spec.pseudo_inputs.rows();
        const std::size_t k = rng.index(K);
        const auto [mu, lv] = model::encode(
            p, Tensor({1, spec.pseudo_inputs.cols()},
                      std::vector<double>(spec.pseudo_inputs.row_ptr(k),
                                          spec.pseudo_inputs.row_ptr(k) +
                                              spec.pseudo_inputs.cols())));
        Tensor z({d_z});
        for (std::size_t j = 0; j < d_z; ++j)
            z[j] = mu[j] + std::exp(0.5 * lv[j]) * rng.normal();
        return {std::move(z), k};
    }
    case Kind::Exemplar: {
        const std::size_t N = spec.exemplars.rows();
        const std::size_t n = rng.index(N);
        const Tensor mu = model::prior_component_mean(
            p, Tensor({1, spec.exemplars.cols()},
                      std::vector<double>(spec.exemplars.row_ptr(n),
                                          spec.exemplars.row_ptr(n) +
                                              spec.exemplars.cols())));
        const double sd = std::sqrt(p.sigma2());
        Tensor z({d_z});
        for (std::size_t j = 0; j < d_z; ++j) z[j] = mu[j] + sd * rng.normal();
        return {std::move(z), n};
    }
    case Kind::ByPE: {
        auto [z, comp] = coreset::sample_coreset_mixture(p, spec.core, rng);
        return {std::move(z), comp};
    }
    }
    throw UsageError("sample_prior: bad prior kind");
}

} // namespace bype::priors
