#include "bype/sampling.hpp"

#include <cmath>

namespace bype::sampling {

GeneratedBatch generate(const model::VaeParams& p, const priors::PriorSpec& spec,
                        std::size_t n, Rng& rng, bool sample_observation) {
    GeneratedBatch out;
    out.latents = Tensor({n, p.spec.d_z});
    out.provenance.resize(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        auto [z, comp] = priors::sample_prior(spec, p, rng);
        for (std::size_t j = 0; j < z.numel(); ++j) out.latents.at(i, j) = z[j];
        if (comp.has_value())
            out.provenance[i] = static_cast<std::ptrdiff_t>(*comp);
    }
    out.samples = model::decode_mean(p, out.latents);
    if (sample_observation) {
        const double sd = std::sqrt(p.obs_var());
        for (std::size_t i = 0; i < out.samples.numel(); ++i)
            out.samples[i] += sd * rng.normal();
    }
    return out;
}

GeneratedBatch interpolate(const model::VaeParams& p, const Tensor& x_a,
                           const Tensor& x_b, std::size_t steps) {
    if (steps < 2) throw UsageError("interpolate: steps must be >= 2");
    const Tensor mu_a = model::encode(p, x_a).first;
    const Tensor mu_b = model::encode(p, x_b).first;
    GeneratedBatch out;
    out.latents = Tensor({steps, p.spec.d_z});
    out.provenance.resize(steps, -1);
    const double denom = static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < steps; ++i) {
        const double wa = static_cast<double>(steps - 1 - i);
        const double wb = static_cast<double>(i);
        for (std::size_t j = 0; j < p.spec.d_z; ++j)
            out.latents.at(i, j) = (wa * mu_a[j] + wb * mu_b[j]) / denom;
    }
    out.samples = model::decode_mean(p, out.latents);
    return out;
}

Way way_from_string(const std::string& s) {
    if (s == "posterior") return Way::Posterior;
    if (s == "prior") return Way::Prior;
    throw UsageError("unknown augmentation way: " + s);
}

GeneratedBatch synthesize_augmentation(const model::VaeParams& p, const Tensor& X,
                                       const std::vector<int>& labels, Way way,
                                       Rng& rng) {
    if (labels.size() != X.rows())
        throw UsageError("synthesize_augmentation: labels must match batch rows");
    const auto [mu, lv] = model::encode(p, X);
    const std::size_t n = X.rows();
    const std::size_t d_z = p.spec.d_z;
    GeneratedBatch out;
    out.latents = Tensor({n, d_z});
    const double prior_sd = std::sqrt(p.sigma2());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d_z; ++j) {
            const double sd = way == Way::Posterior
                                  ? std::exp(0.5 * lv.at(i, j))
                                  : prior_sd;
            out.latents.at(i, j) = mu.at(i, j) + sd * rng.normal();
        }
    }
    out.samples = model::decode_mean(p, out.latents);
    out.labels = labels;
    out.provenance.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.provenance[i] = static_cast<std::ptrdiff_t>(i);
    return out;
}

} // namespace bype::sampling
