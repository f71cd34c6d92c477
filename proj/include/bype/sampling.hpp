#pragma once

#include "bype/priors.hpp"

namespace bype::sampling {

// Decoded means plus the latent and ancestry of every row.
struct GeneratedBatch {
    Tensor samples;                         // [n x d]
    Tensor latents;                         // [n x d_z]
    std::vector<std::ptrdiff_t> provenance; // component/source index, -1 = none
    std::vector<int> labels;                // augmentation only
};

// Ancestral sampling: component ~ Multi(w/N), z ~ N(mu_phi(u_m), sigma^2 I),
// x = decoder mean. Literal observation sampling available behind a flag.
GeneratedBatch generate(const model::VaeParams& p, const priors::PriorSpec& spec,
                        std::size_t n, Rng& rng, bool sample_observation = false);

// Linear interpolation between the encoder means of two points, decoded.
GeneratedBatch interpolate(const model::VaeParams& p, const Tensor& x_a,
                           const Tensor& x_b, std::size_t steps);

enum class Way { Posterior, Prior };
Way way_from_string(const std::string& s);

// Per labeled point: z from q(z|x_i) (posterior way) or N(mu_phi(x_i),
// sigma^2 I) (prior way, conditioning on the real point), decoded to its
// mean; labels carry over.
GeneratedBatch synthesize_augmentation(const model::VaeParams& p, const Tensor& X,
                                       const std::vector<int>& labels, Way way,
                                       Rng& rng);

} // namespace bype::sampling
