#pragma once

#include <optional>
#include <string>
#include <utility>

#include "bype/coreset.hpp"
#include "bype/model.hpp"

namespace bype::priors {

enum class Kind { StandardGaussian, Vamp, Exemplar, ByPE };

Kind kind_from_string(const std::string& s);
std::string to_string(Kind k);

// Tagged choice of latent prior plus its conditioning data. n_mass is N,
// the dataset size the mixture mass refers to; the Exemplar prior uses unit
// weights over all of X, ByPE uses the weighted pseudocoreset.
struct PriorSpec {
    Kind kind = Kind::StandardGaussian;
    Tensor pseudo_inputs;        // Vamp: [K x d], trainable
    Tensor exemplars;            // Exemplar: [N x d]
    coreset::Pseudocoreset core; // ByPE
    double n_mass = 0.0;

    static PriorSpec gaussian();
    static PriorSpec vamp(Tensor pseudo_inputs, double n_mass);
    static PriorSpec exemplar(Tensor X);
    static PriorSpec bype(coreset::Pseudocoreset c);
};

// When the prior carries trainable conditioning (Vamp pseudo-inputs), it is
// registered on the tape alongside the VAE parameters.
struct TapedPrior {
    int vamp_pseudo = -1;
};
TapedPrior bind_prior(Tape& t, const PriorSpec& spec);

// [B] log p(z_b) rows for the chosen prior.
int log_prior_rows(Tape& t, const PriorSpec& spec, const TapedPrior& tp,
                   const model::TapedVae& v, int zrows);

// Contract-level density and sampler.
double log_prior(const PriorSpec& spec, const model::VaeParams& p, const Tensor& z);
std::pair<Tensor, std::optional<std::size_t>> sample_prior(const PriorSpec& spec,
                                                           const model::VaeParams& p,
                                                           Rng& rng);

} // namespace bype::priors
