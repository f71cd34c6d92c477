#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bype/rng.hpp"
#include "bype/tape.hpp"
#include "bype/tensor.hpp"

namespace bype::model {

enum class Act { Tanh, Gated, Relu };
enum class OutAct { Linear, Sigmoid };

Act act_from_string(const std::string& s);
OutAct out_act_from_string(const std::string& s);

// y = x * W^T + b, W stored [out x in]
struct Dense {
    Tensor W;
    Tensor b;
};

// Gated layers evaluate main(x) .* sigmoid(gate(x)); tanh/relu layers use
// main only.
struct HiddenLayer {
    Dense main;
    Dense gate;
};

struct VaeSpec {
    std::size_t d = 784;
    std::size_t d_z = 40;
    std::size_t hidden = 300;
    std::size_t n_hidden = 2;
    Act act = Act::Gated;
    OutAct dec_out = OutAct::Sigmoid;
};

// Encoder trunk + coupled mean/log-variance heads, decoder, and the two
// learnable scalar variances. The single mean head serves both the
// variational posterior and the per-component prior mean, so the coupling
// holds by construction.
struct VaeParams {
    VaeSpec spec;
    std::vector<HiddenLayer> enc;
    Dense enc_mean;
    Dense enc_logvar;
    std::vector<HiddenLayer> dec;
    Dense dec_out;
    Tensor log_sigma2; // [1], log of the shared prior component variance
    Tensor dec_logvar; // [1], log of the decoder observation variance

    static VaeParams init(const VaeSpec& spec, Rng& rng);

    double sigma2() const { return std::exp(log_sigma2[0]); }
    double obs_var() const { return std::exp(dec_logvar[0]); }
    void set_sigma2(double v);

    void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each_param(
        const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

// Node handles for one VaeParams registration on a tape.
struct TapedDense {
    int W = -1, b = -1;
};
struct TapedLayer {
    TapedDense main, gate;
};
struct TapedVae {
    VaeSpec spec;
    std::vector<TapedLayer> enc;
    TapedDense enc_mean, enc_logvar;
    std::vector<TapedLayer> dec;
    TapedDense dec_out;
    int log_sigma2 = -1;
    int dec_logvar = -1;
};

TapedVae bind(Tape& t, const VaeParams& p);

int apply_dense(Tape& t, const TapedDense& d, int x);
int apply_trunk(Tape& t, const std::vector<TapedLayer>& layers, Act act, int x);

// mu, logvar rows for a [B x d] input
std::pair<int, int> encoder_rows(Tape& t, const TapedVae& v, int xrows);
int encoder_mean_rows(Tape& t, const TapedVae& v, int xrows);
int decoder_mean_rows(Tape& t, const TapedVae& v, int zrows);
// z = mu + exp(logvar/2) .* eps, eps constant
int reparam_rows(Tape& t, int mu, int logvar, const Tensor& eps);
// [B] log p(x|z) rows under the Gaussian observation model
int decoder_loglik_rows(Tape& t, const TapedVae& v, int xrows_const, int zrows);
// [B] diagonal-Gaussian log densities, one per row
int gaussian_logpdf_rows(Tape& t, int zrows, int murows, int lvrows);

// Contract-level operations (single point or batch; no caller-visible tape).
std::pair<Tensor, Tensor> encode(const VaeParams& p, const Tensor& x);
Tensor prior_component_mean(const VaeParams& p, const Tensor& u);
Tensor reparam_sample(const Tensor& mean, const Tensor& logvar, const Tensor& eps);
double decoder_loglik(const VaeParams& p, const Tensor& x, const Tensor& z);
double gaussian_logpdf_diag(const Tensor& z, const Tensor& mean, const Tensor& logvar);
Tensor decode_mean(const VaeParams& p, const Tensor& z);

} // namespace bype::model
