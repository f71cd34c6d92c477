#include "bype/model.hpp"

#include <cmath>
#include <numbers>

namespace bype::model {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112; // log(2*pi)

Dense glorot_dense(std::size_t out, std::size_t in, Rng& rng) {
    Dense d;
    d.W = Tensor({out, in});
    d.b = Tensor({out});
    const double lim = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < d.W.numel(); ++i)
        d.W[i] = (2.0 * rng.uniform() - 1.0) * lim;
    return d;
}

HiddenLayer glorot_layer(std::size_t out, std::size_t in, Act act, Rng& rng) {
    HiddenLayer l;
    l.main = glorot_dense(out, in, rng);
    if (act == Act::Gated) l.gate = glorot_dense(out, in, rng);
    return l;
}

void walk_dense(const std::string& prefix, Dense& d,
                const std::function<void(const std::string&, Tensor&)>& fn) {
    fn(prefix + ".w", d.W);
    fn(prefix + ".b", d.b);
}

void walk_layers(const std::string& prefix, std::vector<HiddenLayer>& ls, Act act,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t i = 0; i < ls.size(); ++i) {
        const std::string p = prefix + ".l" + std::to_string(i);
        walk_dense(p, ls[i].main, fn);
        if (act == Act::Gated) walk_dense(p + ".gate", ls[i].gate, fn);
    }
}
} // namespace

Act act_from_string(const std::string& s) {
    if (s == "tanh") return Act::Tanh;
    if (s == "gated") return Act::Gated;
    if (s == "relu") return Act::Relu;
    throw UsageError("unknown activation: " + s);
}

OutAct out_act_from_string(const std::string& s) {
    if (s == "linear") return OutAct::Linear;
    if (s == "sigmoid") return OutAct::Sigmoid;
    throw UsageError("unknown output activation: " + s);
}

VaeParams VaeParams::init(const VaeSpec& spec, Rng& rng) {
    // n_hidden == 0 is allowed: the heads become plain linear maps
    if (spec.d == 0 || spec.d_z == 0 || (spec.n_hidden > 0 && spec.hidden == 0))
        throw UsageError("VaeSpec: all widths must be positive");
    VaeParams p;
    p.spec = spec;
    std::size_t in = spec.d;
    for (std::size_t i = 0; i < spec.n_hidden; ++i) {
        p.enc.push_back(glorot_layer(spec.hidden, in, spec.act, rng));
        in = spec.hidden;
    }
    p.enc_mean = glorot_dense(spec.d_z, in, rng);
    p.enc_logvar = glorot_dense(spec.d_z, in, rng);
    in = spec.d_z;
    for (std::size_t i = 0; i < spec.n_hidden; ++i) {
        p.dec.push_back(glorot_layer(spec.hidden, in, spec.act, rng));
        in = spec.hidden;
    }
    p.dec_out = glorot_dense(spec.d, in, rng);
    p.log_sigma2 = Tensor::scalar(0.0);
    p.dec_logvar = Tensor::scalar(0.0);
    return p;
}

void VaeParams::set_sigma2(double v) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError("sigma2 must be strictly positive and finite");
    log_sigma2[0] = std::log(v);
}

void VaeParams::for_each_param(
    const std::function<void(const std::string&, Tensor&)>& fn) {
    walk_layers("enc", enc, spec.act, fn);
    walk_dense("enc.mean", enc_mean, fn);
    walk_dense("enc.logvar", enc_logvar, fn);
    walk_layers("dec", dec, spec.act, fn);
    walk_dense("dec.out", dec_out, fn);
    fn("prior.log_sigma2", log_sigma2);
    fn("dec.log_obs_var", dec_logvar);
}

void VaeParams::for_each_param(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
    auto* self = const_cast<VaeParams*>(this);
    self->for_each_param([&fn](const std::string& n, Tensor& t) {
        fn(n, static_cast<const Tensor&>(t));
    });
}

TapedVae bind(Tape& t, const VaeParams& p) {
    TapedVae v;
    v.spec = p.spec;
    auto bind_dense = [&t](const std::string& name, const Dense& d) {
        TapedDense td;
        td.W = t.param(name + ".w", d.W);
        td.b = t.param(name + ".b", d.b);
        return td;
    };
    auto bind_layers = [&](const std::string& prefix,
                           const std::vector<HiddenLayer>& ls) {
        std::vector<TapedLayer> out;
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const std::string name = prefix + ".l" + std::to_string(i);
            TapedLayer tl;
            tl.main = bind_dense(name, ls[i].main);
            if (p.spec.act == Act::Gated) tl.gate = bind_dense(name + ".gate", ls[i].gate);
            out.push_back(tl);
        }
        return out;
    };
    v.enc = bind_layers("enc", p.enc);
    v.enc_mean = bind_dense("enc.mean", p.enc_mean);
    v.enc_logvar = bind_dense("enc.logvar", p.enc_logvar);
    v.dec = bind_layers("dec", p.dec);
    v.dec_out = bind_dense("dec.out", p.dec_out);
    v.log_sigma2 = t.param("prior.log_sigma2", p.log_sigma2);
    v.dec_logvar = t.param("dec.log_obs_var", p.dec_logvar);
    return v;
}

int apply_dense(Tape& t, const TapedDense& d, int x) {
    return t.add_rowvec(t.matmul(x, d.W, false, true), d.b);
}

int apply_trunk(Tape& t, const std::vector<TapedLayer>& layers, Act act, int x) {
    int h = x;
    for (const auto& l : layers) {
        const int pre = apply_dense(t, l.main, h);
        switch (act) {
        case Act::Tanh: h = t.vtanh(pre); break;
        case Act::Relu: h = t.vrelu(pre); break;
        case Act::Gated:
            h = t.mul(pre, t.vsigmoid(apply_dense(t, l.gate, h)));
            break;
        }
    }
    return h;
}

std::pair<int, int> encoder_rows(Tape& t, const TapedVae& v, int xrows) {
    if (t.val(xrows).cols() != v.spec.d)
        throw DimensionError("encoder: input width != d");
    const int h = apply_trunk(t, v.enc, v.spec.act, xrows);
    return {apply_dense(t, v.enc_mean, h), apply_dense(t, v.enc_logvar, h)};
}

int encoder_mean_rows(Tape& t, const TapedVae& v, int xrows) {
    if (t.val(xrows).cols() != v.spec.d)
        throw DimensionError("encoder: input width != d");
    const int h = apply_trunk(t, v.enc, v.spec.act, xrows);
    return apply_dense(t, v.enc_mean, h);
}

int decoder_mean_rows(Tape& t, const TapedVae& v, int zrows) {
    if (t.val(zrows).cols() != v.spec.d_z)
        throw DimensionError("decoder: input width != d_z");
    const int h = apply_trunk(t, v.dec, v.spec.act, zrows);
    const int pre = apply_dense(t, v.dec_out, h);
    return v.spec.dec_out == OutAct::Sigmoid ? t.vsigmoid(pre) : pre;
}

int reparam_rows(Tape& t, int mu, int logvar, const Tensor& eps) {
    const int sd = t.vexp(t.scale(logvar, 0.5));
    return t.add(mu, t.mul(sd, t.constant(eps)));
}

int decoder_loglik_rows(Tape& t, const TapedVae& v, int xrows_const, int zrows) {
    const std::size_t d = v.spec.d;
    const int mean = decoder_mean_rows(t, v, zrows);
    const int q = t.rowsum(t.vsquare(t.sub(xrows_const, mean)));
    const int inv_var = t.vexp(t.scale(v.dec_logvar, -1.0));
    const int quad = t.scale(t.mul_scalar(q, inv_var), -0.5);
    const int logdet = t.scale(v.dec_logvar, -0.5 * static_cast<double>(d));
    return t.add_const(t.add_scalar(quad, logdet),
                       -0.5 * static_cast<double>(d) * kLog2Pi);
}

int gaussian_logpdf_rows(Tape& t, int zrows, int murows, int lvrows) {
    const std::size_t d = t.val(zrows).cols();
    const int diff = t.sub(zrows, murows);
    const int quad = t.mul(t.vsquare(diff), t.vexp(t.scale(lvrows, -1.0)));
    const int inner = t.rowsum(t.add(quad, lvrows));
    return t.add_const(t.scale(inner, -0.5),
                       -0.5 * static_cast<double>(d) * kLog2Pi);
}

namespace {
Tensor as_rows(const Tensor& x) {
    if (x.rank() == 2) return x;
    return Tensor({1, x.numel()},
                  std::vector<double>(x.data(), x.data() + x.numel()));
}

Tensor shaped_like_input(const Tensor& out, const Tensor& in) {
    if (in.rank() == 2) return out;
    return Tensor({out.numel()},
                  std::vector<double>(out.data(), out.data() + out.numel()));
}
} // namespace

std::pair<Tensor, Tensor> encode(const VaeParams& p, const Tensor& x) {
    ensure_finite(x, "encode input");
    Tape t;
    const TapedVae v = bind(t, p);
    auto [mu, lv] = encoder_rows(t, v, t.constant(as_rows(x)));
    return {shaped_like_input(t.val(mu), x), shaped_like_input(t.val(lv), x)};
}

Tensor prior_component_mean(const VaeParams& p, const Tensor& u) {
    ensure_finite(u, "prior_component_mean input");
    Tape t;
    const TapedVae v = bind(t, p);
    const int mu = encoder_mean_rows(t, v, t.constant(as_rows(u)));
    return shaped_like_input(t.val(mu), u);
}

Tensor reparam_sample(const Tensor& mean, const Tensor& logvar, const Tensor& eps) {
    if (!mean.same_shape(logvar) || !mean.same_shape(eps))
        throw DimensionError("reparam_sample: shape mismatch");
    Tensor z = Tensor::zeros_like(mean);
    for (std::size_t i = 0; i < z.numel(); ++i)
        z[i] = mean[i] + std::exp(0.5 * logvar[i]) * eps[i];
    return z;
}

double decoder_loglik(const VaeParams& p, const Tensor& x, const Tensor& z) {
    Tape t;
    const TapedVae v = bind(t, p);
    const int ll =
        decoder_loglik_rows(t, v, t.constant(as_rows(x)), t.constant(as_rows(z)));
    const double r = t.val(ll)[0];
    ensure_finite(r, "decoder_loglik");
    return r;
}

double gaussian_logpdf_diag(const Tensor& z, const Tensor& mean,
                            const Tensor& logvar) {
    if (!z.same_shape(mean) || !z.same_shape(logvar))
        throw DimensionError("gaussian_logpdf_diag: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.numel(); ++i) {
        const double d = z[i] - mean[i];
        acc += d * d * std::exp(-logvar[i]) + logvar[i];
    }
    return -0.5 * acc - 0.5 * static_cast<double>(z.numel()) * kLog2Pi;
}

Tensor decode_mean(const VaeParams& p, const Tensor& z) {
    Tape t;
    const TapedVae v = bind(t, p);
    const int mean = decoder_mean_rows(t, v, t.constant(as_rows(z)));
    return shaped_like_input(t.val(mean), z);
}

} // namespace bype::model
