#include "bype/trainer.hpp"

#include <chrono>
#include <filesystem>

#include "bype/checkpoint.hpp"
#include "bype/hash.hpp"

namespace bype::train {
namespace {

// Substream ids, spaced so per-epoch streams never collide.
enum : std::uint64_t {
    kStreamInit = 1,
    kStreamShuffle = 1'000'000,
    kStreamEps = 2'000'000,
    kStreamVal = 3'000'000,
    kStreamDiag = 4'000'000,
    kStreamCoreset = 5'000'000,
};

ParamRefs collect_params(model::VaeParams& p, priors::PriorSpec& spec) {
    ParamRefs refs;
    p.for_each_param([&refs](const std::string& name, Tensor& t) {
        refs.emplace_back(name, &t);
    });
    if (spec.kind == priors::Kind::Vamp)
        refs.emplace_back("vamp.pseudo_inputs", &spec.pseudo_inputs);
    return refs;
}

std::vector<std::pair<std::string, Tensor>> checkpoint_entries(
    const model::VaeParams& p, const priors::PriorSpec& spec) {
    std::vector<std::pair<std::string, Tensor>> out;
    p.for_each_param([&out](const std::string& name, const Tensor& t) {
        out.emplace_back(name, t);
    });
    if (spec.kind == priors::Kind::Vamp)
        out.emplace_back("vamp.pseudo_inputs", spec.pseudo_inputs);
    if (spec.kind == priors::Kind::ByPE) {
        out.emplace_back("coreset.U", spec.core.U);
        out.emplace_back("coreset.w", spec.core.w);
        out.emplace_back("coreset.n_mass", Tensor::scalar(spec.core.N));
    }
    return out;
}

double validation_elbo(const model::VaeParams& p, const priors::PriorSpec& spec,
                       const Tensor& X, Rng rng) {
    Tensor eps({X.rows(), p.spec.d_z});
    for (std::size_t i = 0; i < eps.numel(); ++i) eps[i] = rng.normal();
    return objective::elbo(p, spec, X, eps, 1.0).total;
}

} // namespace

void RunConfig::validate() const {
    if (epochs == 0 || batch == 0 || patience == 0 || warmup_epochs == 0)
        throw UsageError("RunConfig: all counts must be positive");
    if (coreset_interval == 0)
        throw UsageError("RunConfig: coreset update interval k must be >= 1");
    if (prior == priors::Kind::ByPE && coreset_M == 0)
        throw UsageError("RunConfig: coreset size M must be positive");
}

double epoch_timer(MetricsLog& log, std::size_t epoch, const std::string& phase,
                   const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(t1 - t0).count();
    log.add_timing(epoch, phase, s);
    return s;
}

TrainResult train(const RunConfig& cfg, const data::Splits& splits) {
    cfg.validate();
    if (splits.train.N() == 0 || splits.val.N() == 0)
        throw UsageError("train: train and validation splits must be nonempty");
    const Tensor& X = splits.train.X;
    const std::size_t N = X.rows();
    const Rng root(cfg.seed);

    model::VaeSpec mspec = cfg.model;
    mspec.d = X.cols();
    Rng init_rng = root.stream(kStreamInit);
    model::VaeParams params = model::VaeParams::init(mspec, init_rng);

    priors::PriorSpec spec;
    switch (cfg.prior) {
    case priors::Kind::StandardGaussian:
        spec = priors::PriorSpec::gaussian();
        break;
    case priors::Kind::Vamp: {
        const std::size_t K = std::min(cfg.vamp_components, N);
        spec = priors::PriorSpec::vamp(
            gather_rows(X, init_rng.sample_without_replacement(N, K)),
            static_cast<double>(N));
        break;
    }
    case priors::Kind::Exemplar:
        spec = priors::PriorSpec::exemplar(X);
        break;
    case priors::Kind::ByPE:
        spec = priors::PriorSpec::bype(
            coreset::init_coreset(X, std::min(cfg.coreset_M, N), init_rng));
        break;
    }

    AdamState adam;
    TrainResult result;
    result.best_val_elbo = -HUGE_VAL;
    model::VaeParams best_params = params;
    priors::PriorSpec best_spec = spec;

    const bool bype = cfg.prior == priors::Kind::ByPE;
    std::size_t coreset_updates_done = 0;

    const std::string ckpt_dir = cfg.checkpoint_dir;
    if (!ckpt_dir.empty()) std::filesystem::create_directories(ckpt_dir);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        result.epochs_run = epoch;
        try {
            const double beta =
                objective::kl_annealing_schedule(epoch - 1, cfg.warmup_epochs);
            if (bype) {
                bool clamped = false;
                spec.core = coreset::center_weights(spec.core, &clamped);
                result.log.add(epoch, "vae", "center_clamped", clamped ? 1.0 : 0.0);
                result.log.add(epoch, "vae", "coreset_hash_pre",
                               std::to_string(hash_coreset(spec.core)));
            }

            // --- step (i): VAE updates under a frozen coreset -------------
            double ep_elbo = 0.0, ep_recon = 0.0, ep_kl = 0.0;
            epoch_timer(result.log, epoch, "vae-step", [&] {
                Rng shuffle_rng = root.stream(kStreamShuffle + epoch);
                Rng eps_rng = root.stream(kStreamEps + epoch);
                const auto perm = shuffle_rng.permutation(N);
                ParamRefs refs = collect_params(params, spec);
                std::size_t seen = 0;
                for (std::size_t start = 0; start < N; start += cfg.batch) {
                    const std::size_t stop = std::min(start + cfg.batch, N);
                    const std::vector<std::size_t> idx(perm.begin() + start,
                                                       perm.begin() + stop);
                    const Tensor xb = gather_rows(X, idx);
                    Tensor eps({idx.size(), mspec.d_z});
                    for (std::size_t i = 0; i < eps.numel(); ++i)
                        eps[i] = eps_rng.normal();
                    GradMap grads;
                    const auto b =
                        objective::elbo_with_grads(params, spec, xb, eps, beta, grads);
                    // ascend the ELBO
                    for (auto& [name, g] : grads)
                        g = scale(g, -1.0);
                    normalized_adam_step(adam, refs, grads, cfg.lr);
                    const auto bs = static_cast<double>(idx.size());
                    ep_elbo += b.total * bs;
                    ep_recon += b.recon * bs;
                    ep_kl += b.kl_term * bs;
                    seen += idx.size();
                }
                ep_elbo /= static_cast<double>(seen);
                ep_recon /= static_cast<double>(seen);
                ep_kl /= static_cast<double>(seen);
            });
            result.log.add(epoch, "train", "beta", beta);
            result.log.add(epoch, "train", "elbo", ep_elbo);
            result.log.add(epoch, "train", "recon", ep_recon);
            result.log.add(epoch, "train", "kl", ep_kl);
            result.log.add(epoch, "vae", "theta_phi_hash",
                           std::to_string(hash_params(params)));
            if (bype)
                result.log.add(epoch, "vae", "coreset_hash_post",
                               std::to_string(hash_coreset(spec.core)));

            // --- step (ii): coreset updates with theta/phi frozen ---------
            if (bype && epoch % cfg.coreset_interval == 0) {
                result.log.add(epoch, "coreset", "theta_phi_hash_pre",
                               std::to_string(hash_params(params)));
                epoch_timer(result.log, epoch, "coreset-step", [&] {
                    Rng crng = root.stream(kStreamCoreset + epoch);
                    for (std::size_t u = 0; u < cfg.coreset_steps_per_update; ++u) {
                        const std::size_t B = std::min(cfg.batch, N);
                        const Tensor batch =
                            gather_rows(X, crng.sample_without_replacement(N, B));
                        const auto est = coreset::estimate_coreset_gradients(
                            params, spec.core, batch, cfg.coreset_S, crng);
                        ++coreset_updates_done;
                        const double step =
                            cfg.coreset_step_decay
                                ? cfg.coreset_step /
                                      static_cast<double>(coreset_updates_done)
                                : cfg.coreset_step;
                        spec.core = coreset::apply_coreset_update(spec.core, est, step);
                    }
                });
                result.log.add(epoch, "coreset", "update", 1.0);
                result.log.add(epoch, "coreset", "w_sum", sum(spec.core.w));
                // recenter eagerly so evaluation never sees a degenerate
                // all-zero weight state; the next epoch's centering is then
                // a no-op unless it has to clamp
                bool clamped = false;
                spec.core = coreset::center_weights(spec.core, &clamped);
                result.log.add(epoch, "coreset", "center_clamped",
                               clamped ? 1.0 : 0.0);
                result.log.add(epoch, "coreset", "coreset_hash",
                               std::to_string(hash_coreset(spec.core)));
                result.log.add(epoch, "coreset", "theta_phi_hash_post",
                               std::to_string(hash_params(params)));
            }

            // --- validation and diagnostics -------------------------------
            double val = 0.0, diag = 0.0;
            epoch_timer(result.log, epoch, "eval", [&] {
                val = validation_elbo(params, spec, splits.val.X,
                                      root.stream(kStreamVal + epoch));
                Rng drng = root.stream(kStreamDiag + epoch);
                diag = objective::kl_loss_diagnostic(params, spec, splits.val.X, drng);
            });
            result.log.add(epoch, "val", "elbo", val);
            result.log.add(epoch, "val", "kl_diag", diag);

            if (val > result.best_val_elbo) {
                result.best_val_elbo = val;
                result.best_epoch = epoch;
                best_params = params;
                best_spec = spec;
                if (!ckpt_dir.empty())
                    model::save_checkpoint(ckpt_dir + "/best.ckpt",
                                           checkpoint_entries(params, spec));
            }
            if (epoch - result.best_epoch >= cfg.patience) {
                result.log.add(epoch, "train", "early_stop", 1.0);
                break;
            }
        } catch (const NumericError&) {
            result.log.add(epoch, "train", "diverged", std::string("1"));
            result.diverged = true;
            break;
        }
    }

    result.params = best_params;
    result.prior = best_spec;
    if (!ckpt_dir.empty())
        model::save_checkpoint(ckpt_dir + "/final.ckpt",
                               checkpoint_entries(result.params, result.prior));
    return result;
}

} // namespace bype::train
