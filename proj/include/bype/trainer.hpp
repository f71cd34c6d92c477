#pragma once

#include <functional>
#include <optional>
#include <string>

#include "bype/adam.hpp"
#include "bype/data.hpp"
#include "bype/metrics.hpp"
#include "bype/objective.hpp"

namespace bype::train {

// Every knob of the alternating optimization and its evaluation protocol.
struct RunConfig {
    std::size_t epochs = 200;
    std::size_t batch = 100;
    double lr = 5e-4;
    std::size_t warmup_epochs = 100;
    std::size_t patience = 50;

    priors::Kind prior = priors::Kind::ByPE;
    std::size_t vamp_components = 500;

    std::size_t coreset_M = 500;
    double coreset_step = 0.1;
    std::size_t coreset_S = 16;
    std::size_t coreset_interval = 10; // k: update every k-th epoch
    std::size_t coreset_steps_per_update = 1;
    bool coreset_step_decay = false; // gamma_t ~ 1/t across update events

    model::VaeSpec model;
    std::uint64_t seed = 1;
    std::string checkpoint_dir; // empty: keep checkpoints in memory only

    void validate() const;
};

struct TrainResult {
    model::VaeParams params;     // best-validation checkpoint
    priors::PriorSpec prior;     // prior with conditioning as of that checkpoint
    MetricsLog log;
    std::size_t best_epoch = 0;
    double best_val_elbo = 0.0;
    std::size_t epochs_run = 0;
    bool diverged = false;
};

// Alternating optimization: per epoch, (ByPE only) recenter the weights,
// run minibatch VAE updates with the coreset frozen, and every k-th epoch
// run coreset gradient steps with theta/phi frozen. Early-stops on
// validation ELBO; on numeric divergence the last good checkpoint wins.
TrainResult train(const RunConfig& cfg, const data::Splits& splits);

// Runs the closure, appends a wall-clock row for the phase, returns seconds.
double epoch_timer(MetricsLog& log, std::size_t epoch, const std::string& phase,
                   const std::function<void()>& fn);

} // namespace bype::train
