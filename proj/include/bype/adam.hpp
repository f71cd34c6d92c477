#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bype/tape.hpp"
#include "bype/tensor.hpp"

namespace bype::train {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t t = 0;
    struct Moments {
        Tensor m, v;
    };
    std::map<std::string, Moments> slots;
};

using ParamRefs = std::vector<std::pair<std::string, Tensor*>>;

// ADAM with per-block gradient normalization: each parameter block's
// gradient is rescaled to unit L2 norm (blocks with norm < 1e-12 pass
// through unchanged) before the usual moment updates. Minimizes: callers
// hand in gradients of the loss.
void normalized_adam_step(AdamState& state, const ParamRefs& params,
                          const GradMap& grads, double lr);

} // namespace bype::train
