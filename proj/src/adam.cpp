#include "bype/adam.hpp"

#include <cmath>

#include "bype/kernels.hpp"

namespace bype::train {

void normalized_adam_step(AdamState& state, const ParamRefs& params,
                          const GradMap& grads, double lr) {
    const auto& K = kernels::active();
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (const auto& [name, p] : params) {
        const auto it = grads.find(name);
        Tensor g = it != grads.end() ? it->second : Tensor(p->shape());
        if (!g.same_shape(*p))
            throw DimensionError("adam: gradient shape mismatch for " + name);
        ensure_finite(g, "gradient of " + name);
        const double norm = std::sqrt(K.dot(g.data(), g.data(), g.numel()));
        if (norm >= 1e-12) K.scale(g.data(), 1.0 / norm, g.data(), g.numel());

        auto& slot = state.slots[name];
        if (slot.m.numel() == 0) {
            slot.m = Tensor(p->shape());
            slot.v = Tensor(p->shape());
        }
        Tensor& m = slot.m;
        Tensor& v = slot.v;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            (*p)[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
        ensure_finite(*p, "parameter " + name + " after adam step");
    }
}

} // namespace bype::train
