#pragma once

#include <vector>

#include "duet/autodiff.hpp"

namespace duet {

// Adam with bias correction and decoupled weight decay. Moments are kept per
// parameter, aligned with the parameter list given at construction.
struct AdamState {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    long step = 0;
    std::vector<Tensor> m, v;

    AdamState() = default;
    AdamState(const std::vector<Parameter*>& params, double lr_, double weight_decay_);
};

// One optimizer step over `params` using their accumulated gradients.
// Gradients are left untouched; callers zero them between steps.
void adam_step(std::vector<Parameter*>& params, AdamState& state);

}  // namespace duet
