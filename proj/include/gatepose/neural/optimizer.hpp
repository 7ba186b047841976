#pragma once

#include <span>
#include <vector>

#include "gatepose/neural/layers.hpp"

namespace gatepose::neural {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/**
 * One bias-corrected Adam update for a parameter block. `step` counts from 1;
 * m and v are the running first/second moment estimates (zero-initialised).
 */
void adam_step(std::span<double> param, std::span<const double> grad, std::span<double> m,
               std::span<double> v, int step, const AdamConfig& cfg = {});

/// Adam over a network's parameter views, moments owned here.
class Adam {
public:
    Adam(const std::vector<ParamView>& params, AdamConfig cfg = {});
    void step(const std::vector<ParamView>& params);
    int steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    int t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace gatepose::neural
