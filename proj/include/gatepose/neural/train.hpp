#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gatepose/neural/network.hpp"
#include "gatepose/neural/optimizer.hpp"

namespace gatepose::neural {

struct TrainConfig {
    int batch_size = 50;
    int max_epochs = 20;
    uint64_t seed = 1;
    AdamConfig adam{};
    /// Stop once the epoch mean loss drops to this value (0 disables).
    double early_stop_loss = 0.0;
};

struct TrainResult {
    std::vector<double> epoch_mean_loss;
    int epochs_run = 0;
};

/**
 * Shuffled mini-batch training with Adam on binary cross-entropy. Labels are
 * 0/1; gradients accumulate over each batch in sample order, so runs are
 * deterministic for a given seed. A batch remainder smaller than batch_size
 * is kept. Throws DivergedError on a non-finite loss.
 */
TrainResult train(Network& net, const std::vector<Tensor>& inputs,
                  const std::vector<double>& labels, const TrainConfig& cfg);

/// Fraction of samples whose thresholded prediction matches the label.
double accuracy(Network& net, const std::vector<Tensor>& inputs,
                const std::vector<double>& labels, double threshold = 0.5);

/// CSV: epoch, mean_loss.
void write_loss_curve_csv(std::ostream& out, const TrainResult& result);

}  // namespace gatepose::neural
