#include "gatepose/neural/train.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "gatepose/errors.hpp"

namespace gatepose::neural {

TrainResult train(Network& net, const std::vector<Tensor>& inputs,
                  const std::vector<double>& labels, const TrainConfig& cfg) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw std::invalid_argument("train: dataset empty or mismatched");
    if (cfg.batch_size < 1 || cfg.max_epochs < 1)
        throw std::invalid_argument("train: batch_size and max_epochs must be >= 1");
    for (double y : labels)
        if (y != 0.0 && y != 1.0) throw std::invalid_argument("train: labels must be 0 or 1");

    const int n = static_cast<int>(inputs.size());
    Rng shuffle_rng = Rng(cfg.seed).fork(0x5u);
    Rng dropout_rng = Rng(cfg.seed).fork(0xDu);
    Adam opt(net.params(), cfg.adam);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

        double epoch_loss = 0.0;
        for (int begin = 0; begin < n; begin += cfg.batch_size) {
            const int end = std::min(n, begin + cfg.batch_size);
            const double inv_batch = 1.0 / (end - begin);
            net.zero_grads();
            double batch_loss = 0.0;
            for (int k = begin; k < end; ++k) {
                const int idx = order[k];
                const Tensor out = net.forward(inputs[idx], Mode::Train, &dropout_rng);
                const double p = out.data[0];
                const double y = labels[idx];
                batch_loss += bce_loss(p, y);
                Tensor g({1});
                g.data[0] = bce_grad(p, y) * inv_batch;
                net.backward(g);
            }
            if (!std::isfinite(batch_loss))
                throw DivergedError("train: non-finite loss at epoch " +
                                    std::to_string(epoch + 1));
            opt.step(net.params());
            epoch_loss += batch_loss;
        }
        result.epoch_mean_loss.push_back(epoch_loss / n);
        result.epochs_run = epoch + 1;
        if (cfg.early_stop_loss > 0.0 && result.epoch_mean_loss.back() <= cfg.early_stop_loss)
            break;
    }
    return result;
}

double accuracy(Network& net, const std::vector<Tensor>& inputs,
                const std::vector<double>& labels, double threshold) {
    if (inputs.empty()) throw std::invalid_argument("accuracy: empty dataset");
    int correct = 0;
    for (size_t i = 0; i < inputs.size(); ++i) {
        const double p = net.predict(inputs[i]);
        const int pred = p >= threshold ? 1 : 0;
        if (pred == static_cast<int>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / inputs.size();
}

void write_loss_curve_csv(std::ostream& out, const TrainResult& result) {
    out << "epoch,mean_loss\n";
    for (size_t i = 0; i < result.epoch_mean_loss.size(); ++i)
        out << (i + 1) << ',' << result.epoch_mean_loss[i] << '\n';
}

}  // namespace gatepose::neural
