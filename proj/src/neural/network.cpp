#include "gatepose/neural/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gatepose::neural {

void Network::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

std::vector<std::vector<int>> Network::shape_trace() const {
    std::vector<std::vector<int>> trace{input_shape_};
    std::vector<int> cur = input_shape_;
    for (const auto& layer : layers_) {
        cur = layer->output_shape(cur);
        trace.push_back(cur);
    }
    return trace;
}

Tensor Network::forward(const Tensor& x, Mode mode, Rng* rng) {
    if (!input_shape_.empty() && x.shape != input_shape_)
        throw std::invalid_argument("network: input shape " + x.shape_str() +
                                    " does not match " + shape_to_string(input_shape_));
    Tensor cur = x;
    for (auto& layer : layers_) cur = layer->forward(cur, mode, rng);
    return cur;
}

Tensor Network::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<ParamView> Network::params() {
    std::vector<ParamView> all;
    for (size_t i = 0; i < layers_.size(); ++i) {
        for (ParamView& p : layers_[i]->params()) {
            p.name = "layer" + std::to_string(i) + "." + layers_[i]->kind() + "." + p.name;
            all.push_back(p);
        }
    }
    return all;
}

int Network::param_count() {
    int n = 0;
    for (const ParamView& p : params()) n += static_cast<int>(p.value->size());
    return n;
}

void Network::zero_grads() {
    for (const ParamView& p : params()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

void Network::init_params(Rng& rng) {
    for (auto& layer : layers_) layer->init_params(rng);
}

double Network::predict(const Tensor& x) {
    Tensor out = forward(x, Mode::Infer, nullptr);
    if (out.size() != 1) throw std::logic_error("predict: network output is not scalar");
    return out.data[0];
}

double bce_loss(double p, double y, double eps) {
    const double q = std::clamp(p, eps, 1.0 - eps);
    return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

double bce_grad(double p, double y, double eps) {
    const double q = std::clamp(p, eps, 1.0 - eps);
    return (q - y) / std::max(q * (1.0 - q), 1e-12);
}

}  // namespace gatepose::neural
