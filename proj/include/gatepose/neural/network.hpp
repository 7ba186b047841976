#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "gatepose/neural/layers.hpp"

namespace gatepose::neural {

/// An ordered stack of layers with a fixed input shape.
class Network {
public:
    Network() = default;
    explicit Network(std::vector<int> input_shape) : input_shape_(std::move(input_shape)) {}

    void add(std::unique_ptr<Layer> layer);
    template <class L, class... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(std::move(layer));
        return ref;
    }

    const std::vector<int>& input_shape() const { return input_shape_; }
    void set_input_shape(std::vector<int> s) { input_shape_ = std::move(s); }

    /// Output shape after each layer, starting with the input shape.
    std::vector<std::vector<int>> shape_trace() const;

    Tensor forward(const Tensor& x, Mode mode = Mode::Infer, Rng* rng = nullptr);
    /// Backprop through the cached forward pass; returns grad w.r.t. input.
    Tensor backward(const Tensor& grad_out);

    std::vector<ParamView> params();
    int param_count();
    void zero_grads();
    void init_params(Rng& rng);

    /// Inference to a scalar output.
    double predict(const Tensor& x);

    const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

private:
    std::vector<int> input_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Binary cross-entropy with the probability clamped to [eps, 1-eps].
double bce_loss(double p, double y, double eps = 1e-7);
/// d bce / d p with a guarded denominator.
double bce_grad(double p, double y, double eps = 1e-7);

}  // namespace gatepose::neural
