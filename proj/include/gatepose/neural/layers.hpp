#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gatepose/neural/tensor.hpp"
#include "gatepose/rng.hpp"

namespace gatepose::neural {

enum class Mode { Train, Infer };

/// Named slice of a layer's parameters with its gradient accumulator.
struct ParamView {
    std::string name;
    std::vector<double>* value;
    std::vector<double>* grad;
};

/**
 * One differentiable transform. forward() caches whatever backward() needs;
 * backward() consumes the most recent forward pass, accumulates parameter
 * gradients, and returns the gradient w.r.t. the layer input.
 */
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;
    virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
    virtual Tensor forward(const Tensor& x, Mode mode, Rng* rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<ParamView> params() { return {}; }
    virtual void init_params(Rng&) {}
    virtual void describe(nlohmann::json& j) const;
};

/// Valid (no-pad) stride-1 cross-correlation over [len, ch_in].
class Conv1d final : public Layer {
public:
    Conv1d(int kernel, int ch_in, int ch_out);
    const char* kind() const override { return "conv1d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamView> params() override;
    void init_params(Rng& rng) override;
    void describe(nlohmann::json& j) const override;

    int kernel, ch_in, ch_out;
    std::vector<double> weights;  // [k][ch_in][ch_out]
    std::vector<double> bias;     // [ch_out]
    std::vector<double> grad_weights, grad_bias;

private:
    Tensor input_;
};

/// Valid stride-1 cross-correlation with square kernels over [h, w, ch_in].
class Conv2d final : public Layer {
public:
    Conv2d(int kernel, int ch_in, int ch_out);
    const char* kind() const override { return "conv2d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamView> params() override;
    void init_params(Rng& rng) override;
    void describe(nlohmann::json& j) const override;

    int kernel, ch_in, ch_out;
    std::vector<double> weights;  // [kh][kw][ch_in][ch_out]
    std::vector<double> bias;
    std::vector<double> grad_weights, grad_bias;

private:
    Tensor input_;
};

/**
 * Per-sample, per-channel normalization over the leading (spatial/temporal)
 * axes, then affine gamma/beta. When the normalized axis has a single
 * element the values pass through the affine only.
 */
class InstanceNorm final : public Layer {
public:
    explicit InstanceNorm(int channels, double eps = 1e-5);
    const char* kind() const override { return "instance_norm"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamView> params() override;
    void describe(nlohmann::json& j) const override;

    int channels;
    double eps;
    std::vector<double> gamma, beta;
    std::vector<double> grad_gamma, grad_beta;

private:
    Tensor x_hat_;
    std::vector<double> inv_std_;  // per channel; empty when degenerate
    int spatial_ = 0;
};

class Relu final : public Layer {
public:
    const char* kind() const override { return "relu"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor input_;
};

class Sigmoid final : public Layer {
public:
    const char* kind() const override { return "sigmoid"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    Tensor output_;
};

/// Inverted-scaling dropout: identity at inference.
class Dropout final : public Layer {
public:
    explicit Dropout(double rate);
    const char* kind() const override { return "dropout"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void describe(nlohmann::json& j) const override;

    double rate;

private:
    std::vector<double> mask_;  // empty after an inference pass
};

/// Windowed max over the temporal axis of [len, ch], stride = kernel.
/// A tail shorter than the kernel is dropped, except that an input shorter
/// than the kernel collapses to one full-input window.
class MaxPool1d final : public Layer {
public:
    explicit MaxPool1d(int kernel);
    const char* kind() const override { return "maxpool1d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void describe(nlohmann::json& j) const override;

    int kernel;

private:
    std::vector<int> argmax_;
    std::vector<int> in_shape_;
};

/// Windowed max over the two leading axes of [h, w, ch] with per-axis
/// kernels (a kernel of 1 leaves that axis alone).
class MaxPool2d final : public Layer {
public:
    MaxPool2d(int kernel_h, int kernel_w);
    const char* kind() const override { return "maxpool2d"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void describe(nlohmann::json& j) const override;

    int kernel_h, kernel_w;

private:
    std::vector<int> argmax_;
    std::vector<int> in_shape_;
};

class Flatten final : public Layer {
public:
    const char* kind() const override { return "flatten"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;

private:
    std::vector<int> in_shape_;
};

/// Size-preserving reinterpretation of the shape (e.g. [1,1,256] -> [1,256]).
class Reshape final : public Layer {
public:
    explicit Reshape(std::vector<int> target);
    const char* kind() const override { return "reshape"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    void describe(nlohmann::json& j) const override;

    std::vector<int> target;

private:
    std::vector<int> in_shape_;
};

/// Affine W x + b on a flat vector.
class Dense final : public Layer {
public:
    Dense(int in_features, int out_features);
    const char* kind() const override { return "dense"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamView> params() override;
    void init_params(Rng& rng) override;
    void describe(nlohmann::json& j) const override;

    int in_features, out_features;
    std::vector<double> weights;  // [in][out]
    std::vector<double> bias;
    std::vector<double> grad_weights, grad_bias;

private:
    Tensor input_;
};

/// Packed LSTM gate weights; blocks ordered [input, forget, candidate, output].
struct LstmWeights {
    const double* wx;  // [input_size][4 * units]
    const double* wh;  // [units][4 * units]
    const double* b;   // [4 * units]
    int input_size;
    int units;
};

/**
 * One LSTM cell step:
 *   i,f,o = sigmoid(affine), g = tanh(affine),
 *   c = f*c_prev + i*g, h = o*tanh(c).
 * gates_out (4*units) receives the post-activation gate values.
 */
void lstm_step(const double* x, const double* h_prev, const double* c_prev,
               const LstmWeights& w, double* h_out, double* c_out, double* gates_out);

/// Runs the cell over a [T, F] sequence from zero state; emits [T, units].
class Lstm final : public Layer {
public:
    Lstm(int input_size, int units);
    const char* kind() const override { return "lstm"; }
    std::vector<int> output_shape(const std::vector<int>& in) const override;
    Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamView> params() override;
    void init_params(Rng& rng) override;
    void describe(nlohmann::json& j) const override;

    int input_size, units;
    std::vector<double> wx, wh, bias;
    std::vector<double> grad_wx, grad_wh, grad_bias;

private:
    Tensor input_;
    std::vector<double> gates_;   // [T][4U] post-activation
    std::vector<double> cells_;   // [T][U]
    std::vector<double> tanh_c_;  // [T][U]
    std::vector<double> hidden_;  // [T][U]
    int steps_ = 0;
};

}  // namespace gatepose::neural
