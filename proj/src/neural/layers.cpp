#include "gatepose/neural/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gatepose::neural {

namespace {

void check_shape(bool ok, const char* layer, const std::vector<int>& got) {
    if (!ok)
        throw std::invalid_argument(std::string(layer) + ": unexpected input shape " +
                                    shape_to_string(got));
}

double dot(const double* a, const double* b, int n) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const double* x, double* y, int n) {
#pragma omp simd
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void he_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = rng.uniform(-limit, limit);
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void Layer::describe(nlohmann::json& j) const { j["kind"] = kind(); }

// ---------------------------------------------------------------- Conv1d ---

Conv1d::Conv1d(int kernel_, int ch_in_, int ch_out_)
    : kernel(kernel_), ch_in(ch_in_), ch_out(ch_out_),
      weights(static_cast<size_t>(kernel_) * ch_in_ * ch_out_),
      bias(ch_out_),
      grad_weights(weights.size()),
      grad_bias(ch_out_) {
    if (kernel < 1 || ch_in < 1 || ch_out < 1)
        throw std::invalid_argument("conv1d: bad hyperparameters");
}

std::vector<int> Conv1d::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 2 && in[1] == ch_in && in[0] >= kernel, "conv1d", in);
    return {in[0] - kernel + 1, ch_out};
}

Tensor Conv1d::forward(const Tensor& x, Mode, Rng*) {
    const auto out_shape = output_shape(x.shape);
    input_ = x;
    Tensor out(out_shape);
    const int t_out = out_shape[0];
#pragma omp parallel for schedule(static)
    for (int t = 0; t < t_out; ++t) {
        double* o = &out.data[static_cast<size_t>(t) * ch_out];
        for (int co = 0; co < ch_out; ++co) o[co] = bias[co];
        for (int dt = 0; dt < kernel; ++dt) {
            const double* xr = &x.data[static_cast<size_t>(t + dt) * ch_in];
            const double* wr = &weights[static_cast<size_t>(dt) * ch_in * ch_out];
            for (int ci = 0; ci < ch_in; ++ci)
                axpy(xr[ci], &wr[static_cast<size_t>(ci) * ch_out], o, ch_out);
        }
    }
    return out;
}

Tensor Conv1d::backward(const Tensor& g) {
    const int t_out = g.shape[0];
    const int t_in = input_.shape[0];

    for (int t = 0; t < t_out; ++t)
        axpy(1.0, &g.data[static_cast<size_t>(t) * ch_out], grad_bias.data(), ch_out);

#pragma omp parallel for schedule(static) collapse(2)
    for (int dt = 0; dt < kernel; ++dt) {
        for (int ci = 0; ci < ch_in; ++ci) {
            double* gw = &grad_weights[(static_cast<size_t>(dt) * ch_in + ci) * ch_out];
            for (int t = 0; t < t_out; ++t)
                axpy(input_.at(t + dt, ci), &g.data[static_cast<size_t>(t) * ch_out], gw,
                     ch_out);
        }
    }

    Tensor grad_in(input_.shape);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < t_in; ++s) {
        double* gi = &grad_in.data[static_cast<size_t>(s) * ch_in];
        for (int dt = 0; dt < kernel; ++dt) {
            const int t = s - dt;
            if (t < 0 || t >= t_out) continue;
            const double* gr = &g.data[static_cast<size_t>(t) * ch_out];
            const double* wr = &weights[static_cast<size_t>(dt) * ch_in * ch_out];
            for (int ci = 0; ci < ch_in; ++ci)
                gi[ci] += dot(&wr[static_cast<size_t>(ci) * ch_out], gr, ch_out);
        }
    }
    return grad_in;
}

std::vector<ParamView> Conv1d::params() {
    return {{"weights", &weights, &grad_weights}, {"bias", &bias, &grad_bias}};
}

void Conv1d::init_params(Rng& rng) { he_uniform(weights, kernel * ch_in, rng); }

void Conv1d::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["kernel"] = kernel;
    j["ch_in"] = ch_in;
    j["ch_out"] = ch_out;
}

// ---------------------------------------------------------------- Conv2d ---

Conv2d::Conv2d(int kernel_, int ch_in_, int ch_out_)
    : kernel(kernel_), ch_in(ch_in_), ch_out(ch_out_),
      weights(static_cast<size_t>(kernel_) * kernel_ * ch_in_ * ch_out_),
      bias(ch_out_),
      grad_weights(weights.size()),
      grad_bias(ch_out_) {
    if (kernel < 1 || ch_in < 1 || ch_out < 1)
        throw std::invalid_argument("conv2d: bad hyperparameters");
}

std::vector<int> Conv2d::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 3 && in[2] == ch_in && in[0] >= kernel && in[1] >= kernel,
                "conv2d", in);
    return {in[0] - kernel + 1, in[1] - kernel + 1, ch_out};
}

Tensor Conv2d::forward(const Tensor& x, Mode, Rng*) {
    const auto out_shape = output_shape(x.shape);
    input_ = x;
    Tensor out(out_shape);
    const int h_out = out_shape[0], w_out = out_shape[1], w_in = x.shape[1];
#pragma omp parallel for schedule(static) collapse(2)
    for (int i = 0; i < h_out; ++i) {
        for (int j = 0; j < w_out; ++j) {
            double* o = &out.data[(static_cast<size_t>(i) * w_out + j) * ch_out];
            for (int co = 0; co < ch_out; ++co) o[co] = bias[co];
            for (int di = 0; di < kernel; ++di) {
                for (int dj = 0; dj < kernel; ++dj) {
                    const double* xr =
                        &x.data[(static_cast<size_t>(i + di) * w_in + (j + dj)) * ch_in];
                    const double* wr =
                        &weights[((static_cast<size_t>(di) * kernel + dj) * ch_in) * ch_out];
                    for (int ci = 0; ci < ch_in; ++ci)
                        axpy(xr[ci], &wr[static_cast<size_t>(ci) * ch_out], o, ch_out);
                }
            }
        }
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& g) {
    const int h_out = g.shape[0], w_out = g.shape[1];
    const int h_in = input_.shape[0], w_in = input_.shape[1];

    for (int i = 0; i < h_out * w_out; ++i)
        axpy(1.0, &g.data[static_cast<size_t>(i) * ch_out], grad_bias.data(), ch_out);

#pragma omp parallel for schedule(static) collapse(2)
    for (int di = 0; di < kernel; ++di) {
        for (int dj = 0; dj < kernel; ++dj) {
            for (int ci = 0; ci < ch_in; ++ci) {
                double* gw = &grad_weights[((static_cast<size_t>(di) * kernel + dj) * ch_in +
                                            ci) * ch_out];
                for (int i = 0; i < h_out; ++i)
                    for (int j = 0; j < w_out; ++j)
                        axpy(input_.at(i + di, j + dj, ci),
                             &g.data[(static_cast<size_t>(i) * w_out + j) * ch_out], gw,
                             ch_out);
            }
        }
    }

    Tensor grad_in(input_.shape);
#pragma omp parallel for schedule(static) collapse(2)
    for (int si = 0; si < h_in; ++si) {
        for (int sj = 0; sj < w_in; ++sj) {
            double* gi = &grad_in.data[(static_cast<size_t>(si) * w_in + sj) * ch_in];
            for (int di = 0; di < kernel; ++di) {
                for (int dj = 0; dj < kernel; ++dj) {
                    const int i = si - di, j = sj - dj;
                    if (i < 0 || i >= h_out || j < 0 || j >= w_out) continue;
                    const double* gr = &g.data[(static_cast<size_t>(i) * w_out + j) * ch_out];
                    const double* wr =
                        &weights[((static_cast<size_t>(di) * kernel + dj) * ch_in) * ch_out];
                    for (int ci = 0; ci < ch_in; ++ci)
                        gi[ci] += dot(&wr[static_cast<size_t>(ci) * ch_out], gr, ch_out);
                }
            }
        }
    }
    return grad_in;
}

std::vector<ParamView> Conv2d::params() {
    return {{"weights", &weights, &grad_weights}, {"bias", &bias, &grad_bias}};
}

void Conv2d::init_params(Rng& rng) { he_uniform(weights, kernel * kernel * ch_in, rng); }

void Conv2d::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["kernel"] = kernel;
    j["ch_in"] = ch_in;
    j["ch_out"] = ch_out;
}

// ---------------------------------------------------------- InstanceNorm ---

InstanceNorm::InstanceNorm(int channels_, double eps_)
    : channels(channels_), eps(eps_),
      gamma(channels_, 1.0), beta(channels_, 0.0),
      grad_gamma(channels_), grad_beta(channels_) {}

Tensor InstanceNorm::forward(const Tensor& x, Mode, Rng*) {
    check_shape(!x.shape.empty() && x.shape.back() == channels && x.size() % channels == 0,
                "instance_norm", x.shape);
    spatial_ = x.size() / channels;
    Tensor out(x.shape);
    x_hat_ = Tensor(x.shape);

    if (spatial_ == 1) {
        // Zero variance is degenerate, not an error: affine only.
        inv_std_.clear();
        for (int c = 0; c < channels; ++c) {
            x_hat_.data[c] = x.data[c];
            out.data[c] = gamma[c] * x.data[c] + beta[c];
        }
        return out;
    }

    inv_std_.assign(channels, 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        double sum = 0.0, sum2 = 0.0;
        for (int s = 0; s < spatial_; ++s) {
            const double v = x.data[static_cast<size_t>(s) * channels + c];
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / spatial_;
        const double var = std::max(0.0, sum2 / spatial_ - mean * mean);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std_[c] = inv;
        for (int s = 0; s < spatial_; ++s) {
            const size_t idx = static_cast<size_t>(s) * channels + c;
            const double xh = (x.data[idx] - mean) * inv;
            x_hat_.data[idx] = xh;
            out.data[idx] = gamma[c] * xh + beta[c];
        }
    }
    return out;
}

Tensor InstanceNorm::backward(const Tensor& g) {
    Tensor grad_in(x_hat_.shape);
    if (spatial_ == 1) {
        for (int c = 0; c < channels; ++c) {
            grad_gamma[c] += g.data[c] * x_hat_.data[c];
            grad_beta[c] += g.data[c];
            grad_in.data[c] = gamma[c] * g.data[c];
        }
        return grad_in;
    }
#pragma omp parallel for schedule(static)
    for (int c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int s = 0; s < spatial_; ++s) {
            const size_t idx = static_cast<size_t>(s) * channels + c;
            sum_g += g.data[idx];
            sum_gx += g.data[idx] * x_hat_.data[idx];
        }
        grad_gamma[c] += sum_gx;
        grad_beta[c] += sum_g;
        const double mean_g = sum_g / spatial_;
        const double mean_gx = sum_gx / spatial_;
        const double scale = gamma[c] * inv_std_[c];
        for (int s = 0; s < spatial_; ++s) {
            const size_t idx = static_cast<size_t>(s) * channels + c;
            grad_in.data[idx] = scale * (g.data[idx] - mean_g - x_hat_.data[idx] * mean_gx);
        }
    }
    return grad_in;
}

std::vector<ParamView> InstanceNorm::params() {
    return {{"gamma", &gamma, &grad_gamma}, {"beta", &beta, &grad_beta}};
}

void InstanceNorm::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["channels"] = channels;
    j["eps"] = eps;
}

// ------------------------------------------------------------ Relu / Sig ---

Tensor Relu::forward(const Tensor& x, Mode, Rng*) {
    input_ = x;
    Tensor out(x.shape);
    for (int i = 0; i < x.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    return out;
}

Tensor Relu::backward(const Tensor& g) {
    Tensor grad_in(input_.shape);
    for (int i = 0; i < g.size(); ++i)
        grad_in.data[i] = input_.data[i] > 0.0 ? g.data[i] : 0.0;
    return grad_in;
}

Tensor Sigmoid::forward(const Tensor& x, Mode, Rng*) {
    output_ = Tensor(x.shape);
    for (int i = 0; i < x.size(); ++i) output_.data[i] = sigmoid_scalar(x.data[i]);
    return output_;
}

Tensor Sigmoid::backward(const Tensor& g) {
    Tensor grad_in(output_.shape);
    for (int i = 0; i < g.size(); ++i) {
        const double y = output_.data[i];
        grad_in.data[i] = g.data[i] * y * (1.0 - y);
    }
    return grad_in;
}

// --------------------------------------------------------------- Dropout ---

Dropout::Dropout(double rate_) : rate(rate_) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng* rng) {
    if (mode == Mode::Infer || rate == 0.0) {
        mask_.clear();
        return x;
    }
    if (rng == nullptr) throw std::invalid_argument("dropout: training pass needs an rng");
    const double keep = 1.0 - rate;
    mask_.resize(x.size());
    Tensor out(x.shape);
    for (int i = 0; i < x.size(); ++i) {
        mask_[i] = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        out.data[i] = x.data[i] * mask_[i];
    }
    return out;
}

Tensor Dropout::backward(const Tensor& g) {
    Tensor grad_in(g.shape);
    if (mask_.empty()) {
        grad_in.data = g.data;
        return grad_in;
    }
    for (int i = 0; i < g.size(); ++i) grad_in.data[i] = g.data[i] * mask_[i];
    return grad_in;
}

void Dropout::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["rate"] = rate;
}

// --------------------------------------------------------------- MaxPool ---

namespace {
int pooled_len(int len, int k) { return len < k ? 1 : len / k; }
}

MaxPool1d::MaxPool1d(int kernel_) : kernel(kernel_) {
    if (kernel < 1) throw std::invalid_argument("maxpool1d: kernel must be >= 1");
}

std::vector<int> MaxPool1d::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 2, "maxpool1d", in);
    return {pooled_len(in[0], kernel), in[1]};
}

Tensor MaxPool1d::forward(const Tensor& x, Mode, Rng*) {
    const auto out_shape = output_shape(x.shape);
    in_shape_ = x.shape;
    const int len = x.shape[0], ch = x.shape[1], n_out = out_shape[0];
    Tensor out(out_shape);
    argmax_.assign(static_cast<size_t>(n_out) * ch, 0);
    for (int t = 0; t < n_out; ++t) {
        const int begin = t * kernel;
        const int end = std::min(len, begin + kernel);
        for (int c = 0; c < ch; ++c) {
            int best = begin;
            double best_v = x.at(begin, c);
            for (int s = begin + 1; s < end; ++s)
                if (x.at(s, c) > best_v) { best_v = x.at(s, c); best = s; }
            out.at(t, c) = best_v;
            argmax_[static_cast<size_t>(t) * ch + c] = best * ch + c;
        }
    }
    return out;
}

Tensor MaxPool1d::backward(const Tensor& g) {
    Tensor grad_in(in_shape_);
    for (int i = 0; i < g.size(); ++i) grad_in.data[argmax_[i]] += g.data[i];
    return grad_in;
}

void MaxPool1d::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["kernel"] = kernel;
}

MaxPool2d::MaxPool2d(int kernel_h_, int kernel_w_) : kernel_h(kernel_h_), kernel_w(kernel_w_) {
    if (kernel_h < 1 || kernel_w < 1)
        throw std::invalid_argument("maxpool2d: kernels must be >= 1");
}

std::vector<int> MaxPool2d::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 3, "maxpool2d", in);
    return {pooled_len(in[0], kernel_h), pooled_len(in[1], kernel_w), in[2]};
}

Tensor MaxPool2d::forward(const Tensor& x, Mode, Rng*) {
    const auto out_shape = output_shape(x.shape);
    in_shape_ = x.shape;
    const int h = x.shape[0], w = x.shape[1], ch = x.shape[2];
    const int n_h = out_shape[0], n_w = out_shape[1];
    Tensor out(out_shape);
    argmax_.assign(static_cast<size_t>(n_h) * n_w * ch, 0);
    for (int i = 0; i < n_h; ++i) {
        const int i0 = i * kernel_h;
        const int i1 = std::min(h, i0 + kernel_h);
        for (int j = 0; j < n_w; ++j) {
            const int j0 = j * kernel_w;
            const int j1 = std::min(w, j0 + kernel_w);
            for (int c = 0; c < ch; ++c) {
                int best_i = i0, best_j = j0;
                double best_v = x.at(i0, j0, c);
                for (int si = i0; si < i1; ++si)
                    for (int sj = j0; sj < j1; ++sj)
                        if (x.at(si, sj, c) > best_v) {
                            best_v = x.at(si, sj, c);
                            best_i = si;
                            best_j = sj;
                        }
                out.at(i, j, c) = best_v;
                argmax_[(static_cast<size_t>(i) * n_w + j) * ch + c] =
                    (best_i * w + best_j) * ch + c;
            }
        }
    }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& g) {
    Tensor grad_in(in_shape_);
    for (int i = 0; i < g.size(); ++i) grad_in.data[argmax_[i]] += g.data[i];
    return grad_in;
}

void MaxPool2d::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["kernel_h"] = kernel_h;
    j["kernel_w"] = kernel_w;
}

// --------------------------------------------------------------- Flatten ---

std::vector<int> Flatten::output_shape(const std::vector<int>& in) const {
    return {shape_size(in)};
}

Tensor Flatten::forward(const Tensor& x, Mode, Rng*) {
    in_shape_ = x.shape;
    Tensor out;
    out.shape = {x.size()};
    out.data = x.data;
    return out;
}

Tensor Flatten::backward(const Tensor& g) {
    Tensor grad_in;
    grad_in.shape = in_shape_;
    grad_in.data = g.data;
    return grad_in;
}

// --------------------------------------------------------------- Reshape ---

Reshape::Reshape(std::vector<int> target_) : target(std::move(target_)) {
    shape_size(target);  // validates positivity
}

std::vector<int> Reshape::output_shape(const std::vector<int>& in) const {
    check_shape(shape_size(in) == shape_size(target), "reshape", in);
    return target;
}

Tensor Reshape::forward(const Tensor& x, Mode, Rng*) {
    check_shape(x.size() == shape_size(target), "reshape", x.shape);
    in_shape_ = x.shape;
    Tensor out;
    out.shape = target;
    out.data = x.data;
    return out;
}

Tensor Reshape::backward(const Tensor& g) {
    Tensor grad_in;
    grad_in.shape = in_shape_;
    grad_in.data = g.data;
    return grad_in;
}

void Reshape::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["target"] = target;
}

// ----------------------------------------------------------------- Dense ---

Dense::Dense(int in_features_, int out_features_)
    : in_features(in_features_), out_features(out_features_),
      weights(static_cast<size_t>(in_features_) * out_features_),
      bias(out_features_),
      grad_weights(weights.size()),
      grad_bias(out_features_) {
    if (in_features < 1 || out_features < 1)
        throw std::invalid_argument("dense: bad dimensions");
}

std::vector<int> Dense::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 1 && in[0] == in_features, "dense", in);
    return {out_features};
}

Tensor Dense::forward(const Tensor& x, Mode, Rng*) {
    check_shape(x.rank() == 1 && x.size() == in_features, "dense", x.shape);
    input_ = x;
    Tensor out({out_features});
    for (int o = 0; o < out_features; ++o) out.data[o] = bias[o];
    for (int i = 0; i < in_features; ++i)
        axpy(x.data[i], &weights[static_cast<size_t>(i) * out_features], out.data.data(),
             out_features);
    return out;
}

Tensor Dense::backward(const Tensor& g) {
    axpy(1.0, g.data.data(), grad_bias.data(), out_features);
    Tensor grad_in({in_features});
    for (int i = 0; i < in_features; ++i) {
        double* gw = &grad_weights[static_cast<size_t>(i) * out_features];
        axpy(input_.data[i], g.data.data(), gw, out_features);
        grad_in.data[i] = dot(&weights[static_cast<size_t>(i) * out_features], g.data.data(),
                              out_features);
    }
    return grad_in;
}

std::vector<ParamView> Dense::params() {
    return {{"weights", &weights, &grad_weights}, {"bias", &bias, &grad_bias}};
}

void Dense::init_params(Rng& rng) { he_uniform(weights, in_features, rng); }

void Dense::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["in_features"] = in_features;
    j["out_features"] = out_features;
}

// ------------------------------------------------------------------ LSTM ---

void lstm_step(const double* x, const double* h_prev, const double* c_prev,
               const LstmWeights& w, double* h_out, double* c_out, double* gates_out) {
    const int u = w.units;
    const int g4 = 4 * u;
    for (int k = 0; k < g4; ++k) gates_out[k] = w.b[k];
    for (int i = 0; i < w.input_size; ++i)
        axpy(x[i], &w.wx[static_cast<size_t>(i) * g4], gates_out, g4);
    for (int j = 0; j < u; ++j)
        axpy(h_prev[j], &w.wh[static_cast<size_t>(j) * g4], gates_out, g4);
    for (int k = 0; k < u; ++k) {
        const double i_g = sigmoid_scalar(gates_out[k]);
        const double f_g = sigmoid_scalar(gates_out[u + k]);
        const double g_g = std::tanh(gates_out[2 * u + k]);
        const double o_g = sigmoid_scalar(gates_out[3 * u + k]);
        gates_out[k] = i_g;
        gates_out[u + k] = f_g;
        gates_out[2 * u + k] = g_g;
        gates_out[3 * u + k] = o_g;
        c_out[k] = f_g * c_prev[k] + i_g * g_g;
        h_out[k] = o_g * std::tanh(c_out[k]);
    }
}

Lstm::Lstm(int input_size_, int units_)
    : input_size(input_size_), units(units_),
      wx(static_cast<size_t>(input_size_) * 4 * units_),
      wh(static_cast<size_t>(units_) * 4 * units_),
      bias(static_cast<size_t>(4) * units_),
      grad_wx(wx.size()), grad_wh(wh.size()), grad_bias(bias.size()) {
    if (input_size < 1 || units < 1) throw std::invalid_argument("lstm: bad dimensions");
}

std::vector<int> Lstm::output_shape(const std::vector<int>& in) const {
    check_shape(in.size() == 2 && in[1] == input_size && in[0] >= 1, "lstm", in);
    return {in[0], units};
}

Tensor Lstm::forward(const Tensor& x, Mode, Rng*) {
    const auto out_shape = output_shape(x.shape);
    input_ = x;
    steps_ = x.shape[0];
    const int u = units;
    gates_.assign(static_cast<size_t>(steps_) * 4 * u, 0.0);
    cells_.assign(static_cast<size_t>(steps_) * u, 0.0);
    tanh_c_.assign(static_cast<size_t>(steps_) * u, 0.0);
    hidden_.assign(static_cast<size_t>(steps_) * u, 0.0);

    std::vector<double> zero(u, 0.0);
    const LstmWeights w{wx.data(), wh.data(), bias.data(), input_size, units};
    for (int t = 0; t < steps_; ++t) {
        const double* h_prev = t == 0 ? zero.data() : &hidden_[static_cast<size_t>(t - 1) * u];
        const double* c_prev = t == 0 ? zero.data() : &cells_[static_cast<size_t>(t - 1) * u];
        lstm_step(&x.data[static_cast<size_t>(t) * input_size], h_prev, c_prev, w,
                  &hidden_[static_cast<size_t>(t) * u], &cells_[static_cast<size_t>(t) * u],
                  &gates_[static_cast<size_t>(t) * 4 * u]);
        for (int k = 0; k < u; ++k)
            tanh_c_[static_cast<size_t>(t) * u + k] =
                std::tanh(cells_[static_cast<size_t>(t) * u + k]);
    }

    Tensor out(out_shape);
    out.data = hidden_;
    return out;
}

Tensor Lstm::backward(const Tensor& g) {
    const int u = units;
    const int g4 = 4 * u;
    Tensor grad_in(input_.shape);
    std::vector<double> dh(u, 0.0), dc(u, 0.0), dgate(g4, 0.0);

    for (int t = steps_ - 1; t >= 0; --t) {
        const double* gates = &gates_[static_cast<size_t>(t) * g4];
        const double* tc = &tanh_c_[static_cast<size_t>(t) * u];
        const double* c_prev =
            t == 0 ? nullptr : &cells_[static_cast<size_t>(t - 1) * u];
        const double* h_prev =
            t == 0 ? nullptr : &hidden_[static_cast<size_t>(t - 1) * u];

        for (int k = 0; k < u; ++k) {
            const double i_g = gates[k], f_g = gates[u + k], g_g = gates[2 * u + k],
                         o_g = gates[3 * u + k];
            const double dht = dh[k] + g.at(t, k);
            const double dct = dc[k] + dht * o_g * (1.0 - tc[k] * tc[k]);
            const double cp = t == 0 ? 0.0 : c_prev[k];
            dgate[k] = dct * g_g * i_g * (1.0 - i_g);               // input gate pre-act
            dgate[u + k] = dct * cp * f_g * (1.0 - f_g);            // forget gate pre-act
            dgate[2 * u + k] = dct * i_g * (1.0 - g_g * g_g);       // candidate pre-act
            dgate[3 * u + k] = dht * tc[k] * o_g * (1.0 - o_g);     // output gate pre-act
            dc[k] = dct * f_g;
        }

        axpy(1.0, dgate.data(), grad_bias.data(), g4);
        const double* xt = &input_.data[static_cast<size_t>(t) * input_size];
        for (int i = 0; i < input_size; ++i)
            axpy(xt[i], dgate.data(), &grad_wx[static_cast<size_t>(i) * g4], g4);
        if (t > 0)
            for (int j = 0; j < u; ++j)
                axpy(h_prev[j], dgate.data(), &grad_wh[static_cast<size_t>(j) * g4], g4);

        double* gi = &grad_in.data[static_cast<size_t>(t) * input_size];
        for (int i = 0; i < input_size; ++i)
            gi[i] = dot(&wx[static_cast<size_t>(i) * g4], dgate.data(), g4);
        if (t > 0)
            for (int j = 0; j < u; ++j)
                dh[j] = dot(&wh[static_cast<size_t>(j) * g4], dgate.data(), g4);
    }
    return grad_in;
}

std::vector<ParamView> Lstm::params() {
    return {{"wx", &wx, &grad_wx}, {"wh", &wh, &grad_wh}, {"bias", &bias, &grad_bias}};
}

void Lstm::init_params(Rng& rng) {
    he_uniform(wx, input_size, rng);
    he_uniform(wh, units, rng);
    // Forget-gate bias starts open so early gradients flow through time.
    std::fill(bias.begin(), bias.end(), 0.0);
    for (int k = 0; k < units; ++k) bias[units + k] = 1.0;
}

void Lstm::describe(nlohmann::json& j) const {
    j["kind"] = kind();
    j["input_size"] = input_size;
    j["units"] = units;
}

}  // namespace gatepose::neural
