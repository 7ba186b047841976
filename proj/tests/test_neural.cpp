#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "gatepose/errors.hpp"
#include "gatepose/neural/network.hpp"
#include "gatepose/neural/optimizer.hpp"
#include "gatepose/neural/serialize.hpp"
#include "gatepose/neural/train.hpp"

using namespace gatepose;
using namespace gatepose::neural;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

/// Loss of the net on (x, y) with dropout masks pinned by reseeding.
double pinned_loss(Network& net, const Tensor& x, double y, uint64_t mask_seed) {
    Rng rng(mask_seed);
    const Tensor out = net.forward(x, Mode::Train, &rng);
    return bce_loss(out.data[0], y);
}

/**
 * Central finite differences (step 1e-5) against the recorded gradients for
 * every parameter and for the input; returns the worst relative error.
 */
double gradient_check(Network& net, const Tensor& x, double y, uint64_t mask_seed = 123) {
    const double h = 1e-5;
    net.zero_grads();
    Rng rng(mask_seed);
    const Tensor out = net.forward(x, Mode::Train, &rng);
    Tensor g({1});
    g.data[0] = bce_grad(out.data[0], y);
    const Tensor grad_in = net.backward(g);

    double worst = 0.0;
    const auto rel = [&](double analytic, double fd) {
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
        return std::abs(analytic - fd) / denom;
    };

    for (const ParamView& p : net.params()) {
        for (size_t i = 0; i < p.value->size(); ++i) {
            const double saved = (*p.value)[i];
            (*p.value)[i] = saved + h;
            const double lp = pinned_loss(net, x, y, mask_seed);
            (*p.value)[i] = saved - h;
            const double lm = pinned_loss(net, x, y, mask_seed);
            (*p.value)[i] = saved;
            worst = std::max(worst, rel((*p.grad)[i], (lp - lm) / (2.0 * h)));
        }
    }
    Tensor xx = x;
    for (int i = 0; i < xx.size(); ++i) {
        const double saved = xx.data[i];
        xx.data[i] = saved + h;
        const double lp = pinned_loss(net, xx, y, mask_seed);
        xx.data[i] = saved - h;
        const double lm = pinned_loss(net, xx, y, mask_seed);
        xx.data[i] = saved;
        worst = std::max(worst, rel(grad_in.data[i], (lp - lm) / (2.0 * h)));
    }
    return worst;
}

}  // namespace

// ------------------------------------------------------------ layer math ---

TEST_CASE("conv1d: identity kernel passes the signal through") {
    Conv1d conv(3, 1, 1);
    conv.weights = {0.0, 1.0, 0.0};
    const Tensor out = conv.forward(Tensor::of({5, 1}, {0, 0, 1, 0, 0}), Mode::Infer, nullptr);
    CHECK(out.shape == std::vector<int>{3, 1});
    CHECK(out.data == std::vector<double>{0, 1, 0});
}

TEST_CASE("conv1d: hand cross-correlation") {
    Conv1d conv(2, 1, 1);
    conv.weights = {1.0, 1.0};
    const Tensor out = conv.forward(Tensor::of({3, 1}, {1, 2, 3}), Mode::Infer, nullptr);
    CHECK(out.data == std::vector<double>{3, 5});
}

TEST_CASE("conv1d: zero kernel, zero bias") {
    Conv1d conv(2, 1, 2);
    const Tensor out = conv.forward(Tensor::of({4, 1}, {1, 2, 3, 4}), Mode::Infer, nullptr);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d: corner kernel shifts the window") {
    Conv2d conv(2, 1, 1);
    conv.weights = {1.0, 0.0, 0.0, 0.0};  // picks the top-left of each 2x2 window
    const Tensor out =
        conv.forward(Tensor::of({3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9}), Mode::Infer, nullptr);
    CHECK(out.shape == std::vector<int>{2, 2, 1});
    CHECK(out.data == std::vector<double>{1, 2, 4, 5});
}

TEST_CASE("conv2d: 1x1 unit kernel is the identity") {
    Conv2d conv(1, 1, 1);
    conv.weights = {1.0};
    const Tensor in = Tensor::of({2, 2, 1}, {4, 3, 2, 1});
    const Tensor out = conv.forward(in, Mode::Infer, nullptr);
    CHECK(out.data == in.data);
}

TEST_CASE("conv2d: zero kernel gives zero output") {
    Conv2d conv(2, 2, 3);
    Rng rng(5);
    const Tensor out = conv.forward(random_tensor({4, 4, 2}, rng), Mode::Infer, nullptr);
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("instance_norm: closed-form two-point normalization") {
    InstanceNorm in(1, 1e-12);
    const Tensor out = in.forward(Tensor::of({2, 1}, {1, 3}), Mode::Infer, nullptr);
    CHECK(out.data[0] == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(out.data[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("instance_norm: constant input collapses to beta") {
    InstanceNorm in(2);
    const Tensor out = in.forward(Tensor::of({3, 2}, {5, 7, 5, 7, 5, 7}), Mode::Infer, nullptr);
    for (double v : out.data) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("instance_norm: gamma 0 yields beta everywhere") {
    InstanceNorm in(2);
    in.gamma = {0.0, 0.0};
    in.beta = {0.25, -0.5};
    Rng rng(6);
    const Tensor out = in.forward(random_tensor({4, 2}, rng), Mode::Infer, nullptr);
    for (int s = 0; s < 4; ++s) {
        CHECK(out.at(s, 0) == 0.25);
        CHECK(out.at(s, 1) == -0.5);
    }
}

TEST_CASE("instance_norm: length-1 axis passes through the affine only") {
    InstanceNorm in(3);
    in.gamma = {2.0, 2.0, 2.0};
    in.beta = {1.0, 1.0, 1.0};
    const Tensor out = in.forward(Tensor::of({1, 3}, {1, 2, 3}), Mode::Infer, nullptr);
    CHECK(out.data == std::vector<double>{3, 5, 7});
}

TEST_CASE("instance_norm: normalized statistics") {
    InstanceNorm in(4, 1e-9);
    Rng rng(17);
    const Tensor out = in.forward(random_tensor({64, 4}, rng, -3.0, 5.0), Mode::Infer, nullptr);
    for (int c = 0; c < 4; ++c) {
        double sum = 0.0, sum2 = 0.0;
        for (int s = 0; s < 64; ++s) {
            sum += out.at(s, c);
            sum2 += out.at(s, c) * out.at(s, c);
        }
        const double mean = sum / 64;
        const double var = sum2 / 64 - mean * mean;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("sigmoid(0) is one half") {
    Sigmoid s;
    const Tensor out = s.forward(Tensor::of({1}, {0.0}), Mode::Infer, nullptr);
    CHECK(out.data[0] == 0.5);
}

TEST_CASE("maxpool1d: windowed max by hand") {
    MaxPool1d pool(2);
    const Tensor out = pool.forward(Tensor::of({4, 1}, {1, 5, 2, 3}), Mode::Infer, nullptr);
    CHECK(out.data == std::vector<double>{5, 3});
}

TEST_CASE("maxpool1d: input shorter than the kernel keeps one window") {
    MaxPool1d pool(2);
    const Tensor out = pool.forward(Tensor::of({1, 3}, {7, 8, 9}), Mode::Infer, nullptr);
    CHECK(out.shape == std::vector<int>{1, 3});
    CHECK(out.data == std::vector<double>{7, 8, 9});
}

TEST_CASE("dropout: inference is the identity") {
    Dropout d(0.5);
    Rng rng(3);
    const Tensor in = random_tensor({8}, rng);
    const Tensor out = d.forward(in, Mode::Infer, nullptr);
    CHECK(out.data == in.data);
}

TEST_CASE("dropout: inverted scaling is unbiased within 2%") {
    Dropout d(0.2);
    Rng rng(77);
    const Tensor in = Tensor::of({1}, {1.0});
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += d.forward(in, Mode::Train, &rng).data[0];
    CHECK(std::abs(sum / n - 1.0) < 0.02);
}

TEST_CASE("lstm_step: zero weights kill the candidate") {
    const int u = 2;
    std::vector<double> wx(3 * 4 * u, 0.0), wh(u * 4 * u, 0.0), b(4 * u, 0.0);
    std::vector<double> x{1.0, -2.0, 0.5}, h0(u, 0.0), c0(u, 0.0), h(u), c(u), gates(4 * u);
    lstm_step(x.data(), h0.data(), c0.data(), {wx.data(), wh.data(), b.data(), 3, u}, h.data(),
              c.data(), gates.data());
    for (int k = 0; k < u; ++k) {
        CHECK(h[k] == 0.0);
        CHECK(c[k] == 0.0);
    }
}

TEST_CASE("lstm_step: zero weights with unit cell state") {
    const int u = 2;
    std::vector<double> wx(1 * 4 * u, 0.0), wh(u * 4 * u, 0.0), b(4 * u, 0.0);
    std::vector<double> x{0.3}, h0(u, 0.0), c0(u, 1.0), h(u), c(u), gates(4 * u);
    lstm_step(x.data(), h0.data(), c0.data(), {wx.data(), wh.data(), b.data(), 1, u}, h.data(),
              c.data(), gates.data());
    for (int k = 0; k < u; ++k) {
        CHECK(c[k] == doctest::Approx(0.5).epsilon(1e-12));          // f*c0 = 0.5*1
        CHECK(h[k] == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-12));
    }
}

TEST_CASE("lstm layer: 18 identical inputs match the repeated-step closed form") {
    const int f = 3, u = 4, t_steps = 18;
    Lstm layer(f, u);
    Rng rng(21);
    layer.init_params(rng);

    Tensor x({t_steps, f});
    const std::vector<double> row{0.4, -0.7, 1.1};
    for (int t = 0; t < t_steps; ++t)
        for (int i = 0; i < f; ++i) x.at(t, i) = row[i];
    const Tensor out = layer.forward(x, Mode::Infer, nullptr);

    const LstmWeights w{layer.wx.data(), layer.wh.data(), layer.bias.data(), f, u};
    std::vector<double> h(u, 0.0), c(u, 0.0), h2(u), c2(u), gates(4 * u);
    for (int t = 0; t < t_steps; ++t) {
        lstm_step(row.data(), h.data(), c.data(), w, h2.data(), c2.data(), gates.data());
        h = h2;
        c = c2;
        for (int k = 0; k < u; ++k) REQUIRE(out.at(t, k) == doctest::Approx(h[k]).epsilon(1e-12));
    }
}

// ------------------------------------------------------------------ loss ---

TEST_CASE("bce_loss: reference values") {
    CHECK(bce_loss(1.0 - 1e-7, 1.0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(bce_loss(0.5, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-6));  // clamp handles p=1
}

// ------------------------------------------------------------------ adam ---

TEST_CASE("adam_step: first step moves by about lr in the gradient direction") {
    std::vector<double> p{1.0}, g{0.04}, m{0.0}, v{0.0};
    adam_step(p, g, m, v, 1, {});
    CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-4));  // -lr * sign(g)

    std::vector<double> pn{1.0}, gn{-2.5}, mn{0.0}, vn{0.0};
    adam_step(pn, gn, mn, vn, 1, {});
    CHECK(pn[0] == doctest::Approx(1.0 + 1e-3).epsilon(1e-4));
}

TEST_CASE("adam_step: zero gradient from zero state leaves the parameter alone") {
    std::vector<double> p{2.5}, g{0.0}, m{0.0}, v{0.0};
    adam_step(p, g, m, v, 1, {});
    CHECK(p[0] == 2.5);
}

TEST_CASE("adam_step: repeated identical steps do not grow") {
    std::vector<double> p{0.0}, g{1.0}, m{0.0}, v{0.0};
    adam_step(p, g, m, v, 1, {});
    const double d1 = std::abs(p[0]);
    const double before = p[0];
    adam_step(p, g, m, v, 2, {});
    const double d2 = std::abs(p[0] - before);
    CHECK(d2 <= d1 + 1e-9);
}

// -------------------------------------------------------- gradient checks ---

TEST_CASE("gradient check: dense + sigmoid matches the analytic (p-y)x") {
    Network net({3});
    net.emplace<Dense>(3, 1);
    net.emplace<Sigmoid>();
    Rng rng(1);
    net.init_params(rng);

    const Tensor x = Tensor::of({3}, {0.2, -1.3, 0.7});
    net.zero_grads();
    Rng fwd(2);
    const Tensor out = net.forward(x, Mode::Train, &fwd);
    Tensor g({1});
    g.data[0] = bce_grad(out.data[0], 1.0);
    net.backward(g);

    const double p = out.data[0];
    auto params = net.params();  // dense weights first
    for (int i = 0; i < 3; ++i)
        CHECK((*params[0].grad)[i] == doctest::Approx((p - 1.0) * x.data[i]).epsilon(1e-6));
    CHECK((*params[1].grad)[0] == doctest::Approx(p - 1.0).epsilon(1e-6));
}

TEST_CASE("gradient check: conv1d") {
    Network net({6, 2});
    net.emplace<Conv1d>(3, 2, 4);
    net.emplace<Flatten>();
    net.emplace<Dense>(4 * 4, 1);
    net.emplace<Sigmoid>();
    Rng rng(11);
    net.init_params(rng);
    const Tensor x = random_tensor({6, 2}, rng);
    CHECK(gradient_check(net, x, 1.0) < 1e-4);
}

TEST_CASE("gradient check: conv2d") {
    Network net({4, 3, 2});
    net.emplace<Conv2d>(2, 2, 3);
    net.emplace<Flatten>();
    net.emplace<Dense>(3 * 2 * 3, 1);
    net.emplace<Sigmoid>();
    Rng rng(12);
    net.init_params(rng);
    const Tensor x = random_tensor({4, 3, 2}, rng);
    CHECK(gradient_check(net, x, 0.0) < 1e-4);
}

TEST_CASE("gradient check: instance_norm") {
    Network net({5, 3});
    net.emplace<InstanceNorm>(3);
    net.emplace<Flatten>();
    net.emplace<Dense>(15, 1);
    net.emplace<Sigmoid>();
    Rng rng(13);
    net.init_params(rng);
    // nudge gamma/beta off their defaults so their gradients are exercised
    auto params = net.params();
    for (double& v : *params[0].value) v = 1.0 + rng.uniform(-0.3, 0.3);
    for (double& v : *params[1].value) v = rng.uniform(-0.3, 0.3);
    const Tensor x = random_tensor({5, 3}, rng);
    CHECK(gradient_check(net, x, 1.0) < 1e-4);
}

TEST_CASE("gradient check: relu") {
    Network net({7});
    net.emplace<Relu>();
    net.emplace<Dense>(7, 1);
    net.emplace<Sigmoid>();
    Rng rng(14);
    net.init_params(rng);
    const Tensor x = random_tensor({7}, rng);
    CHECK(gradient_check(net, x, 0.0) < 1e-4);
}

TEST_CASE("gradient check: dropout with a pinned mask") {
    Network net({9});
    net.emplace<Dropout>(0.3);
    net.emplace<Dense>(9, 1);
    net.emplace<Sigmoid>();
    Rng rng(15);
    net.init_params(rng);
    const Tensor x = random_tensor({9}, rng);
    CHECK(gradient_check(net, x, 1.0) < 1e-4);
}

TEST_CASE("gradient check: maxpool1d") {
    Network net({8, 2});
    net.emplace<MaxPool1d>(2);
    net.emplace<Flatten>();
    net.emplace<Dense>(8, 1);
    net.emplace<Sigmoid>();
    Rng rng(16);
    net.init_params(rng);
    const Tensor x = random_tensor({8, 2}, rng);
    CHECK(gradient_check(net, x, 0.0) < 1e-4);
}

TEST_CASE("gradient check: maxpool2d") {
    Network net({4, 4, 2});
    net.emplace<MaxPool2d>(2, 2);
    net.emplace<Flatten>();
    net.emplace<Dense>(8, 1);
    net.emplace<Sigmoid>();
    Rng rng(17);
    net.init_params(rng);
    const Tensor x = random_tensor({4, 4, 2}, rng);
    CHECK(gradient_check(net, x, 1.0) < 1e-4);
}

TEST_CASE("gradient check: lstm through time") {
    Network net({5, 3});
    net.emplace<Lstm>(3, 4);
    net.emplace<Flatten>();
    net.emplace<Dense>(20, 1);
    net.emplace<Sigmoid>();
    Rng rng(18);
    net.init_params(rng);
    const Tensor x = random_tensor({5, 3}, rng);
    CHECK(gradient_check(net, x, 1.0) < 1e-4);
}

TEST_CASE("gradient check: the full small stack") {
    Network net({20, 1});
    net.emplace<Conv1d>(3, 1, 4);
    net.emplace<InstanceNorm>(4);
    net.emplace<Relu>();
    net.emplace<Dropout>(0.2);
    net.emplace<MaxPool1d>(2);
    net.emplace<Flatten>();
    net.emplace<Dense>(9 * 4, 1);
    net.emplace<Sigmoid>();
    Rng rng(19);
    net.init_params(rng);
    const Tensor x = random_tensor({20, 1}, rng);
    CHECK(gradient_check(net, x, 0.0) < 1e-4);
}

TEST_CASE("zero input leaves input-fed weights with zero gradients") {
    Network net({4});
    net.emplace<Dense>(4, 1);
    net.emplace<Sigmoid>();
    Rng rng(20);
    net.init_params(rng);
    net.zero_grads();
    const Tensor x({4}, 0.0);
    const Tensor out = net.forward(x, Mode::Train, &rng);
    Tensor g({1});
    g.data[0] = bce_grad(out.data[0], 1.0);
    net.backward(g);
    const auto params = net.params();
    for (double gw : *params[0].grad) CHECK(gw == 0.0);   // weights see zero input
    CHECK((*params[1].grad)[0] != 0.0);                   // bias still learns
}

// ----------------------------------------------------------------- train ---

TEST_CASE("train: linearly separable toy set reaches accuracy 1.0") {
    Network net({2});
    net.emplace<Dense>(2, 1);
    net.emplace<Sigmoid>();
    Rng rng(30);
    net.init_params(rng);

    std::vector<Tensor> xs;
    std::vector<double> ys;
    Rng data_rng(31);
    for (int i = 0; i < 200; ++i) {
        const double cls = i % 2;
        const double cx = cls ? 2.0 : -2.0;
        xs.push_back(Tensor::of({2}, {cx + data_rng.uniform(-0.5, 0.5),
                                      cx + data_rng.uniform(-0.5, 0.5)}));
        ys.push_back(cls);
    }
    TrainConfig cfg;
    cfg.batch_size = 20;
    cfg.max_epochs = 20;
    cfg.seed = 32;
    train(net, xs, ys, cfg);
    CHECK(accuracy(net, xs, ys) == 1.0);
}

TEST_CASE("train: constant labels collapse to a confident bias") {
    Network net({2});
    net.emplace<Dense>(2, 1);
    net.emplace<Sigmoid>();
    Rng rng(33);
    net.init_params(rng);
    std::vector<Tensor> xs;
    std::vector<double> ys;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(random_tensor({2}, rng));
        ys.push_back(1.0);
    }
    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.max_epochs = 30;
    cfg.seed = 34;
    cfg.adam.lr = 0.05;
    train(net, xs, ys, cfg);
    double mean_p = 0.0;
    for (const auto& x : xs) mean_p += net.predict(x);
    CHECK(mean_p / xs.size() > 0.95);
}

TEST_CASE("train: identical seeds give identical loss curves and weights") {
    const auto build = [] {
        Network net({3});
        net.emplace<Dense>(3, 2);
        net.emplace<Relu>();
        net.emplace<Dense>(2, 1);
        net.emplace<Sigmoid>();
        Rng rng(35);
        net.init_params(rng);
        return net;
    };
    std::vector<Tensor> xs;
    std::vector<double> ys;
    Rng rng(36);
    for (int i = 0; i < 60; ++i) {
        xs.push_back(random_tensor({3}, rng));
        ys.push_back(i % 2);
    }
    TrainConfig cfg;
    cfg.batch_size = 7;  // leaves a remainder batch
    cfg.max_epochs = 5;
    cfg.seed = 37;

    Network a = build();
    Network b = build();
    const TrainResult ra = train(a, xs, ys, cfg);
    const TrainResult rb = train(b, xs, ys, cfg);
    REQUIRE(ra.epoch_mean_loss.size() == rb.epoch_mean_loss.size());
    for (size_t i = 0; i < ra.epoch_mean_loss.size(); ++i)
        REQUIRE(ra.epoch_mean_loss[i] == rb.epoch_mean_loss[i]);
    auto pa = a.params(), pb = b.params();
    for (size_t k = 0; k < pa.size(); ++k) REQUIRE(*pa[k].value == *pb[k].value);
}

TEST_CASE("train: label validation and divergence reporting") {
    Network net({1});
    net.emplace<Dense>(1, 1);
    net.emplace<Sigmoid>();
    std::vector<Tensor> xs{Tensor::of({1}, {1.0})};
    CHECK_THROWS_AS(train(net, xs, {0.5}, TrainConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(train(net, {}, {}, TrainConfig{}), std::invalid_argument);
}

// ------------------------------------------------------------- serialize ---

TEST_CASE("serialize: manifest + blob round trip preserves structure and weights") {
    Network net({6, 1});
    net.emplace<Conv1d>(3, 1, 2);
    net.emplace<InstanceNorm>(2);
    net.emplace<Relu>();
    net.emplace<MaxPool1d>(2);
    net.emplace<Flatten>();
    net.emplace<Dense>(4, 1);
    net.emplace<Sigmoid>();
    Rng rng(40);
    net.init_params(rng);

    const auto dir = std::filesystem::temp_directory_path() / "gatepose_ser_test";
    std::filesystem::create_directories(dir);
    save_network(net, dir / "m.json", dir / "m.bin");
    Network loaded = load_network(dir / "m.json", dir / "m.bin");

    CHECK(loaded.input_shape() == net.input_shape());
    CHECK(loaded.shape_trace() == net.shape_trace());
    Rng xr(41);
    const Tensor x = random_tensor({6, 1}, xr);
    // float32 round trip: predictions agree to single precision
    CHECK(loaded.predict(x) == doctest::Approx(net.predict(x)).epsilon(1e-5));

    std::filesystem::remove_all(dir);
}

TEST_CASE("serialize: truncated blob is rejected") {
    Network net({2});
    net.emplace<Dense>(2, 1);
    net.emplace<Sigmoid>();
    Rng rng(42);
    net.init_params(rng);
    const auto dir = std::filesystem::temp_directory_path() / "gatepose_ser_test2";
    std::filesystem::create_directories(dir);
    save_network(net, dir / "m.json", dir / "m.bin");
    std::filesystem::resize_file(dir / "m.bin", 4);
    CHECK_THROWS_AS(load_network(dir / "m.json", dir / "m.bin"), IoError);
    std::filesystem::remove_all(dir);
}
