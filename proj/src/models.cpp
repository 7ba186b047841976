#include "gatepose/models.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gatepose/errors.hpp"
#include "gatepose/neural/serialize.hpp"

namespace gatepose::models {

using neural::Network;
using nlohmann::json;

Network build_los_classifier(int input_len) {
    if (input_len < 64)
        throw std::invalid_argument("build_los_classifier: input too short for the stack");
    Network net({input_len, 1});
    const int kernels[4] = {5, 11, 17, 5};
    const int filters[4] = {64, 128, 256, 512};
    int ch = 1;
    for (int b = 0; b < 4; ++b) {
        net.emplace<neural::Conv1d>(kernels[b], ch, filters[b]);
        net.emplace<neural::InstanceNorm>(filters[b]);
        net.emplace<neural::Relu>();
        net.emplace<neural::Dropout>(0.2);
        net.emplace<neural::MaxPool1d>(2);
        ch = filters[b];
    }
    net.emplace<neural::Flatten>();
    const auto trace = net.shape_trace();
    net.emplace<neural::Dense>(trace.back()[0], 1);
    net.emplace<neural::Sigmoid>();
    return net;
}

Network build_pose_detector() {
    Network net({imusim::kWindowSteps, 6, 1});
    const int filters[3] = {64, 128, 256};
    // Pool the temporal axis only. The feature axis shrinks 6 -> 3 through
    // the valid convolutions on its own, and halving it as well would leave
    // later normalizations with one- or two-element maps, which collapse to
    // pure sign patterns and carry no signal forward.
    const std::pair<int, int> pools[3] = {{2, 1}, {2, 1}, {2, 1}};
    int ch = 1;
    for (int b = 0; b < 3; ++b) {
        net.emplace<neural::Conv2d>(2, ch, filters[b]);
        net.emplace<neural::InstanceNorm>(filters[b]);
        net.emplace<neural::Relu>();
        net.emplace<neural::Dropout>(0.2);
        net.emplace<neural::MaxPool2d>(pools[b].first, pools[b].second);
        ch = filters[b];
    }
    auto shape = net.shape_trace().back();  // [t, w, ch]
    net.emplace<neural::Reshape>(std::vector<int>{shape[0], shape[1] * shape[2]});
    net.emplace<neural::Lstm>(shape[1] * shape[2], 128);
    net.emplace<neural::Flatten>();
    const auto trace = net.shape_trace();
    net.emplace<neural::Dense>(trace.back()[0], 1);
    net.emplace<neural::Sigmoid>();
    return net;
}

EwmaState ewma_update(EwmaState state, double raw) {
    if (!(raw >= 0.0 && raw <= 1.0))
        throw std::invalid_argument("ewma_update: raw probability outside [0,1]");
    if (!state.initialized) {
        state.y = raw;
        state.initialized = true;
    } else {
        state.y = state.alpha * state.y + (1.0 - state.alpha) * raw;
    }
    return state;
}

LosDecision classify_los(const cirproc::Ecir& ecir, double max_noise, Network& net,
                         EwmaState& state) {
    if (!(max_noise > 0.0)) throw std::invalid_argument("classify_los: max_noise must be > 0");
    neural::Tensor x({cirproc::kEcirLength, 1});
    for (int i = 0; i < cirproc::kEcirLength; ++i) x.data[i] = ecir.values[i] / max_noise;

    LosDecision d;
    d.raw_p = net.predict(x);
    state = ewma_update(state, d.raw_p);
    d.smoothed_p = state.y;
    d.label = d.smoothed_p >= kDecisionThreshold ? Condition::Nlos : Condition::Los;
    return d;
}

neural::Tensor pose_input(const imusim::ImuWindow& window, const FeatureStats& stats) {
    neural::Tensor flat = imusim::window_tensor(window);  // [18, 6]
    neural::Tensor x({imusim::kWindowSteps, 6, 1});
    for (int t = 0; t < imusim::kWindowSteps; ++t)
        for (int f = 0; f < 6; ++f)
            x.at(t, f, 0) = (flat.at(t, f) - stats.mean[f]) / stats.stddev[f];
    return x;
}

Pose detect_pose(const LosDecision& decision, const imusim::ImuWindow& window,
                 PoseBranchModel& los_branch, PoseBranchModel& nlos_branch) {
    if (!window.ready())
        throw WindowNotReadyError("detect_pose: window holds " +
                                  std::to_string(window.count()) + " samples");
    if (decision.label == Condition::Los) {
        const double p = los_branch.net.predict(pose_input(window, los_branch.stats));
        return p >= kDecisionThreshold ? Pose::Front : Pose::LosHand;
    }
    const double p = nlos_branch.net.predict(pose_input(window, nlos_branch.stats));
    return p >= kDecisionThreshold ? Pose::Back : Pose::NlosHand;
}

namespace {

json stats_json(const FeatureStats& s) {
    return json{{"mean", s.mean}, {"stddev", s.stddev}};
}

FeatureStats stats_from_json(const json& j) {
    FeatureStats s;
    if (j.is_null()) return s;
    auto m = j.at("mean").get<std::vector<double>>();
    auto d = j.at("stddev").get<std::vector<double>>();
    for (int i = 0; i < 6; ++i) {
        s.mean[i] = m.at(i);
        s.stddev[i] = d.at(i);
    }
    return s;
}

std::filesystem::path pose_stem(const std::filesystem::path& dir, Condition branch) {
    return dir / (branch == Condition::Los ? "pose_los" : "pose_nlos");
}

neural::Network load_required(const std::filesystem::path& stem, json* meta) {
    const auto manifest = stem.string() + ".json";
    const auto blob = stem.string() + ".bin";
    if (!std::filesystem::exists(manifest) || !std::filesystem::exists(blob))
        throw IoError("missing model: " + stem.string() + ".{json,bin} (train it first)");
    return neural::load_network(manifest, blob, meta);
}

}  // namespace

void ModelBundle::save_los(const std::filesystem::path& dir, const Network& net,
                           int input_len) {
    std::filesystem::create_directories(dir);
    json meta{{"role", "los_classifier"},
              {"input", "ecir magnitudes / max_noise"},
              {"input_len", input_len},
              {"lpf_alpha", kEwmaAlpha},
              {"threshold", kDecisionThreshold}};
    neural::save_network(net, dir / "los_classifier.json", dir / "los_classifier.bin", meta);
}

void ModelBundle::save_pose_branch(const std::filesystem::path& dir, Condition branch,
                                   const Network& net, const FeatureStats& stats) {
    std::filesystem::create_directories(dir);
    json meta{{"role", "pose_detector"},
              {"branch", to_string(branch)},
              {"feature_stats", stats_json(stats)},
              {"threshold", kDecisionThreshold}};
    const auto stem = pose_stem(dir, branch);
    neural::save_network(net, stem.string() + ".json", stem.string() + ".bin", meta);
}

void ModelBundle::save(const std::filesystem::path& dir) const {
    save_los(dir, los_net, los_input_len);
    save_pose_branch(dir, Condition::Los, pose_los.net, pose_los.stats);
    save_pose_branch(dir, Condition::Nlos, pose_nlos.net, pose_nlos.stats);
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
    ModelBundle b;
    json meta;
    b.los_net = load_required(dir / "los_classifier", &meta);
    b.los_input_len = meta.value("input_len", cirproc::kEcirLength);
    b.alpha = meta.value("lpf_alpha", kEwmaAlpha);
    b.threshold = meta.value("threshold", kDecisionThreshold);

    b.pose_los.net = load_required(pose_stem(dir, Condition::Los), &meta);
    b.pose_los.stats = stats_from_json(meta.value("feature_stats", json()));
    b.pose_nlos.net = load_required(pose_stem(dir, Condition::Nlos), &meta);
    b.pose_nlos.stats = stats_from_json(meta.value("feature_stats", json()));
    return b;
}

}  // namespace gatepose::models
