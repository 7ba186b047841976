#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "gatepose/cirproc.hpp"
#include "gatepose/imusim.hpp"
#include "gatepose/neural/network.hpp"
#include "gatepose/pose.hpp"

namespace gatepose::models {

inline constexpr double kEwmaAlpha = 0.8;       // weight on the previous smoothed value
inline constexpr double kDecisionThreshold = 0.5;

/**
 * eCIR LOS/NLOS classifier: four Conv1D blocks with kernels [5,11,17,5] and
 * filters [64,128,256,512], each block Conv -> InstanceNorm -> ReLU ->
 * Dropout(0.2) -> MaxPool(2), then Flatten -> Dense -> Sigmoid. Convolutions
 * are valid, stride 1. `input_len` defaults to the 135-sample eCIR; the full
 * 1016-magnitude variant uses the same stack.
 */
neural::Network build_los_classifier(int input_len = cirproc::kEcirLength);

/**
 * IMU pose detector for one branch: three Conv2D blocks (2x2 kernels,
 * filters [64,128,256]) on the 18x6 window, pooling the temporal axis every
 * block and the feature axis only in the middle block (the feature axis
 * must stay >= 2 ahead of each 2x2 convolution), then LSTM(128) over the
 * remaining temporal axis -> Flatten -> Dense -> Sigmoid. The two branches
 * are architecturally identical with independent parameters.
 */
neural::Network build_pose_detector();

/// Exponentially weighted moving average over classifier probabilities.
/// The first update adopts the raw value; later updates keep `alpha` of the
/// previous smoothed value.
struct EwmaState {
    double alpha = kEwmaAlpha;
    double y = 0.0;
    bool initialized = false;
};

/// Throws std::invalid_argument when raw is outside [0, 1].
EwmaState ewma_update(EwmaState state, double raw);

struct LosDecision {
    double raw_p = 0.0;       // network output: probability of NLOS
    double smoothed_p = 0.0;  // after the low-pass filter
    Condition label = Condition::Los;  // NLOS iff smoothed_p >= 0.5
};

/**
 * Classify one eCIR. Magnitudes are divided by the record's max_noise to
 * remove accumulator gain before the network sees them; the sigmoid output
 * is smoothed through the EWMA state and thresholded at 0.5 (ties resolve
 * to NLOS).
 */
LosDecision classify_los(const cirproc::Ecir& ecir, double max_noise, neural::Network& net,
                         EwmaState& state);

/// Per-feature standardization statistics for the 6 IMU columns, computed on
/// the training split and stored with the model.
struct FeatureStats {
    std::array<double, 6> mean{};
    std::array<double, 6> stddev{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
};

/// [18,6] window -> standardized [18,6,1] network input.
neural::Tensor pose_input(const imusim::ImuWindow& window, const FeatureStats& stats);

struct PoseBranchModel {
    neural::Network net;
    FeatureStats stats;
};

/**
 * Second stage: the LOS/NLOS label picks the branch, whose sigmoid output
 * is the probability of the pocket pose (FRONT under LOS, BACK under NLOS)
 * against the hand pose. The branch output is used directly, without a
 * second low-pass filter. Ties at 0.5 go to the pocket pose.
 * Throws WindowNotReadyError on a partial window.
 */
Pose detect_pose(const LosDecision& decision, const imusim::ImuWindow& window,
                 PoseBranchModel& los_branch, PoseBranchModel& nlos_branch);

/**
 * The trained pipeline: classifier plus the two pose branches, persisted as
 * one manifest+blob pair per network with normalization stats, the filter
 * weight, thresholds and branch identity in the metadata.
 */
struct ModelBundle {
    neural::Network los_net;
    int los_input_len = cirproc::kEcirLength;
    double alpha = kEwmaAlpha;
    double threshold = kDecisionThreshold;
    PoseBranchModel pose_los;
    PoseBranchModel pose_nlos;

    void save(const std::filesystem::path& dir) const;
    static ModelBundle load(const std::filesystem::path& dir);  // throws IoError on a missing model

    static void save_los(const std::filesystem::path& dir, const neural::Network& net,
                         int input_len);
    static void save_pose_branch(const std::filesystem::path& dir, Condition branch,
                                 const neural::Network& net, const FeatureStats& stats);
};

}  // namespace gatepose::models
