#pragma once

#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "gatepose/channel.hpp"
#include "gatepose/imusim.hpp"
#include "gatepose/models.hpp"
#include "gatepose/ranging.hpp"

namespace gatepose::harness {

/**
 * One gate-approach trial: the user walks toward the gate from
 * start_distance_m while the device ranges every 200 ms and samples the IMU
 * every 60 ms. pose_schedule entries switch the ground-truth pose; a switch
 * at time s takes effect for ticks strictly after s.
 */
struct WalkScenario {
    double start_distance_m = 4.0;
    double speed_mps = 0.5;
    std::vector<std::pair<double, Pose>> pose_schedule{{0.0, Pose::LosHand}};
    double ranging_interval_ms = 200.0;
    double imu_interval_ms = imusim::kImuIntervalMs;
    double duration_ms = 10000.0;
    uint64_t seed = 1;
    channel::ChannelParams channel_params{};
    imusim::GaitParams gait_params{};
    ranging::ClockModel gate_clock{8.0, 0.0};
    ranging::ClockModel device_clock{-5.0, 137.0};
    std::pair<double, double> reply_delays_ns{1.0e6, 0.8e6};

    void validate() const;
    Pose pose_at(double t_ms) const;
    double distance_at(double t_ms) const;
};

/// [walk] section plus [channel]/[gait] overrides. The schedule is written
/// as `pose_schedule = 0:LOS_HAND,5000:BACK`.
WalkScenario scenario_from_config(const class Config& cfg);

/// One pipeline output, emitted per ranging tick once the classifier and the
/// IMU window are both ready.
struct PoseEstimate {
    double t_ms = 0.0;
    double raw_p = 0.0;       // classifier sigmoid output (probability of NLOS)
    double smoothed_p = 0.0;  // after the low-pass filter
    Condition los_label = Condition::Los;
    Pose pose = Pose::LosHand;
    double distance_m = 0.0;
};

struct WalkTruth {
    double t_ms = 0.0;
    Pose pose = Pose::LosHand;
    Condition condition = Condition::Los;
};

struct WalkResult {
    std::vector<PoseEstimate> estimates;
    std::vector<WalkTruth> truths;  // one per emitted estimate, same order
    int suppressed = 0;             // ranging ticks skipped during IMU warm-up
};

/**
 * Event loop over the merged tick streams, processed in timestamp order
 * with IMU ticks ahead of ranging ticks on equal timestamps. Each ranging
 * tick ranges the walk distance, synthesizes a CIR for the scheduled pose's
 * LOS class, extracts the eCIR, classifies with LPF smoothing and runs the
 * pose branch on the freshest window. With `oracle` set, both model outputs
 * are replaced by ground truth probabilities (0/1), isolating the filter
 * and decision arithmetic.
 */
WalkResult run_walk(const WalkScenario& scenario, models::ModelBundle* bundle,
                    bool oracle = false);

/// JSONL: one object per estimate.
void write_estimates_jsonl(std::ostream& out, const std::vector<PoseEstimate>& estimates);

// --- transition-delay measurement -------------------------------------------

struct TransitionEvent {
    Pose from, to;
    double delay_ms = 0.0;
    bool censored = false;  // new pose never estimated within the trial
};

/// Per-switch delays of one walk: first estimate matching the new pose minus
/// the scheduled switch time.
std::vector<TransitionEvent> transition_delays(const WalkResult& result,
                                               const WalkScenario& scenario);

struct TransitionStats {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    int n = 0;
    int censored = 0;
};

/// Aggregate events per ordered (from, to) pose pair.
std::map<std::pair<Pose, Pose>, TransitionStats> aggregate_transitions(
    const std::vector<TransitionEvent>& events);

}  // namespace gatepose::harness
