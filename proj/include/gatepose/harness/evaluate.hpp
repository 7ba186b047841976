#pragma once

#include <iosfwd>
#include <map>
#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "gatepose/harness/dataset.hpp"
#include "gatepose/harness/walk.hpp"

namespace gatepose::harness {

struct EvalOptions {
    /// Fraction of raw probabilities adversarially flipped (p -> 1-p) before
    /// both the filtered and unfiltered paths; models §V-C-style outliers.
    double outlier_flip_rate = 0.0;
    uint64_t flip_seed = 99;
};

struct PoseAccuracy {
    double los_acc = 0.0;          // LOS/NLOS accuracy with the LPF
    double los_acc_no_lpf = 0.0;   // thresholding raw_p directly
    double pose_acc = 0.0;         // two-stage pipeline accuracy
    double majority_acc = 0.0;     // per-stream majority vote on the pose
    int n = 0;
};

struct EvalReport {
    std::map<Pose, PoseAccuracy> per_pose;
    double overall_los_acc = 0.0;
    double overall_los_acc_no_lpf = 0.0;
    double overall_pose_acc = 0.0;
    std::map<std::pair<Pose, Pose>, TransitionStats> transitions;

    nlohmann::json to_json() const;
    void print_table(std::ostream& out) const;
    static EvalReport from_json(const nlohmann::json& j);
};

/**
 * Streamed evaluation on held-out datasets: test CIR rows are grouped into
 * one stream per pose (generation order preserved) and classified through a
 * fresh LPF per stream; pose detection pairs each row with a same-pose test
 * window. The no-LPF column thresholds the same raw probabilities directly.
 */
EvalReport evaluate(models::ModelBundle& bundle,
                    const std::vector<channel::CirDatasetRow>& test_rows,
                    const std::vector<WindowSample>& test_windows,
                    const EvalOptions& options = {});

/// Accuracies over walk outputs (one stream per walk), plus the aggregated
/// transition matrix when schedules contain switches.
EvalReport evaluate_walks(const std::vector<WalkResult>& results,
                          const std::vector<WalkScenario>& scenarios);

}  // namespace gatepose::harness
