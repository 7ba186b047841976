#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gatepose/neural/tensor.hpp"
#include "gatepose/pose.hpp"
#include "gatepose/rng.hpp"

namespace gatepose::imusim {

inline constexpr double kImuIntervalMs = 60.0;
inline constexpr int kWindowSteps = 18;
inline constexpr double kGravity = 9.81;

/// One inertial reading: gravity-removed acceleration plus the gravity
/// vector, both in the device frame (x right, y toward the top edge,
/// z out of the display).
struct ImuSample {
    double t_ms = 0.0;
    std::array<double, 3> accel{};    // m/s^2, gravity removed
    std::array<double, 3> gravity{};  // m/s^2, |g| ~ 9.81
};

/// Sliding window of the most recent 18 samples, oldest first.
class ImuWindow {
public:
    bool ready() const { return samples_.size() == kWindowSteps; }
    int count() const { return static_cast<int>(samples_.size()); }
    const ImuSample& at(int i) const { return samples_[i]; }  // 0 = oldest
    double newest_t_ms() const;

    friend ImuWindow push_window(ImuWindow window, const ImuSample& sample);

private:
    std::vector<ImuSample> samples_;
};

/// Appends a sample, evicting the oldest beyond 18 entries.
/// Throws std::invalid_argument on an out-of-order timestamp.
ImuWindow push_window(ImuWindow window, const ImuSample& sample);

/// [18, 6] tensor, row t = [ax, ay, az, gx, gy, gz] oldest first.
/// Throws WindowNotReadyError until 18 samples exist.
neural::Tensor window_tensor(const ImuWindow& window);

/**
 * Gait signal model. Acceleration is a step-rate fundamental plus a second
 * harmonic at half amplitude plus white noise; pocket poses swing harder
 * than hand poses. Gravity is a per-pose orientation of (0,0,9.81) with a
 * small periodic wobble.
 */
struct GaitParams {
    double step_rate_hz = 3.0;
    double hand_amp = 1.0;    // m/s^2
    double pocket_amp = 2.5;  // m/s^2, must exceed hand_amp
    double noise_sigma = 0.3;
    double gravity_noise_sigma = 0.02;
    double wobble_deg = 3.0;
    uint64_t rng_seed = 1;
    /// Unit gravity direction in the device frame, indexed by Pose.
    std::array<std::array<double, 3>, 4> gravity_dir{{
        {0.0, -0.643, -0.766},     // LOS_HAND: pitched ~40 deg, screen up
        {-0.324, -0.643, -0.694},  // NLOS_HAND: same pitch, rolled ~25 deg
        {0.0, -0.985, -0.174},     // FRONT: near vertical, display inward
        {0.0, 0.985, -0.174},      // BACK: gravity y-axis flipped
    }};

    void validate() const;  // throws std::invalid_argument
};

/// One reading of the gait model at time t for the given pose. Consumes a
/// fixed number of rng draws per call.
ImuSample imu_sample_at(Pose pose, double t_ms, const GaitParams& params, Rng& rng);

/// Samples at the 60 ms cadence covering [0, duration_ms). Deterministic
/// given the rng. Throws std::invalid_argument when the duration cannot
/// even fill one window (1080 ms).
std::vector<ImuSample> generate_imu_trace(Pose pose, double duration_ms,
                                          const GaitParams& params, Rng& rng);

// --- IMU dataset CSV: t_ms, ax, ay, az, gx, gy, gz, pose_label -------------

struct ImuDatasetRow {
    ImuSample sample;
    Pose pose;
};

void write_imu_csv_header(std::ostream& out);
void write_imu_csv_row(std::ostream& out, const ImuDatasetRow& row);
std::vector<ImuDatasetRow> read_imu_csv(std::istream& in);

}  // namespace gatepose::imusim
