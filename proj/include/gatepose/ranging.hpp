#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "gatepose/rng.hpp"

namespace gatepose::ranging {

/// Speed of light in metres per nanosecond.
inline constexpr double kSpeedOfLightMPerNs = 0.299792458;

/// Device-local timestamps carry sub-picosecond structure over millisecond
/// reply spans; 80-bit extended precision keeps the round/reply differences
/// from being swamped by representation error.
using LocalNs = long double;

/**
 * Affine local clock: local = offset + true * (1 + drift_ppm * 1e-6).
 * Optional Gaussian stamp noise models timestamping jitter; off by default.
 */
struct ClockModel {
    double drift_ppm = 0.0;
    double offset_ns = 0.0;
    double stamp_noise_ns = 0.0;

    LocalNs local_time(LocalNs true_ns, Rng* rng = nullptr) const;
};

/// The four DS-TWR interval measurements, each on its owning device's clock.
struct RangingTimestamps {
    LocalNs t_round1 = 0;  // initiator: RIM tx -> RRM rx
    LocalNs t_reply1 = 0;  // responder: RIM rx -> RRM tx
    LocalNs t_round2 = 0;  // responder: RRM tx -> RFM rx
    LocalNs t_reply2 = 0;  // initiator: RRM rx -> RFM tx
};

struct RangingResult {
    double tof_ns = 0.0;       // clamped to >= 0
    double distance_m = 0.0;   // tof_ns * c
    int session_index = 0;
    double timestamp_ms = 0.0; // simulation time of the session
};

enum class MessageKind { Rim, Rrm, Rfm };

struct RangingMessage {
    MessageKind kind;
    LocalNs tx_local_time;  // sender's clock
    LocalNs rx_local_time;  // receiver's clock
};

struct SessionTrace {
    RangingResult result;
    RangingTimestamps timestamps;
    double raw_tof_ns = 0.0;  // pre-clamp value, kept for diagnostics
    std::vector<RangingMessage> messages;
};

/**
 * Combine the two round trips into a time-of-flight:
 *   (t_round1 * t_round2 - t_reply1 * t_reply2) /
 *   (t_round1 + t_round2 + t_reply1 + t_reply2)
 * May be slightly negative under noise; callers clamp for distances.
 * Throws InvalidTimestampsError when the denominator is not positive.
 */
double compute_tof(const RangingTimestamps& ts);

/**
 * Simulate one RIM/RRM/RFM exchange at a fixed true distance. Each device
 * stamps tx/rx on its own drifted clock. Antenna delays and preamble timing
 * are folded into the reply delays.
 */
SessionTrace run_session(double distance_m, const ClockModel& initiator,
                         const ClockModel& responder,
                         std::pair<double, double> reply_delays_ns,
                         Rng* stamp_rng = nullptr, int session_index = 0,
                         double timestamp_ms = 0.0);

/// Position (metres from the gate) as a function of simulation time.
using WalkFn = std::function<double(double t_ms)>;

/**
 * One RangingResult per cadence tick, distance taken from the walk
 * trajectory at the tick instant. Deterministic given the rng seed.
 */
std::vector<RangingResult> ranging_stream(double cadence_ms, double duration_ms,
                                          const WalkFn& walk, const ClockModel& initiator,
                                          const ClockModel& responder,
                                          std::pair<double, double> reply_delays_ns, Rng& rng);

/// JSON-lines: one object per session with
/// {session_index, timestamp_ms, tof_ns, distance_m}.
void write_jsonl(std::ostream& out, const std::vector<RangingResult>& results);

}  // namespace gatepose::ranging
