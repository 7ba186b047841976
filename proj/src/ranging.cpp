#include "gatepose/ranging.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gatepose/errors.hpp"

namespace gatepose::ranging {

LocalNs ClockModel::local_time(LocalNs true_ns, Rng* rng) const {
    LocalNs t = static_cast<LocalNs>(offset_ns) +
                true_ns * (1.0L + static_cast<LocalNs>(drift_ppm) * 1e-6L);
    if (stamp_noise_ns > 0.0 && rng != nullptr)
        t += static_cast<LocalNs>(rng->gaussian(0.0, stamp_noise_ns));
    return t;
}

double compute_tof(const RangingTimestamps& ts) {
    const LocalNs den = ts.t_round1 + ts.t_round2 + ts.t_reply1 + ts.t_reply2;
    if (!(den > 0.0L))
        throw InvalidTimestampsError("compute_tof: non-positive denominator");
    const LocalNs num = ts.t_round1 * ts.t_round2 - ts.t_reply1 * ts.t_reply2;
    return static_cast<double>(num / den);
}

SessionTrace run_session(double distance_m, const ClockModel& initiator,
                         const ClockModel& responder,
                         std::pair<double, double> reply_delays_ns, Rng* stamp_rng,
                         int session_index, double timestamp_ms) {
    const LocalNs flight = static_cast<LocalNs>(distance_m) / kSpeedOfLightMPerNs;
    const LocalNs d1 = static_cast<LocalNs>(reply_delays_ns.first);
    const LocalNs d2 = static_cast<LocalNs>(reply_delays_ns.second);

    // True-time event line for the three messages.
    const LocalNs tx_rim = 0.0L;
    const LocalNs rx_rim = tx_rim + flight;
    const LocalNs tx_rrm = rx_rim + d1;
    const LocalNs rx_rrm = tx_rrm + flight;
    const LocalNs tx_rfm = rx_rrm + d2;
    const LocalNs rx_rfm = tx_rfm + flight;

    // Each device stamps events on its own clock.
    const LocalNs i_tx_rim = initiator.local_time(tx_rim, stamp_rng);
    const LocalNs i_rx_rrm = initiator.local_time(rx_rrm, stamp_rng);
    const LocalNs i_tx_rfm = initiator.local_time(tx_rfm, stamp_rng);
    const LocalNs r_rx_rim = responder.local_time(rx_rim, stamp_rng);
    const LocalNs r_tx_rrm = responder.local_time(tx_rrm, stamp_rng);
    const LocalNs r_rx_rfm = responder.local_time(rx_rfm, stamp_rng);

    SessionTrace trace;
    trace.timestamps.t_round1 = i_rx_rrm - i_tx_rim;
    trace.timestamps.t_reply1 = r_tx_rrm - r_rx_rim;
    trace.timestamps.t_round2 = r_rx_rfm - r_tx_rrm;
    trace.timestamps.t_reply2 = i_tx_rfm - i_rx_rrm;
    trace.messages = {{MessageKind::Rim, i_tx_rim, r_rx_rim},
                      {MessageKind::Rrm, r_tx_rrm, i_rx_rrm},
                      {MessageKind::Rfm, i_tx_rfm, r_rx_rfm}};

    trace.raw_tof_ns = compute_tof(trace.timestamps);
    trace.result.tof_ns = std::max(0.0, trace.raw_tof_ns);
    trace.result.distance_m = trace.result.tof_ns * kSpeedOfLightMPerNs;
    trace.result.session_index = session_index;
    trace.result.timestamp_ms = timestamp_ms;
    return trace;
}

std::vector<RangingResult> ranging_stream(double cadence_ms, double duration_ms,
                                          const WalkFn& walk, const ClockModel& initiator,
                                          const ClockModel& responder,
                                          std::pair<double, double> reply_delays_ns, Rng& rng) {
    if (!(cadence_ms > 0.0))
        throw std::invalid_argument("ranging_stream: cadence must be positive");
    std::vector<RangingResult> results;
    int index = 0;
    for (double t = 0.0; t < duration_ms; t += cadence_ms, ++index) {
        Rng session_rng = rng.fork(static_cast<uint64_t>(index));
        const double d = walk(t);
        SessionTrace trace = run_session(d, initiator, responder, reply_delays_ns,
                                         &session_rng, index, t);
        results.push_back(trace.result);
    }
    return results;
}

void write_jsonl(std::ostream& out, const std::vector<RangingResult>& results) {
    for (const RangingResult& r : results) {
        nlohmann::json j{{"session_index", r.session_index},
                         {"timestamp_ms", r.timestamp_ms},
                         {"tof_ns", r.tof_ns},
                         {"distance_m", r.distance_m}};
        out << j.dump() << '\n';
    }
}

}  // namespace gatepose::ranging
