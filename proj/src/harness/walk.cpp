#include "gatepose/harness/walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gatepose/cirproc.hpp"
#include "gatepose/errors.hpp"
#include "gatepose/harness/dataset.hpp"

namespace gatepose::harness {

WalkScenario scenario_from_config(const Config& cfg) {
    WalkScenario s;
    s.start_distance_m = cfg.get("walk", "start_distance_m", s.start_distance_m);
    s.speed_mps = cfg.get("walk", "speed_mps", s.speed_mps);
    s.ranging_interval_ms = cfg.get("walk", "ranging_interval_ms", s.ranging_interval_ms);
    s.imu_interval_ms = cfg.get("walk", "imu_interval_ms", s.imu_interval_ms);
    s.duration_ms = cfg.get("walk", "duration_ms", s.duration_ms);
    s.seed = cfg.get("walk", "seed", s.seed);
    s.gate_clock.drift_ppm = cfg.get("walk", "gate_drift_ppm", s.gate_clock.drift_ppm);
    s.device_clock.drift_ppm = cfg.get("walk", "device_drift_ppm", s.device_clock.drift_ppm);
    s.reply_delays_ns.first = cfg.get("walk", "reply1_ns", s.reply_delays_ns.first);
    s.reply_delays_ns.second = cfg.get("walk", "reply2_ns", s.reply_delays_ns.second);
    s.channel_params = channel_params_from_config(cfg);
    s.gait_params = gait_params_from_config(cfg);

    if (const auto sched = cfg.find("walk", "pose_schedule")) {
        s.pose_schedule.clear();
        std::string entry;
        std::istringstream in(*sched);
        while (std::getline(in, entry, ',')) {
            const auto colon = entry.find(':');
            if (colon == std::string::npos)
                throw IoError("pose_schedule entries look like `t_ms:POSE`");
            s.pose_schedule.emplace_back(std::stod(entry.substr(0, colon)),
                                         pose_from_string(entry.substr(colon + 1)));
        }
    }
    s.validate();
    return s;
}

void WalkScenario::validate() const {
    if (pose_schedule.empty())
        throw std::invalid_argument("WalkScenario: pose_schedule must not be empty");
    for (size_t i = 1; i < pose_schedule.size(); ++i)
        if (pose_schedule[i].first <= pose_schedule[i - 1].first)
            throw std::invalid_argument("WalkScenario: schedule times must increase");
    if (!(ranging_interval_ms > 0.0) || !(imu_interval_ms > 0.0) || !(duration_ms > 0.0))
        throw std::invalid_argument("WalkScenario: intervals must be positive");
    if (start_distance_m < 0.0 || speed_mps < 0.0)
        throw std::invalid_argument("WalkScenario: negative walk geometry");
    channel_params.validate();
    gait_params.validate();
}

Pose WalkScenario::pose_at(double t_ms) const {
    Pose current = pose_schedule.front().second;
    for (const auto& [at, pose] : pose_schedule) {
        if (at < t_ms) current = pose;  // a switch at s governs ticks after s
        else break;
    }
    return current;
}

double WalkScenario::distance_at(double t_ms) const {
    return std::max(0.0, start_distance_m - speed_mps * t_ms / 1000.0);
}

WalkResult run_walk(const WalkScenario& scenario, models::ModelBundle* bundle, bool oracle) {
    scenario.validate();
    if (!oracle && bundle == nullptr)
        throw std::invalid_argument("run_walk: need a model bundle unless oracle mode is on");

    const Rng root(scenario.seed);
    WalkResult result;
    models::EwmaState lpf;
    if (bundle) lpf.alpha = bundle->alpha;
    imusim::ImuWindow window;

    // Merged tick streams; IMU before ranging on equal timestamps so a
    // ranging event always sees the freshest window.
    long imu_i = 0, rng_i = 0;
    while (true) {
        const double t_imu = imu_i * scenario.imu_interval_ms;
        const double t_rng = rng_i * scenario.ranging_interval_ms;
        const bool imu_due = t_imu < scenario.duration_ms;
        const bool rng_due = t_rng < scenario.duration_ms;
        if (!imu_due && !rng_due) break;

        if (imu_due && (!rng_due || t_imu <= t_rng)) {
            const Pose pose = scenario.pose_at(t_imu);
            Rng tick_rng = root.fork(0x10000000u + static_cast<uint64_t>(imu_i));
            window = imusim::push_window(
                window, imusim::imu_sample_at(pose, t_imu, scenario.gait_params, tick_rng));
            ++imu_i;
            continue;
        }

        // Ranging tick.
        const Pose pose = scenario.pose_at(t_rng);
        const Condition condition = los_class(pose);
        Rng tick_rng = root.fork(0x20000000u + static_cast<uint64_t>(rng_i));

        const ranging::SessionTrace session = ranging::run_session(
            scenario.distance_at(t_rng), scenario.gate_clock, scenario.device_clock,
            scenario.reply_delays_ns, nullptr, static_cast<int>(rng_i), t_rng);

        channel::CirRecord record =
            channel::generate_cir(condition, scenario.channel_params, tick_rng);
        record.pose_label = pose;

        models::LosDecision decision;
        if (oracle) {
            decision.raw_p = condition == Condition::Nlos ? 1.0 : 0.0;
            lpf = models::ewma_update(lpf, decision.raw_p);
            decision.smoothed_p = lpf.y;
            decision.label = decision.smoothed_p >= models::kDecisionThreshold
                                 ? Condition::Nlos
                                 : Condition::Los;
        } else {
            const cirproc::Ecir ecir = cirproc::extract_ecir(record);
            decision = models::classify_los(ecir, record.diagnostics.max_noise,
                                            bundle->los_net, lpf);
        }

        if (!window.ready()) {
            ++result.suppressed;  // documented warm-up: no estimate yet
            ++rng_i;
            continue;
        }

        Pose estimated;
        if (oracle) {
            // Ground-truth branch probability under the decided branch.
            const bool branch_los = decision.label == Condition::Los;
            const double p = (pose == Pose::Front || pose == Pose::Back) ? 1.0 : 0.0;
            estimated = branch_los ? (p >= 0.5 ? Pose::Front : Pose::LosHand)
                                   : (p >= 0.5 ? Pose::Back : Pose::NlosHand);
        } else {
            estimated = models::detect_pose(decision, window, bundle->pose_los,
                                            bundle->pose_nlos);
        }

        result.estimates.push_back({t_rng, decision.raw_p, decision.smoothed_p, decision.label,
                                    estimated, session.result.distance_m});
        result.truths.push_back({t_rng, pose, condition});
        ++rng_i;
    }
    return result;
}

void write_estimates_jsonl(std::ostream& out, const std::vector<PoseEstimate>& estimates) {
    for (const PoseEstimate& e : estimates) {
        nlohmann::json j{{"t_ms", e.t_ms},
                         {"raw_p_nlos", e.raw_p},
                         {"smoothed_p_nlos", e.smoothed_p},
                         {"los_label", to_string(e.los_label)},
                         {"pose", to_string(e.pose)},
                         {"distance_m", e.distance_m}};
        out << j.dump() << '\n';
    }
}

std::vector<TransitionEvent> transition_delays(const WalkResult& result,
                                               const WalkScenario& scenario) {
    std::vector<TransitionEvent> events;
    for (size_t i = 1; i < scenario.pose_schedule.size(); ++i) {
        const double switch_t = scenario.pose_schedule[i].first;
        const Pose to = scenario.pose_schedule[i].second;
        const Pose from = scenario.pose_schedule[i - 1].second;
        const double horizon = i + 1 < scenario.pose_schedule.size()
                                   ? scenario.pose_schedule[i + 1].first
                                   : scenario.duration_ms;
        TransitionEvent ev{from, to, 0.0, true};
        for (const PoseEstimate& e : result.estimates) {
            if (e.t_ms <= switch_t || e.t_ms >= horizon) continue;
            if (e.pose == to) {
                ev.delay_ms = e.t_ms - switch_t;
                ev.censored = false;
                break;
            }
        }
        events.push_back(ev);
    }
    return events;
}

std::map<std::pair<Pose, Pose>, TransitionStats> aggregate_transitions(
    const std::vector<TransitionEvent>& events) {
    std::map<std::pair<Pose, Pose>, TransitionStats> stats;
    std::map<std::pair<Pose, Pose>, std::vector<double>> delays;
    for (const TransitionEvent& ev : events) {
        auto key = std::make_pair(ev.from, ev.to);
        if (ev.censored)
            ++stats[key].censored;
        else
            delays[key].push_back(ev.delay_ms);
    }
    for (auto& [key, ds] : delays) {
        TransitionStats& s = stats[key];
        s.n = static_cast<int>(ds.size());
        double sum = 0.0;
        for (double d : ds) sum += d;
        s.mean_ms = sum / s.n;
        double var = 0.0;
        for (double d : ds) var += (d - s.mean_ms) * (d - s.mean_ms);
        s.std_ms = s.n > 1 ? std::sqrt(var / (s.n - 1)) : 0.0;
    }
    return stats;
}

}  // namespace gatepose::harness
