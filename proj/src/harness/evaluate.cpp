#include "gatepose/harness/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gatepose/cirproc.hpp"
#include "gatepose/errors.hpp"

namespace gatepose::harness {

using nlohmann::json;

namespace {

/// Raw classifier probability for one dataset row, honoring the bundle's
/// input length (135 = eCIR window, otherwise the full magnitude record).
double classify_row_raw(models::ModelBundle& bundle, const channel::CirDatasetRow& row) {
    const double scale = row.diagnostics.max_noise > 0.0 ? row.diagnostics.max_noise : 1.0;
    neural::Tensor x({bundle.los_input_len, 1});
    if (bundle.los_input_len == cirproc::kEcirLength) {
        const cirproc::Ecir e = cirproc::extract_ecir(row);
        for (int i = 0; i < bundle.los_input_len; ++i) x.data[i] = e.values[i] / scale;
    } else {
        if (bundle.los_input_len != static_cast<int>(row.magnitudes.size()))
            throw std::invalid_argument("classify_row_raw: row does not fit the model input");
        for (int i = 0; i < bundle.los_input_len; ++i) x.data[i] = row.magnitudes[i] / scale;
    }
    return bundle.los_net.predict(x);
}

struct Tally {
    long los_ok = 0, los_ok_raw = 0, pose_ok = 0, n = 0;
    long majority_ok = 0, majority_n = 0;
};

Pose majority_pose(const std::vector<Pose>& poses) {
    std::array<int, 4> counts{};
    for (Pose p : poses) ++counts[static_cast<int>(p)];
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (counts[i] > counts[best]) best = i;
    return static_cast<Pose>(best);
}

}  // namespace

EvalReport evaluate(models::ModelBundle& bundle,
                    const std::vector<channel::CirDatasetRow>& test_rows,
                    const std::vector<WindowSample>& test_windows,
                    const EvalOptions& options) {
    if (test_rows.empty()) throw std::invalid_argument("evaluate: empty test set");

    // One stream per pose, order preserved; rows without a pose label form
    // per-condition streams and count toward the LOS/NLOS numbers only.
    std::map<int, std::vector<const channel::CirDatasetRow*>> streams;
    for (const auto& row : test_rows) {
        const int key = row.pose ? static_cast<int>(*row.pose) : 4 + static_cast<int>(row.label);
        streams[key].push_back(&row);
    }
    std::map<int, std::vector<const WindowSample*>> windows_by_pose;
    for (const auto& w : test_windows) windows_by_pose[static_cast<int>(w.pose)].push_back(&w);

    Rng flip_rng(options.flip_seed);
    std::map<Pose, Tally> tallies;
    Tally overall;

    for (auto& [key, rows] : streams) {
        const bool has_pose = key < 4;
        const Pose pose = has_pose ? static_cast<Pose>(key) : Pose::LosHand;
        const auto* windows = has_pose ? &windows_by_pose[key] : nullptr;
        if (has_pose && (windows == nullptr || windows->empty()))
            throw std::invalid_argument("evaluate: no test windows for pose " +
                                        to_string(pose));
        models::EwmaState lpf{bundle.alpha};
        size_t window_i = 0;
        std::vector<Pose> stream_poses;

        for (const channel::CirDatasetRow* row : rows) {
            double raw = classify_row_raw(bundle, *row);
            if (options.outlier_flip_rate > 0.0 &&
                flip_rng.uniform01() < options.outlier_flip_rate)
                raw = 1.0 - raw;

            lpf = models::ewma_update(lpf, raw);
            const Condition lpf_label =
                lpf.y >= bundle.threshold ? Condition::Nlos : Condition::Los;
            const Condition raw_label =
                raw >= bundle.threshold ? Condition::Nlos : Condition::Los;
            const Condition truth = row->label;

            Tally& t = has_pose ? tallies[pose] : overall;
            if (has_pose) {
                models::LosDecision d{raw, lpf.y, lpf_label};
                const WindowSample* w = (*windows)[window_i++ % windows->size()];
                const Pose est =
                    models::detect_pose(d, w->window, bundle.pose_los, bundle.pose_nlos);
                stream_poses.push_back(est);
                if (est == pose) ++t.pose_ok;
            }
            if (lpf_label == truth) ++t.los_ok;
            if (raw_label == truth) ++t.los_ok_raw;
            ++t.n;
        }
        if (has_pose) {
            Tally& t = tallies[pose];
            ++t.majority_n;
            if (majority_pose(stream_poses) == pose) ++t.majority_ok;
        }
    }

    EvalReport report;
    long pose_n = 0, pose_ok = 0;
    for (auto& [pose, t] : tallies) {
        PoseAccuracy acc;
        acc.n = static_cast<int>(t.n);
        acc.los_acc = static_cast<double>(t.los_ok) / t.n;
        acc.los_acc_no_lpf = static_cast<double>(t.los_ok_raw) / t.n;
        acc.pose_acc = static_cast<double>(t.pose_ok) / t.n;
        acc.majority_acc =
            t.majority_n > 0 ? static_cast<double>(t.majority_ok) / t.majority_n : 0.0;
        report.per_pose[pose] = acc;
        overall.los_ok += t.los_ok;
        overall.los_ok_raw += t.los_ok_raw;
        overall.n += t.n;
        pose_ok += t.pose_ok;
        pose_n += t.n;
    }
    report.overall_los_acc = static_cast<double>(overall.los_ok) / overall.n;
    report.overall_los_acc_no_lpf = static_cast<double>(overall.los_ok_raw) / overall.n;
    report.overall_pose_acc = pose_n > 0 ? static_cast<double>(pose_ok) / pose_n : 0.0;
    return report;
}

EvalReport evaluate_walks(const std::vector<WalkResult>& results,
                          const std::vector<WalkScenario>& scenarios) {
    if (results.empty() || results.size() != scenarios.size())
        throw std::invalid_argument("evaluate_walks: mismatched results/scenarios");

    std::map<Pose, Tally> tallies;
    std::vector<TransitionEvent> events;

    for (size_t k = 0; k < results.size(); ++k) {
        const WalkResult& r = results[k];
        std::map<Pose, std::vector<Pose>> per_pose_estimates;
        for (size_t i = 0; i < r.estimates.size(); ++i) {
            const PoseEstimate& e = r.estimates[i];
            const WalkTruth& truth = r.truths[i];
            Tally& t = tallies[truth.pose];
            if (e.los_label == truth.condition) ++t.los_ok;
            if ((e.raw_p >= 0.5 ? Condition::Nlos : Condition::Los) == truth.condition)
                ++t.los_ok_raw;
            if (e.pose == truth.pose) ++t.pose_ok;
            ++t.n;
            per_pose_estimates[truth.pose].push_back(e.pose);
        }
        for (auto& [pose, ests] : per_pose_estimates) {
            Tally& t = tallies[pose];
            ++t.majority_n;
            if (majority_pose(ests) == pose) ++t.majority_ok;
        }
        const auto ev = transition_delays(r, scenarios[k]);
        events.insert(events.end(), ev.begin(), ev.end());
    }

    EvalReport report;
    long n = 0, los_ok = 0, los_ok_raw = 0, pose_ok = 0;
    for (auto& [pose, t] : tallies) {
        PoseAccuracy acc;
        acc.n = static_cast<int>(t.n);
        acc.los_acc = static_cast<double>(t.los_ok) / t.n;
        acc.los_acc_no_lpf = static_cast<double>(t.los_ok_raw) / t.n;
        acc.pose_acc = static_cast<double>(t.pose_ok) / t.n;
        acc.majority_acc =
            t.majority_n > 0 ? static_cast<double>(t.majority_ok) / t.majority_n : 0.0;
        report.per_pose[pose] = acc;
        n += t.n;
        los_ok += t.los_ok;
        los_ok_raw += t.los_ok_raw;
        pose_ok += t.pose_ok;
    }
    report.overall_los_acc = static_cast<double>(los_ok) / n;
    report.overall_los_acc_no_lpf = static_cast<double>(los_ok_raw) / n;
    report.overall_pose_acc = static_cast<double>(pose_ok) / n;
    report.transitions = aggregate_transitions(events);
    return report;
}

json EvalReport::to_json() const {
    json per = json::object();
    for (const auto& [pose, acc] : per_pose)
        per[to_string(pose)] = {{"los_accuracy", acc.los_acc},
                                {"los_accuracy_no_lpf", acc.los_acc_no_lpf},
                                {"pose_accuracy", acc.pose_acc},
                                {"majority_accuracy", acc.majority_acc},
                                {"n", acc.n}};
    json trans = json::array();
    for (const auto& [key, s] : transitions)
        trans.push_back({{"from", to_string(key.first)},
                         {"to", to_string(key.second)},
                         {"mean_ms", s.mean_ms},
                         {"std_ms", s.std_ms},
                         {"n", s.n},
                         {"censored", s.censored}});
    return json{{"per_pose", per},
                {"overall",
                 {{"los_accuracy", overall_los_acc},
                  {"los_accuracy_no_lpf", overall_los_acc_no_lpf},
                  {"pose_accuracy", overall_pose_acc}}},
                {"transitions", trans}};
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    for (const auto& [name, acc] : j.at("per_pose").items()) {
        PoseAccuracy a;
        a.los_acc = acc.at("los_accuracy").get<double>();
        a.los_acc_no_lpf = acc.at("los_accuracy_no_lpf").get<double>();
        a.pose_acc = acc.at("pose_accuracy").get<double>();
        a.majority_acc = acc.at("majority_accuracy").get<double>();
        a.n = acc.at("n").get<int>();
        r.per_pose[pose_from_string(name)] = a;
    }
    r.overall_los_acc = j.at("overall").at("los_accuracy").get<double>();
    r.overall_los_acc_no_lpf = j.at("overall").at("los_accuracy_no_lpf").get<double>();
    r.overall_pose_acc = j.at("overall").at("pose_accuracy").get<double>();
    for (const auto& t : j.at("transitions")) {
        TransitionStats s;
        s.mean_ms = t.at("mean_ms").get<double>();
        s.std_ms = t.at("std_ms").get<double>();
        s.n = t.at("n").get<int>();
        s.censored = t.at("censored").get<int>();
        r.transitions[{pose_from_string(t.at("from").get<std::string>()),
                       pose_from_string(t.at("to").get<std::string>())}] = s;
    }
    return r;
}

void EvalReport::print_table(std::ostream& out) const {
    out << std::left << std::setw(11) << "pose" << std::setw(22) << "LOS/NLOS (w/o LPF)"
        << std::setw(11) << "pose acc" << std::setw(10) << "majority" << "n\n";
    std::ostringstream cell;
    for (const auto& [pose, acc] : per_pose) {
        cell.str("");
        cell << std::fixed << std::setprecision(3) << acc.los_acc << " (" << acc.los_acc_no_lpf
             << ")";
        out << std::left << std::setw(11) << to_string(pose) << std::setw(22) << cell.str()
            << std::setw(11) << std::fixed << std::setprecision(3) << acc.pose_acc
            << std::setw(10) << acc.majority_acc << acc.n << '\n';
    }
    cell.str("");
    cell << std::fixed << std::setprecision(3) << overall_los_acc << " ("
         << overall_los_acc_no_lpf << ")";
    out << std::left << std::setw(11) << "overall" << std::setw(22) << cell.str()
        << std::setw(11) << std::fixed << std::setprecision(3) << overall_pose_acc << '\n';
    if (!transitions.empty()) {
        out << "\ntransition delay (ms):\n";
        for (const auto& [key, s] : transitions) {
            out << "  " << to_string(key.first) << " -> " << to_string(key.second) << ": "
                << std::fixed << std::setprecision(1) << s.mean_ms << " (" << s.std_ms << ")"
                << "  n=" << s.n;
            if (s.censored > 0) out << "  censored=" << s.censored;
            out << '\n';
        }
    }
}

}  // namespace gatepose::harness
