#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "gatepose/errors.hpp"
#include "gatepose/harness/config.hpp"
#include "gatepose/harness/dataset.hpp"
#include "gatepose/harness/evaluate.hpp"
#include "gatepose/harness/walk.hpp"

using namespace gatepose;
using namespace gatepose::harness;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gatepose_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A bundle whose networks output fixed probabilities via the dense bias.
models::ModelBundle rigged_bundle(double p_nlos_logit, double p_pocket_logit) {
    models::ModelBundle b;
    b.los_net = models::build_los_classifier();
    b.pose_los.net = models::build_pose_detector();
    b.pose_nlos.net = models::build_pose_detector();
    const auto rig = [](neural::Network& net, double logit) {
        for (const auto& p : net.params())
            std::fill(p.value->begin(), p.value->end(), 0.0);
        for (auto& p : net.params())
            if (p.name.find("dense.bias") != std::string::npos) (*p.value)[0] = logit;
    };
    rig(b.los_net, p_nlos_logit);
    rig(b.pose_los.net, p_pocket_logit);
    rig(b.pose_nlos.net, p_pocket_logit);
    return b;
}

}  // namespace

TEST_CASE("config: sections, comments, typed getters") {
    std::istringstream in(
        "# comment\n[channel]\nnoise_scale = 410.5\nfp_index_min=702\n\n[walk]\n"
        "pose_schedule = 0:LOS_HAND,5000:BACK  # trailing comment\n");
    const Config cfg = Config::parse(in);
    CHECK(cfg.get("channel", "noise_scale", 0.0) == 410.5);
    CHECK(cfg.get("channel", "fp_index_min", 0) == 702);
    CHECK(cfg.get("channel", "missing", 7) == 7);
    CHECK(cfg.get("walk", "pose_schedule", std::string{}) == "0:LOS_HAND,5000:BACK");
    CHECK_FALSE(cfg.has("nope", "nope"));

    std::istringstream bad("key_without_equals\n");
    CHECK_THROWS_AS(Config::parse(bad), IoError);
}

TEST_CASE("scenario_from_config: schedule parsing and overrides") {
    std::istringstream in(
        "[walk]\nduration_ms = 12000\npose_schedule = 0:NLOS_HAND,6000:FRONT\n"
        "[channel]\nnoise_scale = 350\n[gait]\npocket_amp = 3.5\n");
    const WalkScenario s = scenario_from_config(Config::parse(in));
    CHECK(s.duration_ms == 12000.0);
    REQUIRE(s.pose_schedule.size() == 2);
    CHECK(s.pose_schedule[1].second == Pose::Front);
    CHECK(s.channel_params.noise_scale == 350.0);
    CHECK(s.gait_params.pocket_amp == 3.5);
}

TEST_CASE("generate_datasets: arithmetic, balance and determinism") {
    const auto dir_a = scratch_dir("gen_a");
    const auto dir_b = scratch_dir("gen_b");
    DatasetCounts counts{40, 200};
    channel::ChannelParams cp;
    imusim::GaitParams gp;

    const DatasetPaths a = generate_datasets(dir_a, counts, cp, gp, 42);
    const DatasetPaths b = generate_datasets(dir_b, counts, cp, gp, 42);

    const auto train_rows = load_cir_csv(a.cir_train);
    const auto test_rows = load_cir_csv(a.cir_test);
    CHECK(train_rows.size() == 128);  // 160 * 0.8
    CHECK(test_rows.size() == 32);
    int n_los = 0;
    for (const auto& r : train_rows) n_los += r.label == Condition::Los;
    for (const auto& r : test_rows) n_los += r.label == Condition::Los;
    CHECK(n_los == 80);  // pose-balanced: half the records are LOS

    const auto imu_train = load_imu_csv(a.imu_train);
    const auto imu_test = load_imu_csv(a.imu_test);
    CHECK(imu_train.size() + imu_test.size() == 4 * 200);
    CHECK(imu_train.size() == 4 * 160);

    // byte-identical reruns
    for (const char* f : {"cir_train.csv", "cir_test.csv", "imu_train.csv", "imu_test.csv",
                          "manifest.json"})
        REQUIRE(slurp(dir_a / f) == slurp(dir_b / f));

    const DatasetManifest m = read_manifest(a.manifest);
    CHECK(m.n_los == 80);
    CHECK(m.n_nlos == 80);
    CHECK(m.train_fraction == 0.8);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("imu_windows: ready windows only, never straddling pose blocks") {
    const auto dir = scratch_dir("windows");
    DatasetCounts counts{4, 60};
    const DatasetPaths p = generate_datasets(dir, counts, {}, {}, 7);
    const auto rows = load_imu_csv(p.imu_train);  // 4 blocks of 48 samples
    const auto windows = imu_windows(rows);
    CHECK(windows.size() == 4 * (48 - 17));
    for (const auto& w : windows) {
        REQUIRE(w.window.ready());
        // all samples of one window belong to one pose block (time increases)
        for (int i = 1; i < imusim::kWindowSteps; ++i)
            REQUIRE(w.window.at(i).t_ms > w.window.at(i - 1).t_ms);
    }
    const auto strided = imu_windows(rows, 3);
    CHECK(strided.size() == 4 * ((48 - 18) / 3 + 1));
    fs::remove_all(dir);
}

TEST_CASE("import: heals missing diagnostics, skips malformed rows") {
    const auto dir = scratch_dir("import");
    // hand-built corpus: label + cir columns only (no diagnostics anywhere)
    const fs::path corpus = dir / "corpus.csv";
    {
        std::ofstream out(corpus);
        out << "NLOS";
        for (int i = 0; i < channel::kCirLength; ++i) out << ",CIR" << i;
        out << "\n";
        channel::ChannelParams cp;
        Rng root(5);
        for (int r = 0; r < 6; ++r) {
            Rng rng = root.fork(r);
            const auto rec = channel::generate_cir(
                r % 2 ? Condition::Nlos : Condition::Los, cp, rng);
            out << (r % 2);
            for (int i = 0; i < channel::kCirLength; ++i)
                out << ',' << rec.magnitude_at(i);
            out << "\n";
        }
        out << "1,not_a_number\n";       // short, malformed row
        out << "2";                       // bad label
        for (int i = 0; i < channel::kCirLength; ++i) out << ",1.0";
        out << "\n";
    }
    ImportSchema schema;
    schema.label_column = "NLOS";
    schema.cir_prefix = "CIR";
    const ImportReport report = import_cir_corpus(corpus, schema, dir / "native.csv");
    CHECK(report.imported == 6);
    CHECK(report.healed == 6);  // no diagnostics columns: all recomputed
    CHECK(report.skipped == 2);

    const auto rows = load_cir_csv(dir / "native.csv");
    REQUIRE(rows.size() == 6);
    for (const auto& r : rows) {
        CHECK(r.diagnostics.fp_index >= 700);
        CHECK(r.diagnostics.max_noise > 0.0);
    }
    CHECK(rows[1].label == Condition::Nlos);

    SUBCASE("missing mandatory column") {
        ImportSchema bad;
        bad.label_column = "absent";
        CHECK_THROWS_AS(import_cir_corpus(corpus, bad, dir / "x.csv"), IoError);
    }
    fs::remove_all(dir);
}

TEST_CASE("walk: warm-up suppression and tick arithmetic") {
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::Front}};
    s.duration_ms = 10000.0;
    s.seed = 3;
    const WalkResult r = run_walk(s, nullptr, /*oracle=*/true);
    // 50 ranging ticks, the first 6 fall inside the 18-sample warm-up
    CHECK(r.estimates.size() == 44);
    CHECK(r.suppressed == 6);
    CHECK(r.estimates.front().t_ms == 1200.0);
    // no estimate before 18 imu samples (t = 1020) exist
    for (const auto& e : r.estimates) REQUIRE(e.t_ms >= 1020.0);
    // distance follows the walk
    CHECK(r.estimates.front().distance_m ==
          doctest::Approx(s.distance_at(1200.0)).epsilon(1e-3));
}

TEST_CASE("walk: equal timestamps process the IMU tick first") {
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::LosHand}};
    s.imu_interval_ms = 100.0;
    s.ranging_interval_ms = 100.0;  // every tick collides
    s.duration_ms = 3000.0;
    const WalkResult r = run_walk(s, nullptr, true);
    REQUIRE(!r.estimates.empty());
    // 18th imu sample lands at t=1700; the colliding ranging tick sees it
    CHECK(r.estimates.front().t_ms == 1700.0);
}

TEST_CASE("tick interleaving: 3 or 4 IMU ticks between consecutive ranging ticks") {
    // 200/60 is non-integral: the merged stream carries 3,3,4 IMU ticks per
    // ranging interval, repeating every 600 ms, and stays timestamp-ordered.
    const double imu = 60.0, rng = 200.0, duration = 10000.0;
    int fours = 0, intervals = 0;
    for (int k = 0; (k + 1) * rng <= duration; ++k, ++intervals) {
        int imu_ticks = 0;
        for (int j = 0; j * imu < duration; ++j)
            if (j * imu > k * rng && j * imu <= (k + 1) * rng) ++imu_ticks;
        REQUIRE((imu_ticks == 3 || imu_ticks == 4));
        if (imu_ticks == 4) ++fours;
    }
    // 50 full intervals in 10 s; every third one carries the fourth tick
    CHECK(intervals == 50);
    CHECK(fours == 16);
}

TEST_CASE("walk: deterministic given scenario and seed") {
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::NlosHand}, {4000.0, Pose::Front}};
    s.duration_ms = 8000.0;
    s.seed = 11;
    const WalkResult a = run_walk(s, nullptr, true);
    const WalkResult b = run_walk(s, nullptr, true);
    REQUIRE(a.estimates.size() == b.estimates.size());
    for (size_t i = 0; i < a.estimates.size(); ++i) {
        REQUIRE(a.estimates[i].t_ms == b.estimates[i].t_ms);
        REQUIRE(a.estimates[i].raw_p == b.estimates[i].raw_p);
        REQUIRE(a.estimates[i].smoothed_p == b.estimates[i].smoothed_p);
        REQUIRE(a.estimates[i].pose == b.estimates[i].pose);
        REQUIRE(a.estimates[i].distance_m == b.estimates[i].distance_m);
    }
}

TEST_CASE("walk: the branch rule is absolute under channel/IMU mismatch") {
    // Classifier rigged to always say NLOS; pose nets rigged mid-range.
    models::ModelBundle bundle = rigged_bundle(+5.0, -5.0);
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::LosHand}};  // LOS-grade IMU, but the CIR path
    s.duration_ms = 6000.0;                    // is overridden by the rigged net
    const WalkResult r = run_walk(s, &bundle, false);
    REQUIRE(!r.estimates.empty());
    for (const auto& e : r.estimates) {
        CHECK(e.los_label == Condition::Nlos);
        const bool nlos_pose = e.pose == Pose::NlosHand || e.pose == Pose::Back;
        REQUIRE(nlos_pose);
    }
}

TEST_CASE("oracle walks: transition delay is exactly four ranging ticks") {
    for (const auto [from, to] : {std::pair{Pose::LosHand, Pose::NlosHand},
                                  std::pair{Pose::NlosHand, Pose::LosHand},
                                  std::pair{Pose::Front, Pose::Back}}) {
        WalkScenario s;
        s.pose_schedule = {{0.0, from}, {5000.0, to}};
        s.duration_ms = 10000.0;
        s.seed = 17;
        const WalkResult r = run_walk(s, nullptr, true);
        const auto events = transition_delays(r, s);
        REQUIRE(events.size() == 1);
        CHECK_FALSE(events[0].censored);
        CHECK(events[0].delay_ms == 800.0);
    }
}

TEST_CASE("transition matrix: no switches, empty matrix; censored runs reported") {
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::Front}};
    s.duration_ms = 6000.0;
    const WalkResult r = run_walk(s, nullptr, true);
    CHECK(transition_delays(r, s).empty());

    // switch so late the filter cannot flip before the walk ends
    WalkScenario late;
    late.pose_schedule = {{0.0, Pose::LosHand}, {9900.0, Pose::NlosHand}};
    late.duration_ms = 10000.0;
    const WalkResult lr = run_walk(late, nullptr, true);
    const auto events = transition_delays(lr, late);
    REQUIRE(events.size() == 1);
    CHECK(events[0].censored);
    const auto stats = aggregate_transitions(events);
    CHECK(stats.at({Pose::LosHand, Pose::NlosHand}).censored == 1);
    CHECK(stats.at({Pose::LosHand, Pose::NlosHand}).n == 0);
}

TEST_CASE("evaluate: report arithmetic holds and streams are per pose") {
    const auto dir = scratch_dir("eval");
    DatasetCounts counts{30, 150};  // 30 test imu samples per pose: enough for windows
    const DatasetPaths p = generate_datasets(dir, counts, {}, {}, 99);
    const auto test_rows = load_cir_csv(p.cir_test);
    const auto windows = imu_windows(load_imu_csv(p.imu_test));

    // always-LOS classifier: per-pose LOS accuracy is 1 for LOS poses, 0 for NLOS
    models::ModelBundle bundle = rigged_bundle(-5.0, -5.0);
    const EvalReport report = evaluate(bundle, test_rows, windows);

    long weighted = 0, total = 0;
    for (const auto& [pose, acc] : report.per_pose) {
        weighted += static_cast<long>(std::lround(acc.los_acc * acc.n));
        total += acc.n;
        if (los_class(pose) == Condition::Los) CHECK(acc.los_acc == 1.0);
        else CHECK(acc.los_acc == 0.0);
    }
    CHECK(report.overall_los_acc ==
          doctest::Approx(static_cast<double>(weighted) / total).epsilon(1e-12));

    // pose accuracy can never exceed LOS/NLOS accuracy
    for (const auto& [pose, acc] : report.per_pose) CHECK(acc.pose_acc <= acc.los_acc + 1e-12);

    fs::remove_all(dir);
}

TEST_CASE("evaluate: json round trip and table rendering") {
    const auto dir = scratch_dir("eval_json");
    DatasetCounts counts{10, 150};
    const DatasetPaths p = generate_datasets(dir, counts, {}, {}, 5);
    models::ModelBundle bundle = rigged_bundle(5.0, 5.0);
    const EvalReport report =
        evaluate(bundle, load_cir_csv(p.cir_test), imu_windows(load_imu_csv(p.imu_test)));

    const auto j = report.to_json();
    const EvalReport back = EvalReport::from_json(j);
    CHECK(back.overall_los_acc == report.overall_los_acc);
    CHECK(back.per_pose.size() == report.per_pose.size());

    std::ostringstream table;
    report.print_table(table);
    CHECK(table.str().find("LOS_HAND") != std::string::npos);
    CHECK(table.str().find("overall") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("estimates jsonl carries one object per estimate") {
    WalkScenario s;
    s.pose_schedule = {{0.0, Pose::Back}};
    s.duration_ms = 4000.0;
    const WalkResult r = run_walk(s, nullptr, true);
    std::ostringstream out;
    write_estimates_jsonl(out, r.estimates);
    std::istringstream in(out.str());
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
        CHECK(line.find("\"pose\":") != std::string::npos);
        CHECK(line.find("\"smoothed_p_nlos\":") != std::string::npos);
        ++n;
    }
    CHECK(n == r.estimates.size());
}
