// Command-line front end for the gate-approach pose detection pipeline:
// dataset generation, public-corpus import, training, evaluation, and
// simulated walks with transition-delay reporting.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "gatepose/errors.hpp"
#include "gatepose/harness/config.hpp"
#include "gatepose/harness/dataset.hpp"
#include "gatepose/harness/evaluate.hpp"
#include "gatepose/harness/walk.hpp"
#include "gatepose/models.hpp"
#include "gatepose/neural/serialize.hpp"
#include "gatepose/neural/train.hpp"

namespace fs = std::filesystem;
using namespace gatepose;
using harness::Config;

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    bool seed_set = false;
    fs::path out_dir = "out";
    fs::path config_path;

    Config config() const {
        return config_path.empty() ? Config{} : Config::parse_file(config_path);
    }
    uint64_t effective_seed(const Config& cfg, const std::string& section) const {
        if (seed_set) return seed;
        return cfg.get(section, "seed", seed);
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

int cmd_gen(const GlobalOpts& g) {
    const Config cfg = g.config();
    const auto counts = harness::counts_from_config(cfg);
    const auto channel = harness::channel_params_from_config(cfg);
    const auto gait = harness::gait_params_from_config(cfg);
    const uint64_t seed = g.effective_seed(cfg, "counts");
    const auto paths = harness::generate_datasets(g.out_dir, counts, channel, gait, seed);
    std::cout << "wrote " << paths.cir_train << ", " << paths.cir_test << ", "
              << paths.imu_train << ", " << paths.imu_test << ", " << paths.manifest << "\n";
    return 0;
}

int cmd_import(const GlobalOpts& g, const fs::path& in_csv) {
    const Config cfg = g.config();
    const auto schema = harness::ImportSchema::from_config(cfg);
    fs::create_directories(g.out_dir);
    const fs::path out_csv = g.out_dir / "imported.csv";
    const auto report = harness::import_cir_corpus(in_csv, schema, out_csv);
    write_text(g.out_dir / "import_report.json", report.to_json().dump(2) + "\n");
    std::cout << "imported " << report.imported << "  healed " << report.healed
              << "  skipped " << report.skipped << " -> " << out_csv << "\n";
    return 0;
}

int cmd_train_los(const GlobalOpts& g, const fs::path& data_dir, const fs::path& model_dir,
                  int input_len) {
    const Config cfg = g.config();
    neural::TrainConfig defaults;
    defaults.batch_size = 50;
    defaults.max_epochs = 20;
    defaults.early_stop_loss = 0.03;
    neural::TrainConfig tc = harness::train_config_from_config(cfg, "train_los", defaults);
    tc.seed = g.effective_seed(cfg, "train_los");

    const auto rows = harness::load_cir_csv(data_dir / "cir_train.csv");
    std::vector<neural::Tensor> inputs;
    std::vector<double> labels;
    harness::cir_training_set(rows, input_len, inputs, labels);

    neural::Network net = models::build_los_classifier(input_len);
    Rng init_rng(tc.seed ^ 0xA11CEull);
    net.init_params(init_rng);
    const auto result = neural::train(net, inputs, labels, tc);

    models::ModelBundle::save_los(model_dir, net, input_len);
    std::ofstream curve(model_dir / "loss_curve_los.csv");
    neural::write_loss_curve_csv(curve, result);
    std::cout << "trained LOS/NLOS classifier: " << result.epochs_run
              << " epochs, final loss " << result.epoch_mean_loss.back() << "\n";
    return 0;
}

int cmd_train_pose(const GlobalOpts& g, const fs::path& data_dir, const fs::path& model_dir) {
    const Config cfg = g.config();
    neural::TrainConfig defaults;
    defaults.batch_size = 100;
    defaults.max_epochs = 100;
    defaults.early_stop_loss = 0.03;
    neural::TrainConfig tc = harness::train_config_from_config(cfg, "train_pose", defaults);
    tc.seed = g.effective_seed(cfg, "train_pose");
    const int stride = cfg.get("train_pose", "window_stride", 1);

    const auto rows = harness::load_imu_csv(data_dir / "imu_train.csv");
    const auto windows = harness::imu_windows(rows, stride);

    for (Condition branch : {Condition::Los, Condition::Nlos}) {
        models::FeatureStats stats;
        std::vector<neural::Tensor> inputs;
        std::vector<double> labels;
        harness::pose_training_set(windows, branch, stats, inputs, labels);

        neural::Network net = models::build_pose_detector();
        neural::TrainConfig btc = tc;
        btc.seed = tc.seed + (branch == Condition::Nlos ? 1 : 0);
        Rng init_rng(btc.seed ^ 0xB0D1ull);
        net.init_params(init_rng);
        const auto result = neural::train(net, inputs, labels, btc);

        models::ModelBundle::save_pose_branch(model_dir, branch, net, stats);
        std::ofstream curve(model_dir /
                            (branch == Condition::Los ? "loss_curve_pose_los.csv"
                                                      : "loss_curve_pose_nlos.csv"));
        neural::write_loss_curve_csv(curve, result);
        std::cout << "trained " << to_string(branch) << "-branch pose detector: "
                  << result.epochs_run << " epochs, final loss "
                  << result.epoch_mean_loss.back() << "\n";
    }
    return 0;
}

int cmd_eval(const GlobalOpts& g, const fs::path& data_dir, const fs::path& model_dir,
             double flip_rate) {
    models::ModelBundle bundle = models::ModelBundle::load(model_dir);
    const auto test_rows = harness::load_cir_csv(data_dir / "cir_test.csv");
    const auto windows = harness::imu_windows(harness::load_imu_csv(data_dir / "imu_test.csv"));

    harness::EvalOptions options;
    options.outlier_flip_rate = flip_rate;
    const auto report = harness::evaluate(bundle, test_rows, windows, options);

    fs::create_directories(g.out_dir);
    write_text(g.out_dir / "eval_report.json", report.to_json().dump(2) + "\n");
    report.print_table(std::cout);
    return 0;
}

int cmd_walk(const GlobalOpts& g, const fs::path& scenario_path, const fs::path& model_dir,
             bool oracle, int trials) {
    Config cfg = scenario_path.empty() ? g.config() : Config::parse_file(scenario_path);
    harness::WalkScenario scenario = harness::scenario_from_config(cfg);
    if (g.seed_set) scenario.seed = g.seed;

    models::ModelBundle bundle;
    if (!oracle) bundle = models::ModelBundle::load(model_dir);

    std::vector<harness::WalkResult> results;
    std::vector<harness::WalkScenario> scenarios;
    for (int t = 0; t < trials; ++t) {
        harness::WalkScenario trial = scenario;
        trial.seed = scenario.seed + static_cast<uint64_t>(t);
        results.push_back(harness::run_walk(trial, oracle ? nullptr : &bundle, oracle));
        scenarios.push_back(trial);
    }

    fs::create_directories(g.out_dir);
    std::ofstream jsonl(g.out_dir / "estimates.jsonl");
    if (!jsonl) throw IoError("cannot write estimates.jsonl");
    for (const auto& r : results) harness::write_estimates_jsonl(jsonl, r.estimates);

    const auto report = harness::evaluate_walks(results, scenarios);
    write_text(g.out_dir / "walk_report.json", report.to_json().dump(2) + "\n");
    report.print_table(std::cout);
    return 0;
}

int cmd_report(const fs::path& report_path) {
    std::ifstream in(report_path);
    if (!in) throw IoError("cannot read " + report_path.string());
    const auto report = harness::EvalReport::from_json(nlohmann::json::parse(in));
    report.print_table(std::cout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UWB gate-approach pose detection pipeline simulator"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Override every seed in play")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--out-dir", g.out_dir, "Output directory");
    app.add_option("--config", g.config_path, "Key/value config file");

    auto* gen = app.add_subcommand("gen", "Generate labeled CIR + IMU datasets");

    fs::path import_in;
    auto* import = app.add_subcommand("import", "Import a public CIR corpus");
    import->add_option("--in", import_in, "Corpus CSV")->required();

    fs::path data_dir = "out", model_dir = "models";
    int input_len = cirproc::kEcirLength;
    auto* train_los = app.add_subcommand("train-los", "Train the LOS/NLOS classifier");
    train_los->add_option("--data-dir", data_dir, "Dataset directory");
    train_los->add_option("--models", model_dir, "Model directory");
    train_los->add_option("--input-len", input_len, "135 (eCIR) or 1016 (full record)");

    auto* train_pose = app.add_subcommand("train-pose", "Train both pose-detector branches");
    train_pose->add_option("--data-dir", data_dir, "Dataset directory");
    train_pose->add_option("--models", model_dir, "Model directory");

    double flip_rate = 0.0;
    auto* eval = app.add_subcommand("eval", "Evaluate on the held-out split");
    eval->add_option("--data-dir", data_dir, "Dataset directory");
    eval->add_option("--models", model_dir, "Model directory");
    eval->add_option("--flip-rate", flip_rate, "Adversarial raw-probability flip fraction");

    fs::path scenario_path;
    bool oracle = false;
    int trials = 1;
    auto* walk = app.add_subcommand("walk", "Run gate-approach walks");
    walk->add_option("--scenario", scenario_path, "Scenario config file");
    walk->add_option("--models", model_dir, "Model directory");
    walk->add_option("--trials", trials, "Repeated walks (seed advances per trial)");
    walk->add_flag("--oracle", oracle, "Replace model outputs with ground truth");

    fs::path report_path = "out/eval_report.json";
    auto* report = app.add_subcommand("report", "Render a saved report as a table");
    report->add_option("--in", report_path, "Report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(g);
        if (import->parsed()) return cmd_import(g, import_in);
        if (train_los->parsed()) return cmd_train_los(g, data_dir, model_dir, input_len);
        if (train_pose->parsed()) return cmd_train_pose(g, data_dir, model_dir);
        if (eval->parsed()) return cmd_eval(g, data_dir, model_dir, flip_rate);
        if (walk->parsed()) return cmd_walk(g, scenario_path, model_dir, oracle, trials);
        if (report->parsed()) return cmd_report(report_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
