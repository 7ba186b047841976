#include "gatepose/harness/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gatepose/errors.hpp"

namespace gatepose::harness {

using nlohmann::json;

json DatasetManifest::to_json() const {
    return json{{"n_los", n_los},
                {"n_nlos", n_nlos},
                {"n_per_pose", n_per_pose},
                {"imu_samples_per_pose", imu_samples_per_pose},
                {"split", {{"train", train_fraction}, {"test", 1.0 - train_fraction}}},
                {"source", source},
                {"seed", seed}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    DatasetManifest m;
    m.n_los = j.at("n_los").get<int>();
    m.n_nlos = j.at("n_nlos").get<int>();
    auto per_pose = j.at("n_per_pose").get<std::vector<int>>();
    for (int i = 0; i < 4; ++i) m.n_per_pose[i] = per_pose.at(i);
    m.imu_samples_per_pose = j.at("imu_samples_per_pose").get<int>();
    m.train_fraction = j.at("split").at("train").get<double>();
    m.source = j.at("source").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    return m;
}

channel::ChannelParams channel_params_from_config(const Config& cfg) {
    channel::ChannelParams p;
    p.fp_index_min = cfg.get("channel", "fp_index_min", p.fp_index_min);
    p.fp_index_max = cfg.get("channel", "fp_index_max", p.fp_index_max);
    p.noise_scale = cfg.get("channel", "noise_scale", p.noise_scale);
    p.los_peak_snr.first = cfg.get("channel", "los_peak_snr_min", p.los_peak_snr.first);
    p.los_peak_snr.second = cfg.get("channel", "los_peak_snr_max", p.los_peak_snr.second);
    p.nlos_peak_snr.first = cfg.get("channel", "nlos_peak_snr_min", p.nlos_peak_snr.first);
    p.nlos_peak_snr.second = cfg.get("channel", "nlos_peak_snr_max", p.nlos_peak_snr.second);
    p.los_decay_ns = cfg.get("channel", "los_decay_ns", p.los_decay_ns);
    p.nlos_cluster_rate = cfg.get("channel", "nlos_cluster_rate", p.nlos_cluster_rate);
    p.nlos_cluster_decay_ns =
        cfg.get("channel", "nlos_cluster_decay_ns", p.nlos_cluster_decay_ns);
    p.nlos_excess_ns = cfg.get("channel", "nlos_excess_ns", p.nlos_excess_ns);
    p.rng_seed = cfg.get("channel", "rng_seed", p.rng_seed);
    return p;
}

imusim::GaitParams gait_params_from_config(const Config& cfg) {
    imusim::GaitParams p;
    p.step_rate_hz = cfg.get("gait", "step_rate_hz", p.step_rate_hz);
    p.hand_amp = cfg.get("gait", "hand_amp", p.hand_amp);
    p.pocket_amp = cfg.get("gait", "pocket_amp", p.pocket_amp);
    p.noise_sigma = cfg.get("gait", "noise_sigma", p.noise_sigma);
    p.gravity_noise_sigma = cfg.get("gait", "gravity_noise_sigma", p.gravity_noise_sigma);
    p.wobble_deg = cfg.get("gait", "wobble_deg", p.wobble_deg);
    p.rng_seed = cfg.get("gait", "rng_seed", p.rng_seed);
    return p;
}

DatasetCounts counts_from_config(const Config& cfg) {
    DatasetCounts c;
    c.cir_per_pose = cfg.get("counts", "cir_per_pose", c.cir_per_pose);
    c.imu_per_pose = cfg.get("counts", "imu_per_pose", c.imu_per_pose);
    return c;
}

neural::TrainConfig train_config_from_config(const Config& cfg, const std::string& section,
                                             neural::TrainConfig defaults) {
    neural::TrainConfig t = defaults;
    t.batch_size = cfg.get(section, "batch_size", t.batch_size);
    t.max_epochs = cfg.get(section, "max_epochs", t.max_epochs);
    t.seed = cfg.get(section, "seed", t.seed);
    t.adam.lr = cfg.get(section, "lr", t.adam.lr);
    t.early_stop_loss = cfg.get(section, "early_stop_loss", t.early_stop_loss);
    return t;
}

DatasetPaths DatasetPaths::in_dir(const std::filesystem::path& dir) {
    return {dir / "cir_train.csv", dir / "cir_test.csv", dir / "imu_train.csv",
            dir / "imu_test.csv", dir / "manifest.json"};
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest.to_json().dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return DatasetManifest::from_json(json::parse(in));
}

DatasetPaths generate_datasets(const std::filesystem::path& out_dir, DatasetCounts counts,
                               const channel::ChannelParams& channel_params,
                               const imusim::GaitParams& gait_params, uint64_t seed) {
    if (counts.cir_per_pose < 1 || counts.imu_per_pose < imusim::kWindowSteps)
        throw std::invalid_argument("generate_datasets: counts too small");
    std::filesystem::create_directories(out_dir);
    const DatasetPaths paths = DatasetPaths::in_dir(out_dir);
    const Rng root(seed);

    // CIR rows, pose-balanced, one fork per record.
    std::vector<channel::CirDatasetRow> rows;
    rows.reserve(static_cast<size_t>(counts.cir_per_pose) * 4);
    for (Pose pose : kAllPoses) {
        for (int i = 0; i < counts.cir_per_pose; ++i) {
            Rng rec_rng = root.fork(static_cast<uint64_t>(pose) * 1000003u + i);
            channel::CirRecord rec =
                channel::generate_cir(los_class(pose), channel_params, rec_rng);
            rec.pose_label = pose;
            rows.push_back(channel::to_dataset_row(rec));
        }
    }
    Rng shuffle_rng = root.fork(0x5817ff1eu);
    for (size_t i = rows.size() - 1; i > 0; --i)
        std::swap(rows[i], rows[shuffle_rng.uniform_int(0, static_cast<int>(i))]);

    const size_t n_train = static_cast<size_t>(std::lround(rows.size() * 0.8));
    auto write_rows = [](const std::filesystem::path& p, auto begin, auto end) {
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        channel::write_cir_csv_header(out);
        for (auto it = begin; it != end; ++it) channel::write_cir_csv_row(out, *it);
    };
    write_rows(paths.cir_train, rows.begin(), rows.begin() + n_train);
    write_rows(paths.cir_test, rows.begin() + n_train, rows.end());

    // IMU: one trace per pose, split at the 80% time mark so no window
    // straddles train and test.
    std::ofstream imu_train(paths.imu_train), imu_test(paths.imu_test);
    if (!imu_train || !imu_test) throw IoError("cannot write imu csv files");
    imusim::write_imu_csv_header(imu_train);
    imusim::write_imu_csv_header(imu_test);
    for (Pose pose : kAllPoses) {
        Rng trace_rng = root.fork(0xabcd0000u + static_cast<uint64_t>(pose));
        const double duration = counts.imu_per_pose * imusim::kImuIntervalMs;
        const auto trace = imusim::generate_imu_trace(pose, duration, gait_params, trace_rng);
        const size_t cut = static_cast<size_t>(std::lround(trace.size() * 0.8));
        for (size_t i = 0; i < trace.size(); ++i)
            imusim::write_imu_csv_row(i < cut ? imu_train : imu_test, {trace[i], pose});
    }

    DatasetManifest manifest;
    manifest.n_los = counts.cir_per_pose * 2;
    manifest.n_nlos = counts.cir_per_pose * 2;
    manifest.n_per_pose = {counts.cir_per_pose, counts.cir_per_pose, counts.cir_per_pose,
                           counts.cir_per_pose};
    manifest.imu_samples_per_pose = counts.imu_per_pose;
    manifest.seed = seed;
    write_manifest(paths.manifest, manifest);
    return paths;
}

// ------------------------------------------------------------------ import ---

ImportSchema ImportSchema::from_config(const Config& cfg) {
    ImportSchema s;
    s.label_column = cfg.get("import", "label_column", s.label_column);
    s.cir_prefix = cfg.get("import", "cir_prefix", s.cir_prefix);
    s.pose_column = cfg.get("import", "pose_column", s.pose_column);
    s.fp_index_column = cfg.get("import", "fp_index_column", s.fp_index_column);
    s.max_noise_column = cfg.get("import", "max_noise_column", s.max_noise_column);
    s.std_noise_column = cfg.get("import", "std_noise_column", s.std_noise_column);
    s.fp_ampl_prefix = cfg.get("import", "fp_ampl_prefix", s.fp_ampl_prefix);
    s.noise_window.first = cfg.get("import", "noise_window_begin", s.noise_window.first);
    s.noise_window.second = cfg.get("import", "noise_window_end", s.noise_window.second);
    return s;
}

json ImportReport::to_json() const {
    return json{{"imported", imported}, {"skipped", skipped}, {"healed", healed}};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t end = line.find(',', start);
        if (end == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

bool parse_field(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e && std::isfinite(out);
}

}  // namespace

ImportReport import_cir_corpus(const std::filesystem::path& in_csv, const ImportSchema& schema,
                               const std::filesystem::path& out_csv) {
    std::ifstream in(in_csv);
    if (!in) throw IoError("cannot read corpus " + in_csv.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("corpus " + in_csv.string() + " is empty");

    const auto header = split_csv_line(line);
    auto col_of = [&](const std::string& name) -> int {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int label_col = col_of(schema.label_column);
    if (label_col < 0)
        throw IoError("corpus is missing the label column '" + schema.label_column + "'");
    std::array<int, channel::kCirLength> cir_cols;
    for (int i = 0; i < channel::kCirLength; ++i) {
        cir_cols[i] = col_of(schema.cir_prefix + std::to_string(i));
        if (cir_cols[i] < 0)
            throw IoError("corpus is missing CIR column '" + schema.cir_prefix +
                          std::to_string(i) + "'");
    }
    const int pose_col = schema.pose_column.empty() ? -1 : col_of(schema.pose_column);
    const int fp_col = col_of(schema.fp_index_column);
    const int maxn_col = col_of(schema.max_noise_column);
    const int stdn_col = col_of(schema.std_noise_column);
    std::array<int, 3> ampl_cols{-1, -1, -1};
    for (int k = 0; k < 3; ++k) ampl_cols[k] = col_of(schema.fp_ampl_prefix + std::to_string(k + 1));
    const bool have_diags = fp_col >= 0 && maxn_col >= 0 && stdn_col >= 0 &&
                            ampl_cols[0] >= 0 && ampl_cols[1] >= 0 && ampl_cols[2] >= 0;

    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot write " + out_csv.string());
    channel::write_cir_csv_header(out);

    ImportReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        channel::CirDatasetRow row;
        row.magnitudes.resize(channel::kCirLength);
        bool ok = true;
        double v = 0.0;

        if (static_cast<size_t>(label_col) >= fields.size() ||
            !parse_field(fields[label_col], v) || (v != 0.0 && v != 1.0)) {
            ok = false;
        } else {
            row.label = v == 1.0 ? Condition::Nlos : Condition::Los;
        }
        for (int i = 0; ok && i < channel::kCirLength; ++i) {
            if (static_cast<size_t>(cir_cols[i]) >= fields.size() ||
                !parse_field(fields[cir_cols[i]], v) || v < 0.0) {
                ok = false;
                break;
            }
            row.magnitudes[i] = v;
        }
        if (ok && pose_col >= 0 && static_cast<size_t>(pose_col) < fields.size() &&
            !fields[pose_col].empty()) {
            if (parse_field(fields[pose_col], v) && v >= 0.0 && v <= 3.0)
                row.pose = static_cast<Pose>(static_cast<int>(v));
            else
                ok = false;
        }
        if (!ok) {
            ++report.skipped;
            continue;
        }

        bool healed = !have_diags;
        if (have_diags) {
            double fp, mn, sn, a1, a2, a3;
            if (parse_field(fields[fp_col], fp) && parse_field(fields[maxn_col], mn) &&
                parse_field(fields[stdn_col], sn) && parse_field(fields[ampl_cols[0]], a1) &&
                parse_field(fields[ampl_cols[1]], a2) && parse_field(fields[ampl_cols[2]], a3) &&
                fp >= 0 && fp + 3 < channel::kCirLength) {
                row.diagnostics.fp_index = static_cast<int>(fp);
                row.diagnostics.max_noise = mn;
                row.diagnostics.std_noise = sn;
                row.diagnostics.fp_ampl = {a1, a2, a3};
            } else {
                healed = true;
            }
        }
        if (healed) {
            try {
                row.diagnostics = channel::compute_diagnostics_from_magnitudes(
                    row.magnitudes, schema.noise_window);
                ++report.healed;
            } catch (const NoFirstPathError&) {
                ++report.skipped;
                continue;
            }
        }
        channel::write_cir_csv_row(out, row);
        ++report.imported;
    }
    return report;
}

// ------------------------------------------------------- training assembly ---

void cir_training_set(const std::vector<channel::CirDatasetRow>& rows, int input_len,
                      std::vector<neural::Tensor>& inputs, std::vector<double>& labels) {
    inputs.clear();
    labels.clear();
    inputs.reserve(rows.size());
    labels.reserve(rows.size());
    for (const auto& row : rows) {
        const double scale = row.diagnostics.max_noise > 0.0 ? row.diagnostics.max_noise : 1.0;
        neural::Tensor x({input_len, 1});
        if (input_len == cirproc::kEcirLength) {
            const cirproc::Ecir e = cirproc::extract_ecir(row);
            for (int i = 0; i < input_len; ++i) x.data[i] = e.values[i] / scale;
        } else if (input_len == static_cast<int>(row.magnitudes.size())) {
            for (int i = 0; i < input_len; ++i) x.data[i] = row.magnitudes[i] / scale;
        } else {
            throw std::invalid_argument("cir_training_set: unsupported input length");
        }
        inputs.push_back(std::move(x));
        labels.push_back(row.label == Condition::Nlos ? 1.0 : 0.0);
    }
}

std::vector<WindowSample> imu_windows(const std::vector<imusim::ImuDatasetRow>& rows,
                                      int stride) {
    if (stride < 1) throw std::invalid_argument("imu_windows: stride must be >= 1");
    std::vector<WindowSample> out;
    size_t block_start = 0;
    while (block_start < rows.size()) {
        size_t block_end = block_start + 1;
        while (block_end < rows.size() && rows[block_end].pose == rows[block_start].pose &&
               rows[block_end].sample.t_ms > rows[block_end - 1].sample.t_ms)
            ++block_end;
        const Pose pose = rows[block_start].pose;
        imusim::ImuWindow window;
        int since_emit = stride;  // emit the first full window immediately
        for (size_t i = block_start; i < block_end; ++i) {
            window = imusim::push_window(window, rows[i].sample);
            if (window.ready() && ++since_emit >= stride) {
                out.push_back({window, pose});
                since_emit = 0;
            }
        }
        block_start = block_end;
    }
    return out;
}

void pose_training_set(const std::vector<WindowSample>& windows, Condition branch,
                       models::FeatureStats& stats_out, std::vector<neural::Tensor>& inputs,
                       std::vector<double>& labels) {
    const Pose hand = branch == Condition::Los ? Pose::LosHand : Pose::NlosHand;
    const Pose pocket = branch == Condition::Los ? Pose::Front : Pose::Back;

    // Standardization stats over this branch's training windows.
    std::array<double, 6> sum{}, sum2{};
    long count = 0;
    for (const auto& w : windows) {
        if (w.pose != hand && w.pose != pocket) continue;
        const neural::Tensor t = imusim::window_tensor(w.window);
        for (int i = 0; i < imusim::kWindowSteps; ++i)
            for (int f = 0; f < 6; ++f) {
                sum[f] += t.at(i, f);
                sum2[f] += t.at(i, f) * t.at(i, f);
            }
        ++count;
    }
    if (count == 0) throw std::invalid_argument("pose_training_set: no windows for branch");
    for (int f = 0; f < 6; ++f) {
        const double n = static_cast<double>(count) * imusim::kWindowSteps;
        stats_out.mean[f] = sum[f] / n;
        const double var = std::max(1e-12, sum2[f] / n - stats_out.mean[f] * stats_out.mean[f]);
        stats_out.stddev[f] = std::sqrt(var);
    }

    inputs.clear();
    labels.clear();
    for (const auto& w : windows) {
        if (w.pose != hand && w.pose != pocket) continue;
        inputs.push_back(models::pose_input(w.window, stats_out));
        labels.push_back(w.pose == pocket ? 1.0 : 0.0);
    }
}

std::vector<channel::CirDatasetRow> load_cir_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return channel::read_cir_csv(in);
}

std::vector<imusim::ImuDatasetRow> load_imu_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return imusim::read_imu_csv(in);
}

}  // namespace gatepose::harness
