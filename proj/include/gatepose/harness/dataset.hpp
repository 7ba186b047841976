#pragma once

#include <array>
#include <filesystem>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gatepose/channel.hpp"
#include "gatepose/harness/config.hpp"
#include "gatepose/imusim.hpp"
#include "gatepose/models.hpp"
#include "gatepose/neural/tensor.hpp"
#include "gatepose/neural/train.hpp"

namespace gatepose::harness {

struct DatasetCounts {
    int cir_per_pose = 2000;   // DS-TWR receptions per pose
    int imu_per_pose = 6600;   // IMU samples per pose
};

// Config sections mirror the *Params types: [channel], [gait], [counts].
channel::ChannelParams channel_params_from_config(const Config& cfg);
imusim::GaitParams gait_params_from_config(const Config& cfg);
DatasetCounts counts_from_config(const Config& cfg);
neural::TrainConfig train_config_from_config(const Config& cfg, const std::string& section,
                                             neural::TrainConfig defaults);

struct DatasetManifest {
    int n_los = 0;
    int n_nlos = 0;
    std::array<int, 4> n_per_pose{};
    int imu_samples_per_pose = 0;
    double train_fraction = 0.8;
    std::string source = "synthetic";
    uint64_t seed = 0;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

struct DatasetPaths {
    std::filesystem::path cir_train, cir_test, imu_train, imu_test, manifest;
    static DatasetPaths in_dir(const std::filesystem::path& dir);
};

/**
 * Pose-balanced labeled CIR and IMU datasets in the module CSV formats,
 * already split 80/20. CIR rows are shuffled before the split; IMU traces
 * are split at the 80% time mark so overlapping windows never straddle the
 * boundary. Byte-identical for a given seed.
 */
DatasetPaths generate_datasets(const std::filesystem::path& out_dir, DatasetCounts counts,
                               const channel::ChannelParams& channel_params,
                               const imusim::GaitParams& gait_params, uint64_t seed);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

// --- public-corpus import ---------------------------------------------------

/// Column mapping for a foreign CSV carrying label + 1016 CIR magnitudes.
/// Diagnostics columns are optional; absent ones are recomputed.
struct ImportSchema {
    std::string label_column = "label";
    std::string cir_prefix = "cir";
    std::string pose_column;  // empty: corpus rows carry no pose
    std::string fp_index_column = "fp_index";
    std::string max_noise_column = "max_noise";
    std::string std_noise_column = "std_noise";
    std::string fp_ampl_prefix = "fp_ampl";
    std::pair<int, int> noise_window{0, 695};

    static ImportSchema from_config(const Config& cfg);
};

struct ImportReport {
    int imported = 0;
    int skipped = 0;  // rows failing validation
    int healed = 0;   // rows whose diagnostics were recomputed

    nlohmann::json to_json() const;
};

/// Normalizes a foreign corpus into the native CIR CSV schema.
ImportReport import_cir_corpus(const std::filesystem::path& in_csv, const ImportSchema& schema,
                               const std::filesystem::path& out_csv);

// --- training-set assembly ----------------------------------------------------

/// eCIR rows as network inputs (magnitudes / max_noise), label 1 = NLOS.
/// `input_len` 135 extracts the eCIR window; 1016 feeds the whole record.
void cir_training_set(const std::vector<channel::CirDatasetRow>& rows, int input_len,
                      std::vector<neural::Tensor>& inputs, std::vector<double>& labels);

/// Sliding windows grouped per pose from a dataset split; windows never span
/// a pose-block boundary.
struct WindowSample {
    imusim::ImuWindow window;
    Pose pose;
};
std::vector<WindowSample> imu_windows(const std::vector<imusim::ImuDatasetRow>& rows,
                                      int stride = 1);

/// Training tensors for one pose branch: label 1 = pocket pose of the
/// branch. Standardization stats are computed here, from these windows.
void pose_training_set(const std::vector<WindowSample>& windows, Condition branch,
                       models::FeatureStats& stats_out, std::vector<neural::Tensor>& inputs,
                       std::vector<double>& labels);

std::vector<channel::CirDatasetRow> load_cir_csv(const std::filesystem::path& path);
std::vector<imusim::ImuDatasetRow> load_imu_csv(const std::filesystem::path& path);

}  // namespace gatepose::harness
