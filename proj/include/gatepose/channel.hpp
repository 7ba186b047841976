#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gatepose/pose.hpp"
#include "gatepose/rng.hpp"

namespace gatepose::channel {

inline constexpr int kCirLength = 1016;

/// One accumulator tap: 16-bit real and 16-bit imaginary integer.
struct ComplexSample {
    int16_t re = 0;
    int16_t im = 0;
};

/// sqrt(re^2 + im^2)
double magnitude(ComplexSample s);

/**
 * Received-signal-quality fields computed from a CIR. The radio reports
 * eight quality values; the three that matter for classification are
 * modeled and the rest stay reserved.
 */
struct Diagnostics {
    int fp_index = 0;                       // first index of real signal
    std::array<double, 3> fp_ampl{};        // magnitudes at fp_index+1..+3
    double max_noise = 0.0;                 // noise-floor ceiling
    double std_noise = 0.0;                 // noise-floor spread
};

/// One reception's worth of accumulator data plus its quality fields.
struct CirRecord {
    std::array<ComplexSample, kCirLength> samples{};
    Diagnostics diagnostics;
    std::optional<Condition> label;
    std::optional<Pose> pose_label;
    bool saturated = false;  // a generated tap overflowed the 16-bit range

    double magnitude_at(int index) const { return magnitude(samples[index]); }
};

/**
 * Knobs of the generative CIR model. Peak SNR intervals are first-peak
 * magnitude over max_noise; the LOS lower bound must stay above the NLOS
 * upper bound so the two classes remain separable.
 */
struct ChannelParams {
    int fp_index_min = 700;
    int fp_index_max = 780;
    double noise_scale = 370.0;             // per-component Gaussian sigma, accumulator units
    std::pair<double, double> los_peak_snr{5.0, 10.0};
    std::pair<double, double> nlos_peak_snr{1.5, 3.0};
    double los_decay_ns = 30.0;             // exponential decay constant of the LOS tail
    double nlos_cluster_rate = 36.0;        // Poisson cluster arrivals per 100 ns
    double nlos_cluster_decay_ns = 11.0;    // per-cluster exponential decay
    double nlos_excess_ns = 130.0;          // multipath truncated this far after fp_index
    uint64_t rng_seed = 1;

    void validate() const;  // throws std::invalid_argument
};

/**
 * Draw one CIR with the requested propagation signature.
 *
 * LOS: a single dominant first peak decaying exponentially, tuned so the
 * expected number of above-noise samples after fp_index is ~61.
 * NLOS: an attenuated first peak plus dense Poisson cluster arrivals, tuned
 * so the expected above-noise count after fp_index is ~130.
 *
 * Samples before fp_index are pure noise, and max_noise is the largest
 * noise-only magnitude in the record, so every above-noise sample lies in
 * [fp_index, fp_index + nlos_excess). Deterministic given the rng state.
 */
CirRecord generate_cir(Condition condition, const ChannelParams& params, Rng& rng);

/**
 * Recover diagnostics from raw samples. max_noise / std_noise come from the
 * noise window; fp_index is the first index whose magnitude exceeds
 * 1.0 * max_noise for two consecutive samples. Throws NoFirstPathError when
 * nothing crosses.
 */
Diagnostics compute_diagnostics(std::span<const ComplexSample> samples,
                                std::pair<int, int> noise_window = {0, 695});

/// Same recovery on magnitudes only (imported datasets store magnitudes).
Diagnostics compute_diagnostics_from_magnitudes(std::span<const double> magnitudes,
                                                std::pair<int, int> noise_window = {0, 695});

// --- CIR dataset file format (CSV) ------------------------------------------
//
// Header then one row per record:
//   label (0=LOS, 1=NLOS), pose (0-3 or empty), fp_index, fp_ampl1..3,
//   max_noise, std_noise, cir0..cir1015 (magnitudes)
// The same schema serves the public-corpus importer.

struct CirDatasetRow {
    Condition label = Condition::Los;
    std::optional<Pose> pose;
    Diagnostics diagnostics;
    std::vector<double> magnitudes;  // kCirLength values
};

CirDatasetRow to_dataset_row(const CirRecord& record);

void write_cir_csv_header(std::ostream& out);
void write_cir_csv_row(std::ostream& out, const CirDatasetRow& row);
std::vector<CirDatasetRow> read_cir_csv(std::istream& in);

}  // namespace gatepose::channel
