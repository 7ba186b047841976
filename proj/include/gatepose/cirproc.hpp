#pragma once

#include <array>
#include <iosfwd>

#include "gatepose/channel.hpp"

namespace gatepose::cirproc {

inline constexpr int kEcirLength = 135;
inline constexpr int kEcirMargin = 5;  // taps kept before fp_index

/// The 135-sample magnitude window that carries all signal signatures:
/// values[5] corresponds to the tap at fp_index.
struct Ecir {
    std::array<double, kEcirLength> values{};
    int origin_index = 0;  // fp_index - 5
};

/**
 * Magnitudes of the 135 consecutive taps starting at fp_index - 5.
 * Throws TruncatedWindowError when the window would leave the record;
 * padding would fabricate classifier input.
 */
Ecir extract_ecir(const channel::CirRecord& record);

/// Same extraction from a magnitude row (dataset path).
Ecir extract_ecir(const channel::CirDatasetRow& row);

/**
 * Board-to-host transfer budget, anchored on two measured points:
 * 135 units in 17.8 ms and 1016 CIRs + 8 diagnostics = 1024 units in
 * 223.4 ms. The affine fit has a negative intercept, so the model's domain
 * starts at the 135-unit point.
 */
struct LatencyModel {
    double full_ms = 223.4;
    double ecir_ms = 17.8;
    int full_units = channel::kCirLength + 8;
    int ecir_units = kEcirLength;
};

/// Affine interpolation through the two calibration points; exact at both.
/// Throws OutOfDomainError for n_units below the eCIR point.
double transfer_latency(double n_units, const LatencyModel& model = {});

/// True iff the transfer fits strictly inside the ranging interval.
bool meets_realtime(double latency_ms, double ranging_interval_ms);

/// CSV row: origin_index followed by the 135 magnitudes.
void write_ecir_csv_row(std::ostream& out, const Ecir& ecir);

}  // namespace gatepose::cirproc
