#include "gatepose/cirproc.hpp"

#include <charconv>
#include <ostream>
#include <string>

#include "gatepose/errors.hpp"

namespace gatepose::cirproc {

namespace {

Ecir extract_window(const double* mags, int total, int fp_index) {
    const int origin = fp_index - kEcirMargin;
    if (origin < 0 || origin + kEcirLength > total)
        throw TruncatedWindowError("extract_ecir: window [" + std::to_string(origin) + ", " +
                                   std::to_string(origin + kEcirLength) +
                                   ") leaves the record");
    Ecir e;
    e.origin_index = origin;
    for (int i = 0; i < kEcirLength; ++i) e.values[i] = mags[origin + i];
    return e;
}

}  // namespace

Ecir extract_ecir(const channel::CirRecord& record) {
    std::array<double, channel::kCirLength> mags;
    for (int i = 0; i < channel::kCirLength; ++i) mags[i] = record.magnitude_at(i);
    return extract_window(mags.data(), channel::kCirLength, record.diagnostics.fp_index);
}

Ecir extract_ecir(const channel::CirDatasetRow& row) {
    return extract_window(row.magnitudes.data(), static_cast<int>(row.magnitudes.size()),
                          row.diagnostics.fp_index);
}

double transfer_latency(double n_units, const LatencyModel& model) {
    if (n_units < model.ecir_units)
        throw OutOfDomainError("transfer_latency: model domain starts at " +
                               std::to_string(model.ecir_units) + " units");
    // Barycentric form: exact at both calibration points.
    const double t = (n_units - model.ecir_units) /
                     static_cast<double>(model.full_units - model.ecir_units);
    return (1.0 - t) * model.ecir_ms + t * model.full_ms;
}

bool meets_realtime(double latency_ms, double ranging_interval_ms) {
    if (!(latency_ms > 0.0) || !(ranging_interval_ms > 0.0))
        throw std::invalid_argument("meets_realtime: arguments must be positive");
    return latency_ms < ranging_interval_ms;
}

void write_ecir_csv_row(std::ostream& out, const Ecir& ecir) {
    std::string line = std::to_string(ecir.origin_index);
    char buf[32];
    for (double v : ecir.values) {
        line += ',';
        auto res = std::to_chars(buf, buf + sizeof buf, v);
        line.append(buf, res.ptr);
    }
    line += '\n';
    out << line;
}

}  // namespace gatepose::cirproc
