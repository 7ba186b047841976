#include "gatepose/channel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gatepose/errors.hpp"

namespace gatepose::channel {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int16_t quantize_component(double v, bool& saturated) {
    const double r = std::round(v);
    if (r > 32767.0) { saturated = true; return 32767; }
    if (r < -32768.0) { saturated = true; return -32768; }
    return static_cast<int16_t>(r);
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

double parse_double(std::string_view field, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{})
        throw IoError(std::string("bad numeric field in ") + what);
    return v;
}

}  // namespace

double magnitude(ComplexSample s) {
    const double re = s.re;
    const double im = s.im;
    return std::sqrt(re * re + im * im);
}

void ChannelParams::validate() const {
    if (fp_index_min < 5 || fp_index_max < fp_index_min)
        throw std::invalid_argument("ChannelParams: bad fp_index range");
    if (fp_index_max + nlos_excess_ns > kCirLength)
        throw std::invalid_argument("ChannelParams: signal region exceeds record");
    if (!(noise_scale > 0.0) || !(los_decay_ns > 0.0) || !(nlos_cluster_rate > 0.0) ||
        !(nlos_cluster_decay_ns > 0.0) || !(nlos_excess_ns > 0.0))
        throw std::invalid_argument("ChannelParams: rates and scales must be positive");
    if (!(los_peak_snr.first > nlos_peak_snr.second))
        throw std::invalid_argument(
            "ChannelParams: los_peak_snr lower bound must exceed nlos_peak_snr upper bound");
    if (!(los_peak_snr.second >= los_peak_snr.first) ||
        !(nlos_peak_snr.second >= nlos_peak_snr.first))
        throw std::invalid_argument("ChannelParams: malformed snr interval");
}

CirRecord generate_cir(Condition condition, const ChannelParams& params, Rng& rng) {
    params.validate();
    const int fp = rng.uniform_int(params.fp_index_min, params.fp_index_max);
    const int excess = static_cast<int>(params.nlos_excess_ns);
    const int signal_end = fp + excess;  // validated to fit in the record

    // Noise floor everywhere; the envelope is added on [fp, signal_end).
    std::array<double, kCirLength> re{}, im{};
    for (int i = 0; i < kCirLength; ++i) {
        re[i] = rng.gaussian(0.0, params.noise_scale);
        im[i] = rng.gaussian(0.0, params.noise_scale);
    }

    // Provisional noise ceiling over the noise-only taps, used to scale the
    // signal; the recorded diagnostics are recomputed after quantization.
    double noise_max = 0.0;
    for (int i = 0; i < kCirLength; ++i) {
        if (i >= fp && i < signal_end) continue;
        noise_max = std::max(noise_max, std::hypot(re[i], im[i]));
    }

    // Per-tap envelope. Taps carry independent phases; overlapping cluster
    // power adds in quadrature so trailing peaks never cancel below the
    // calibrated profile.
    std::array<double, kCirLength> env{};
    if (condition == Condition::Los) {
        const double peak = rng.uniform(params.los_peak_snr.first, params.los_peak_snr.second) *
                            noise_max;
        for (int i = fp; i < signal_end; ++i)
            env[i] = peak * std::exp(-(i - fp) / params.los_decay_ns);
    } else {
        const double first = rng.uniform(params.nlos_peak_snr.first, params.nlos_peak_snr.second) *
                             noise_max;
        std::array<double, kCirLength> power{};
        for (int i = fp; i < signal_end; ++i) {
            const double e = first * std::exp(-(i - fp) / params.nlos_cluster_decay_ns);
            power[i] += e * e;
        }
        // Poisson cluster arrivals after the first path.
        const double rate_per_ns = params.nlos_cluster_rate / 100.0;
        double t = fp + 1.0;
        while (true) {
            double u = rng.uniform01();
            if (u < 1e-300) u = 1e-300;
            t += -std::log(u) / rate_per_ns;
            const int arrival = static_cast<int>(std::ceil(t));
            if (arrival >= signal_end) break;
            const double amp = rng.uniform(params.nlos_peak_snr.first,
                                           params.nlos_peak_snr.second) *
                               noise_max;
            for (int i = arrival; i < signal_end; ++i) {
                const double e = amp * std::exp(-(i - arrival) / params.nlos_cluster_decay_ns);
                power[i] += e * e;
            }
        }
        for (int i = fp; i < signal_end; ++i) env[i] = std::sqrt(power[i]);
    }

    CirRecord record;
    for (int i = fp; i < signal_end; ++i) {
        const double phase = rng.uniform(0.0, kTwoPi);
        re[i] += env[i] * std::cos(phase);
        im[i] += env[i] * std::sin(phase);
    }
    for (int i = 0; i < kCirLength; ++i) {
        record.samples[i].re = quantize_component(re[i], record.saturated);
        record.samples[i].im = quantize_component(im[i], record.saturated);
    }

    // Diagnostics from the quantized taps. max_noise covers every noise-only
    // tap, so the noise never pokes above it anywhere in the record.
    Diagnostics d;
    d.fp_index = fp;
    double mx = 0.0, sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (int i = 0; i < kCirLength; ++i) {
        if (i >= fp && i < signal_end) continue;
        const double m = record.magnitude_at(i);
        mx = std::max(mx, m);
        sum += m;
        sum2 += m * m;
        ++n;
    }
    d.max_noise = mx;
    const double mean = sum / n;
    d.std_noise = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
    for (int k = 0; k < 3; ++k) d.fp_ampl[k] = record.magnitude_at(fp + 1 + k);
    record.diagnostics = d;
    record.label = condition;
    return record;
}

namespace {

Diagnostics diagnostics_impl(std::span<const double> mags, std::pair<int, int> noise_window) {
    const int n = static_cast<int>(mags.size());
    const int a = noise_window.first;
    const int b = noise_window.second;
    if (a < 0 || b <= a || b > n)
        throw std::invalid_argument("compute_diagnostics: bad noise window");

    Diagnostics d;
    double sum = 0.0, sum2 = 0.0;
    for (int i = a; i < b; ++i) {
        d.max_noise = std::max(d.max_noise, mags[i]);
        sum += mags[i];
        sum2 += mags[i] * mags[i];
    }
    const double mean = sum / (b - a);
    d.std_noise = std::sqrt(std::max(0.0, sum2 / (b - a) - mean * mean));

    // First path: magnitude above max_noise sustained for two consecutive
    // samples; needs three following taps for fp_ampl.
    int fp = -1;
    for (int i = 0; i + 1 < n; ++i) {
        if (mags[i] > d.max_noise && mags[i + 1] > d.max_noise) {
            fp = i;
            break;
        }
    }
    if (fp < 0) throw NoFirstPathError("compute_diagnostics: no sample crosses the noise ceiling");
    if (fp + 3 >= n)
        throw NoFirstPathError("compute_diagnostics: first path too close to record end");
    d.fp_index = fp;
    for (int k = 0; k < 3; ++k) d.fp_ampl[k] = mags[fp + 1 + k];
    return d;
}

}  // namespace

Diagnostics compute_diagnostics(std::span<const ComplexSample> samples,
                                std::pair<int, int> noise_window) {
    std::vector<double> mags(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) mags[i] = magnitude(samples[i]);
    return diagnostics_impl(mags, noise_window);
}

Diagnostics compute_diagnostics_from_magnitudes(std::span<const double> magnitudes,
                                                std::pair<int, int> noise_window) {
    return diagnostics_impl(magnitudes, noise_window);
}

CirDatasetRow to_dataset_row(const CirRecord& record) {
    CirDatasetRow row;
    row.label = record.label.value_or(Condition::Los);
    row.pose = record.pose_label;
    row.diagnostics = record.diagnostics;
    row.magnitudes.resize(kCirLength);
    for (int i = 0; i < kCirLength; ++i) row.magnitudes[i] = record.magnitude_at(i);
    return row;
}

void write_cir_csv_header(std::ostream& out) {
    out << "label,pose,fp_index,fp_ampl1,fp_ampl2,fp_ampl3,max_noise,std_noise";
    for (int i = 0; i < kCirLength; ++i) out << ",cir" << i;
    out << '\n';
}

void write_cir_csv_row(std::ostream& out, const CirDatasetRow& row) {
    std::string line;
    line.reserve(12 * kCirLength);
    line += (row.label == Condition::Los) ? '0' : '1';
    line += ',';
    if (row.pose) line += std::to_string(static_cast<int>(*row.pose));
    line += ',';
    line += std::to_string(row.diagnostics.fp_index);
    for (double a : row.diagnostics.fp_ampl) {
        line += ',';
        append_double(line, a);
    }
    line += ',';
    append_double(line, row.diagnostics.max_noise);
    line += ',';
    append_double(line, row.diagnostics.std_noise);
    for (double m : row.magnitudes) {
        line += ',';
        append_double(line, m);
    }
    line += '\n';
    out << line;
}

std::vector<CirDatasetRow> read_cir_csv(std::istream& in) {
    std::vector<CirDatasetRow> rows;
    std::string line;
    if (!std::getline(in, line)) throw IoError("cir csv: empty file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CirDatasetRow row;
        row.magnitudes.reserve(kCirLength);
        size_t start = 0;
        int field = 0;
        const size_t len = line.size();
        while (start <= len) {
            size_t end = line.find(',', start);
            if (end == std::string::npos) end = len;
            std::string_view f(line.data() + start, end - start);
            switch (field) {
                case 0: row.label = (f == "1") ? Condition::Nlos : Condition::Los; break;
                case 1:
                    if (!f.empty())
                        row.pose = static_cast<Pose>(parse_double(f, "pose"));
                    break;
                case 2: row.diagnostics.fp_index = static_cast<int>(parse_double(f, "fp_index")); break;
                case 3: case 4: case 5:
                    row.diagnostics.fp_ampl[field - 3] = parse_double(f, "fp_ampl");
                    break;
                case 6: row.diagnostics.max_noise = parse_double(f, "max_noise"); break;
                case 7: row.diagnostics.std_noise = parse_double(f, "std_noise"); break;
                default: row.magnitudes.push_back(parse_double(f, "cir magnitude"));
            }
            ++field;
            start = end + 1;
            if (end == len) break;
        }
        if (row.magnitudes.size() != kCirLength)
            throw IoError("cir csv: row does not carry " + std::to_string(kCirLength) +
                          " magnitudes");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace gatepose::channel
