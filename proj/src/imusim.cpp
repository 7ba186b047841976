#include "gatepose/imusim.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gatepose/errors.hpp"

namespace gatepose::imusim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalize(const Vec3& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

double ImuWindow::newest_t_ms() const {
    return samples_.empty() ? -1.0 : samples_.back().t_ms;
}

ImuWindow push_window(ImuWindow window, const ImuSample& sample) {
    if (!window.samples_.empty() && sample.t_ms <= window.samples_.back().t_ms)
        throw std::invalid_argument("push_window: out-of-order timestamp");
    window.samples_.push_back(sample);
    if (window.samples_.size() > kWindowSteps)
        window.samples_.erase(window.samples_.begin());
    return window;
}

neural::Tensor window_tensor(const ImuWindow& window) {
    if (!window.ready())
        throw WindowNotReadyError("window_tensor: only " + std::to_string(window.count()) +
                                  " of " + std::to_string(kWindowSteps) + " samples");
    neural::Tensor t({kWindowSteps, 6});
    for (int i = 0; i < kWindowSteps; ++i) {
        const ImuSample& s = window.at(i);
        for (int k = 0; k < 3; ++k) {
            t.at(i, k) = s.accel[k];
            t.at(i, 3 + k) = s.gravity[k];
        }
    }
    return t;
}

void GaitParams::validate() const {
    if (!(step_rate_hz > 0.0)) throw std::invalid_argument("GaitParams: step rate must be > 0");
    if (!(pocket_amp > hand_amp))
        throw std::invalid_argument("GaitParams: pocket_amp must exceed hand_amp");
    if (hand_amp < 0.0 || noise_sigma < 0.0 || gravity_noise_sigma < 0.0)
        throw std::invalid_argument("GaitParams: negative amplitude or noise");
}

ImuSample imu_sample_at(Pose pose, double t_ms, const GaitParams& params, Rng& rng) {
    const double t_s = t_ms / 1000.0;
    const double omega = kTwoPi * params.step_rate_hz * t_s;
    const double amp = is_hand(pose) ? params.hand_amp : params.pocket_amp;

    const Vec3 down = normalize(params.gravity_dir[static_cast<int>(pose)]);
    const Vec3 ref = std::abs(down[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    const Vec3 sway = normalize(cross(down, ref));

    ImuSample s;
    s.t_ms = t_ms;
    const double bounce = std::sin(omega);
    const double lurch = 0.5 * std::sin(2.0 * omega + kTwoPi / 8.0);
    for (int k = 0; k < 3; ++k)
        s.accel[k] = amp * (bounce * down[k] + lurch * sway[k]) +
                     rng.gaussian(0.0, params.noise_sigma);

    // Wobble tilts the gravity direction about the sway axis; rotation keeps
    // the norm at 9.81 before the small additive sensor noise.
    const double theta = params.wobble_deg * (kTwoPi / 360.0) * std::sin(omega + kTwoPi / 6.0);
    const Vec3 axis_cross = cross(sway, down);
    const double c = std::cos(theta), sn = std::sin(theta);
    for (int k = 0; k < 3; ++k)
        s.gravity[k] = kGravity * (down[k] * c + axis_cross[k] * sn) +
                       rng.gaussian(0.0, params.gravity_noise_sigma);
    return s;
}

std::vector<ImuSample> generate_imu_trace(Pose pose, double duration_ms,
                                          const GaitParams& params, Rng& rng) {
    params.validate();
    if (duration_ms < kImuIntervalMs * kWindowSteps)
        throw std::invalid_argument("generate_imu_trace: duration shorter than one window");
    std::vector<ImuSample> trace;
    for (double t = 0.0; t < duration_ms; t += kImuIntervalMs)
        trace.push_back(imu_sample_at(pose, t, params, rng));
    return trace;
}

void write_imu_csv_header(std::ostream& out) {
    out << "t_ms,ax,ay,az,gx,gy,gz,pose_label\n";
}

void write_imu_csv_row(std::ostream& out, const ImuDatasetRow& row) {
    std::string line;
    append_double(line, row.sample.t_ms);
    for (double v : row.sample.accel) {
        line += ',';
        append_double(line, v);
    }
    for (double v : row.sample.gravity) {
        line += ',';
        append_double(line, v);
    }
    line += ',';
    line += std::to_string(static_cast<int>(row.pose));
    line += '\n';
    out << line;
}

std::vector<ImuDatasetRow> read_imu_csv(std::istream& in) {
    std::vector<ImuDatasetRow> rows;
    std::string line;
    if (!std::getline(in, line)) throw IoError("imu csv: empty file");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ImuDatasetRow row;
        double fields[8];
        size_t start = 0;
        for (int f = 0; f < 8; ++f) {
            size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            double v = 0.0;
            auto res = std::from_chars(line.data() + start, line.data() + end, v);
            if (res.ec != std::errc{}) throw IoError("imu csv: bad numeric field");
            fields[f] = v;
            start = end + 1;
        }
        row.sample.t_ms = fields[0];
        for (int k = 0; k < 3; ++k) {
            row.sample.accel[k] = fields[1 + k];
            row.sample.gravity[k] = fields[4 + k];
        }
        row.pose = static_cast<Pose>(static_cast<int>(fields[7]));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace gatepose::imusim
