#include "spo2cam/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "spo2cam/errors.hpp"

namespace spo2cam {

Biquad butter2_lowpass(double cutoff_hz, double rate_hz) {
    if (!(rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0))
        throw ConfigError("butter2_lowpass: need 0 < cutoff_hz < rate_hz/2, got cutoff_hz=" +
                          std::to_string(cutoff_hz) + " rate_hz=" + std::to_string(rate_hz));
    // Analog prototype 1/(s^2 + sqrt(2) s + 1), prewarped, bilinear-transformed.
    const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
    Biquad f;
    f.b0 = k * k * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;
    return f;
}

std::vector<double> lfilter(const Biquad& f, const std::vector<double>& x,
                            std::array<double, 2> zi) {
    std::vector<double> y(x.size());
    double z0 = zi[0], z1 = zi[1];
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yi = f.b0 * x[i] + z0;
        z0 = f.b1 * x[i] + z1 - f.a1 * yi;
        z1 = f.b2 * x[i] - f.a2 * yi;
        y[i] = yi;
    }
    return y;
}

std::array<double, 2> lfilter_zi(const Biquad& f) {
    // Solve (I - A^T) zi = B for the direct-form II transposed state that is
    // stationary under constant unit input:
    //   [1+a1  -1 ] [zi0]   [b1 - a1*b0]
    //   [ a2    1 ] [zi1] = [b2 - a2*b0]
    const double r0 = f.b1 - f.a1 * f.b0;
    const double r1 = f.b2 - f.a2 * f.b0;
    const double det = 1.0 + f.a1 + f.a2;
    return {(r0 + r1) / det, ((1.0 + f.a1) * r1 - f.a2 * r0) / det};
}

std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x) {
    constexpr std::size_t kPad = 9;  // three filter lengths of edge padding
    const std::size_t n = x.size();
    if (n <= kPad)
        throw LengthMismatch("filtfilt: input length " + std::to_string(n) +
                             " must exceed the 9-sample edge pad");

    std::vector<double> ext;
    ext.reserve(n + 2 * kPad);
    for (std::size_t i = kPad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 2; i <= kPad + 1; ++i) ext.push_back(2.0 * x[n - 1] - x[n - i]);

    const auto zi = lfilter_zi(f);
    auto y = lfilter(f, ext, {zi[0] * ext.front(), zi[1] * ext.front()});
    std::reverse(y.begin(), y.end());
    y = lfilter(f, y, {zi[0] * y.front(), zi[1] * y.front()});
    std::reverse(y.begin(), y.end());
    return std::vector<double>(y.begin() + kPad, y.begin() + kPad + n);
}

double filter_gain(const Biquad& f, double freq_hz, double rate_hz) {
    const auto z = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_hz);
    return std::abs((f.b0 + z * (f.b1 + z * f.b2)) / (1.0 + z * (f.a1 + z * f.a2)));
}

}  // namespace spo2cam
