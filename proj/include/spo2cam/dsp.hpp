#pragma once

#include <array>
#include <vector>

namespace spo2cam {

// One second-order IIR section, normalized so a0 == 1.
struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

// Second-order Butterworth low-pass designed by bilinear transform with
// frequency prewarping. Throws ConfigError unless 0 < cutoff < rate/2.
Biquad butter2_lowpass(double cutoff_hz, double rate_hz);

// Direct-form II transposed single pass with explicit initial state.
std::vector<double> lfilter(const Biquad& f, const std::vector<double>& x,
                            std::array<double, 2> zi = {0.0, 0.0});

// Steady-state filter state for a unit-step input; scale by the first
// sample before filtering to suppress the startup transient.
std::array<double, 2> lfilter_zi(const Biquad& f);

// Zero-phase forward-backward filtering. The input is padded on both ends
// with a 9-sample odd reflection and each pass starts from the scaled
// steady state, so edges see no step transient. Throws LengthMismatch when
// the input is not longer than the pad.
std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x);

// Single-pass magnitude response at freq_hz for a filter running at rate_hz.
// filtfilt applies the filter twice, so its gain is the square of this.
double filter_gain(const Biquad& f, double freq_hz, double rate_hz);

}  // namespace spo2cam
