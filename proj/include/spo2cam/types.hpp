/**
 * @file types.hpp
 * @brief Shared domain types: color triples, chromophores, time series, ROI boxes.
 */

#ifndef SPO2CAM_TYPES_HPP
#define SPO2CAM_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spo2cam/errors.hpp"

namespace spo2cam {

/// Camera color values, nominally in [0, 255] per channel.
struct RgbTriple {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

/// CIE 1931 tristimulus values.
struct XyzTriple {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Melanin / oxy-Hb / deoxy-Hb concentrations (arbitrary units, >= 0).
/// Regression output may be negative; from_raw clamps and records the fact.
struct Chromophores {
    double c_m = 0.0;
    double c_hbo = 0.0;
    double c_hbr = 0.0;
    bool clamped = false;

    static Chromophores from_raw(double m, double hbo, double hbr) {
        Chromophores c;
        c.clamped = (m < 0.0) || (hbo < 0.0) || (hbr < 0.0);
        c.c_m = m < 0.0 ? 0.0 : m;
        c.c_hbo = hbo < 0.0 ? 0.0 : hbo;
        c.c_hbr = hbr < 0.0 ? 0.0 : hbr;
        return c;
    }
};

/// Uniform container for sampled signals. Timestamps in seconds, monotone.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    /// Linear interpolation at time `ti`; clamps outside the support.
    double interp(double ti) const {
        if (v.empty()) throw LengthMismatch("interp on empty series");
        if (v.size() == 1 || ti <= t.front()) return v.front();
        if (ti >= t.back()) return v.back();
        // Find first timestamp > ti.
        std::size_t hi = 1;
        while (hi < t.size() && t[hi] <= ti) ++hi;
        if (hi >= t.size()) return v.back();
        const std::size_t lo = hi - 1;
        const double span = t[hi] - t[lo];
        if (span <= 0.0) return v[lo];
        const double w = (ti - t[lo]) / span;
        return v[lo] * (1.0 - w) + v[hi] * w;
    }

    /// Mean sample rate in Hz, derived from the timestamp span.
    double rate_hz() const {
        if (t.size() < 2) return 0.0;
        const double span = t.back() - t.front();
        return span > 0.0 ? static_cast<double>(t.size() - 1) / span : 0.0;
    }
};

/// Tracked rectangular region of interest. Center-based; width/height constant
/// over a tracked sequence.
struct RoiBox {
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    int frame_index = 0;

    /// Shift the box so it lies fully inside a frame of the given size.
    RoiBox clamped(int frame_w, int frame_h) const {
        RoiBox b = *this;
        const double hw = width * 0.5;
        const double hh = height * 0.5;
        if (b.cx - hw < 0.0) b.cx = hw;
        if (b.cy - hh < 0.0) b.cy = hh;
        if (b.cx + hw > frame_w) b.cx = frame_w - hw;
        if (b.cy + hh > frame_h) b.cy = frame_h - hh;
        return b;
    }

    int left() const { return static_cast<int>(std::lround(cx - width * 0.5)); }
    int top() const { return static_cast<int>(std::lround(cy - height * 0.5)); }
};

/// Per-subject attributes used for subgroup reporting.
struct SubjectMetadata {
    std::string subject_id;
    int skin_tone = 0; // Fitzpatrick 1-6
    int age = 0;
    std::string gender;
    bool covid_history = false;
};

inline double clamp_spo2(double x) {
    if (x < 80.0) return 80.0;
    if (x > 100.0) return 100.0;
    return x;
}

} // namespace spo2cam

#endif // SPO2CAM_TYPES_HPP
