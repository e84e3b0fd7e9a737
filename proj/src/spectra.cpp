/**
 * @file spectra.cpp
 * @brief Tabulated spectral data and tristimulus / camera integration.
 */

#include "spo2cam/spectra.hpp"

#include <cmath>

#include "spo2cam/csv.hpp"
#include "spo2cam/errors.hpp"

namespace spo2cam {

// CIE 1931 2-degree observer, 400-700 nm, 10 nm steps.
const std::array<double, kBands> kCieX = {
    0.0143, 0.0435, 0.1344, 0.2839, 0.3483, 0.3362, 0.2908, 0.1954,
    0.0956, 0.0320, 0.0049, 0.0093, 0.0633, 0.1655, 0.2904, 0.4334,
    0.5945, 0.7621, 0.9163, 1.0263, 1.0622, 1.0026, 0.8544, 0.6424,
    0.4479, 0.2835, 0.1649, 0.0874, 0.0468, 0.0227, 0.0114};
const std::array<double, kBands> kCieY = {
    0.0004, 0.0012, 0.0040, 0.0116, 0.0230, 0.0380, 0.0600, 0.0910,
    0.1390, 0.2080, 0.3230, 0.5030, 0.7100, 0.8620, 0.9540, 0.9950,
    0.9950, 0.9520, 0.8700, 0.7570, 0.6310, 0.5030, 0.3810, 0.2650,
    0.1750, 0.1070, 0.0610, 0.0320, 0.0170, 0.0082, 0.0041};
const std::array<double, kBands> kCieZ = {
    0.0679, 0.2074, 0.6456, 1.3856, 1.7471, 1.7721, 1.6692, 1.2876,
    0.8130, 0.4652, 0.2720, 0.1582, 0.0782, 0.0422, 0.0203, 0.0087,
    0.0039, 0.0021, 0.0017, 0.0011, 0.0008, 0.0003, 0.0002, 0.0000,
    0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000};

// Band positions follow the published curves (Soret bands near 415/430 nm,
// HbO Q-bands at 540/580 nm with the deoxy peak between them, isosbestic
// points near 500 and 570 nm, deoxy dominating past 600 nm, melanin decaying
// as ~lambda^-3.3). Magnitudes are compressed relative to molar extinction
// so the three absorbers stay separable through a three-channel camera:
// full-strength Soret bands would saturate the blue channel and collapse the
// two hemoglobins onto one axis.
const ExtinctionTables& default_extinction() {
    static const ExtinctionTables tables = {
        // eps_hbo
        {5.32, 9.34, 9.60, 4.92, 2.60, 2.20, 2.00, 1.92,
         1.95, 2.02, 2.09, 2.01, 2.48, 3.95, 5.32, 4.35,
         3.25, 4.48, 5.01, 2.02, 0.32, 0.15, 0.094, 0.061,
         0.047, 0.038, 0.032, 0.028, 0.026, 0.025, 0.024},
        // eps_hbr
        {4.46, 6.08, 8.16, 10.58, 7.10, 4.60, 3.20, 2.60,
         2.35, 2.18, 2.08, 1.88, 1.93, 2.28, 2.82, 4.77,
         5.35, 4.49, 3.72, 4.30, 5.50, 5.25, 4.40, 3.70,
         3.10, 2.60, 2.15, 1.80, 1.50, 1.25, 1.05},
        // eps_melanin: 40 * (lambda/500)^-3.33
        {84.1, 77.5, 71.5, 66.1, 61.2, 56.8, 52.8, 49.2,
         45.8, 42.8, 40.0, 37.4, 35.1, 33.0, 31.0, 29.1,
         27.4, 25.9, 24.4, 23.1, 21.8, 20.6, 19.5, 18.5,
         17.6, 16.7, 15.9, 15.1, 14.4, 13.7, 13.0}};
    return tables;
}

ExtinctionTables load_extinction_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::vector<std::string> expected = {"wavelength_nm", "eps_hbo", "eps_hbr",
                                               "eps_melanin"};
    if (table.header != expected) {
        throw ParseError(path.string() + ": expected header wavelength_nm,eps_hbo,eps_hbr,eps_melanin");
    }
    if (table.rows.size() != kBands) {
        throw ParseError(path.string() + ": expected " + std::to_string(kBands) + " rows, got " +
                         std::to_string(table.rows.size()));
    }
    ExtinctionTables out;
    for (int i = 0; i < kBands; ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = path.string() + " row " + std::to_string(i);
        if (csv::to_double(row[0], ctx) != wavelength_nm(i)) {
            throw ParseError(ctx + ": wavelength grid mismatch (want " +
                             csv::format_double(wavelength_nm(i)) + ", got " + row[0] + ")");
        }
        out.hbo[i] = csv::to_double(row[1], ctx);
        out.hbr[i] = csv::to_double(row[2], ctx);
        out.melanin[i] = csv::to_double(row[3], ctx);
    }
    return out;
}

void save_extinction_csv(const std::filesystem::path& path, const ExtinctionTables& tables) {
    std::string body = "wavelength_nm,eps_hbo,eps_hbr,eps_melanin\n";
    for (int i = 0; i < kBands; ++i) {
        body += csv::format_double(wavelength_nm(i)) + "," + csv::format_double(tables.hbo[i]) +
                "," + csv::format_double(tables.hbr[i]) + "," +
                csv::format_double(tables.melanin[i]) + "\n";
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

namespace {

// Equal-energy illuminant scale so a unit spectrum has Y = 100.
double xyz_scale() {
    static const double k = [] {
        double sum = 0.0;
        for (int i = 0; i < kBands; ++i) sum += kCieY[i] * kLambdaStep;
        return 100.0 / sum;
    }();
    return k;
}

} // namespace

XyzTriple spectrum_to_xyz(const Spectrum& s) {
    double x = 0.0, y = 0.0, z = 0.0;
    for (int i = 0; i < kBands; ++i) {
        x += s[i] * kCieX[i];
        y += s[i] * kCieY[i];
        z += s[i] * kCieZ[i];
    }
    const double k = xyz_scale() * kLambdaStep;
    return {x * k, y * k, z * k};
}

CameraModel CameraModel::standard(double gain, double noise_sigma) {
    constexpr double center[3] = {610.0, 540.0, 465.0};
    constexpr double width[3] = {35.0, 35.0, 30.0};

    CameraModel cam;
    cam.gain = gain;
    cam.noise_sigma = noise_sigma;
    cam.illuminant.fill(1.0);
    for (int c = 0; c < 3; ++c) {
        double norm = 0.0;
        for (int i = 0; i < kBands; ++i) {
            const double d = (wavelength_nm(i) - center[c]) / width[c];
            cam.sensitivities[c][i] = std::exp(-0.5 * d * d);
            norm += cam.sensitivities[c][i] * cam.illuminant[i] * kLambdaStep;
        }
        for (int i = 0; i < kBands; ++i) cam.sensitivities[c][i] /= norm;
    }
    return cam;
}

double channel_response(const Spectrum& s, const CameraModel& cam, int channel) {
    double sum = 0.0;
    for (int i = 0; i < kBands; ++i)
        sum += s[i] * cam.illuminant[i] * cam.sensitivities[channel][i] * kLambdaStep;
    return sum;
}

RgbTriple spectrum_to_rgb(const Spectrum& s, const CameraModel& cam, Rng& rng) {
    double v[3];
    for (int c = 0; c < 3; ++c) {
        double x = cam.gain * channel_response(s, cam, c);
        if (cam.noise_sigma > 0.0) x += rng.normal(0.0, cam.noise_sigma);
        v[c] = std::clamp(x, 0.0, 255.0);
    }
    return {v[0], v[1], v[2]};
}

} // namespace spo2cam
