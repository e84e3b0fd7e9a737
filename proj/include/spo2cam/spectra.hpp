/**
 * @file spectra.hpp
 * @brief Spectral grid, observer/extinction tables, and camera image formation.
 *
 * Everything works on a fixed 31-band grid, 400-700 nm in 10 nm steps.
 * Tristimulus integration uses the CIE 1931 2-degree observer under an
 * equal-energy illuminant, scaled so a perfect reflector has Y = 100.
 */

#ifndef SPO2CAM_SPECTRA_HPP
#define SPO2CAM_SPECTRA_HPP

#include <array>
#include <filesystem>

#include "spo2cam/rng.hpp"
#include "spo2cam/types.hpp"

namespace spo2cam {

inline constexpr int kBands = 31;
inline constexpr double kLambdaMin = 400.0;
inline constexpr double kLambdaStep = 10.0;

inline constexpr double wavelength_nm(int band) { return kLambdaMin + kLambdaStep * band; }

/// Diffuse reflectance sampled on the band grid, values in [0, 1].
using Spectrum = std::array<double, kBands>;

/// CIE 1931 2-degree color matching functions on the band grid.
extern const std::array<double, kBands> kCieX;
extern const std::array<double, kBands> kCieY;
extern const std::array<double, kBands> kCieZ;

/// Absorber strengths per concentration unit (library units, not molar).
/// Shapes follow the published curves: hemoglobin Soret bands near
/// 415/430 nm, the HbO double peak at 540/580 nm with the deoxy peak
/// between them, deoxy dominating in the red, melanin decaying ~lambda^-3.3.
struct ExtinctionTables {
    std::array<double, kBands> hbo;
    std::array<double, kBands> hbr;
    std::array<double, kBands> melanin;
};

/// Built-in default table (same values as the bundled CSV asset).
const ExtinctionTables& default_extinction();

/// Load a table from CSV (`wavelength_nm,eps_hbo,eps_hbr,eps_melanin`,
/// 31 rows matching the band grid exactly).
ExtinctionTables load_extinction_csv(const std::filesystem::path& path);
void save_extinction_csv(const std::filesystem::path& path, const ExtinctionTables& tables);

/// Tristimulus integration; unit spectrum gives Y = 100 exactly.
XyzTriple spectrum_to_xyz(const Spectrum& s);

/// RGB camera with per-band sensitivities. Rows are normalized so a unit
/// spectrum under the illuminant integrates to 1, hence a unit spectrum
/// maps to (gain, gain, gain) before clipping.
struct CameraModel {
    std::array<std::array<double, kBands>, 3> sensitivities{};
    std::array<double, kBands> illuminant{};
    double gain = 250.0;
    double noise_sigma = 0.0;

    /// Gaussian R/G/B passbands centered at 610/540/465 nm under an
    /// equal-energy illuminant.
    static CameraModel standard(double gain = 250.0, double noise_sigma = 0.0);
};

/// Noise-free sensor response before gain, one channel: sum s*I*S_c*dl.
double channel_response(const Spectrum& s, const CameraModel& cam, int channel);

/// channel = clip(gain * response + N(0, noise_sigma), 0, 255).
RgbTriple spectrum_to_rgb(const Spectrum& s, const CameraModel& cam, Rng& rng);

} // namespace spo2cam

#endif // SPO2CAM_SPECTRA_HPP
