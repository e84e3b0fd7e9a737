/**
 * @file synth.hpp
 * @brief Synthetic skin-optics generator: forward model from chromophores to
 *        spectra, camera renders, and whole labeled sessions.
 *
 * This is the repo's ground-truth world. SpO2 maps to chromophores with
 * constant total hemoglobin (c_hbo = H*S/100, c_hbr = H*(1-S/100)), so the
 * tissue model's StO2 equals the programmed SpO2 by construction and the
 * whole pipeline can be validated end to end.
 */

#ifndef SPO2CAM_SYNTH_HPP
#define SPO2CAM_SYNTH_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include "spo2cam/image.hpp"
#include "spo2cam/spectra.hpp"
#include "spo2cam/tissue_optics.hpp"
#include "spo2cam/types.hpp"

namespace spo2cam {

/// Sampling box for generate_m2_training_set, covering the session
/// generator's reachable chromophore values with margin.
struct ChromophoreRanges {
    double m_lo = 0.02, m_hi = 0.35;
    double hbo_lo = 0.30, hbo_hi = 1.40;
    double hbr_lo = 0.00, hbr_hi = 0.50;
};

/// Modified Beer-Lambert diffuse reflectance:
/// R(l) = 0.6 * exp(-(c_m*eps_m*L_e + (c_hbo*eps_hbo + c_hbr*eps_hbr)*L_d)),
/// clipped to [0, 1]. Path lengths: epidermis 0.05 cm, dermis 0.10 cm.
Spectrum reflectance_spectrum(const Chromophores& c,
                              const ExtinctionTables& eps = default_extinction());

std::vector<XyzChromSample> generate_m2_training_set(
    int n, std::uint64_t seed, const ChromophoreRanges& ranges = ChromophoreRanges{});

/// The canonical 24 calibration patches: a 24-point grid of chromophore
/// triples spanning the sampling box, so the affine color fit is exercised
/// on the same family of spectra it will see in sessions.
std::array<Chromophores, 24> canonical_patch_chromophores();

/// Reference XYZ straight from the patch spectra; RGB rendered through the
/// camera (consumes 24 noise draws in patch order when noise is enabled).
ColorCheckerSet render_checker(const CameraModel& cam, Rng& rng);

struct Scenario {
    double duration_s = 540.0;
    double frame_rate_hz = 1.0;
    /// Piecewise-linear SpO2 profile; knots strictly increasing in t,
    /// values in [70, 100]. Held flat outside the knot span.
    std::vector<std::pair<double, double>> spo2_knots;
    /// Total hemoglobin H = c_hbo + c_hbr of the base triple.
    Chromophores chromophore_base = Chromophores::from_raw(0.15, 0.95, 0.05);
    /// Overrides chromophore_base.c_m when positive.
    double skin_tone_melanin = 0.0;
    std::uint64_t rng_seed = 1;
    int frame_w = 20;
    int frame_h = 20;
    SubjectMetadata subject;
};

/// Profile value at time t (clamped to the knot span).
double scenario_spo2_at(const Scenario& sc, double t);

/// Effective per-frame chromophores for SpO2 value s.
Chromophores scenario_chromophores(const Scenario& sc, double spo2_percent);

struct SynthSession {
    std::vector<Image> frames;
    std::vector<double> frame_t;
    TimeSeries labels; // one row per frame
    ColorCheckerSet checker;
    SubjectMetadata subject;
    double frame_rate_hz = 0.0;
    std::vector<Chromophores> truth; // per-frame generating chromophores
};

/// Renders flat-color frames plus a checker reading through `cam`.
/// Deterministic in (scenario.rng_seed, cam).
SynthSession generate_session(const Scenario& sc, const CameraModel& cam);

/// Writes the canonical dataset layout into `dir`:
/// frames/%06d.png, labels.csv, colorchecker.csv, meta.json, roi_seed.json
/// (full-frame seed box).
void write_dataset(const std::filesystem::path& dir, const SynthSession& session);

} // namespace spo2cam

#endif // SPO2CAM_SYNTH_HPP
