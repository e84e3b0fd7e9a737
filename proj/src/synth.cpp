/**
 * @file synth.cpp
 * @brief Forward skin-optics model and synthetic session rendering.
 */

#include "spo2cam/synth.hpp"

#include <cmath>

#include "spo2cam/csv.hpp"
#include "spo2cam/errors.hpp"
#include "spo2cam/session.hpp"

namespace spo2cam {

namespace {

constexpr double kBaseReflectance = 0.6;
constexpr double kPathEpidermisCm = 0.05;
constexpr double kPathDermisCm = 0.10;

void validate_scenario(const Scenario& sc) {
    if (sc.duration_s <= 0.0) throw ConfigError("scenario duration must be positive");
    if (sc.frame_rate_hz <= 0.0) throw ConfigError("scenario frame rate must be positive");
    if (sc.frame_w < 1 || sc.frame_h < 1) throw ConfigError("scenario frame dims must be >= 1");
    if (sc.spo2_knots.empty()) throw ConfigError("scenario needs at least one profile knot");
    for (std::size_t i = 0; i < sc.spo2_knots.size(); ++i) {
        const auto& [t, v] = sc.spo2_knots[i];
        if (v < 70.0 || v > 100.0) {
            throw ConfigError("profile knot value " + csv::format_double(v) +
                              " outside [70, 100]");
        }
        if (i > 0 && t <= sc.spo2_knots[i - 1].first) {
            throw ConfigError("profile knot times must be strictly increasing");
        }
    }
    const double total_hb = sc.chromophore_base.c_hbo + sc.chromophore_base.c_hbr;
    if (total_hb <= 0.0) throw ConfigError("chromophore base carries no hemoglobin");
}

} // namespace

Spectrum reflectance_spectrum(const Chromophores& c, const ExtinctionTables& eps) {
    Spectrum s;
    for (int i = 0; i < kBands; ++i) {
        const double absorbance = c.c_m * eps.melanin[i] * kPathEpidermisCm +
                                  (c.c_hbo * eps.hbo[i] + c.c_hbr * eps.hbr[i]) * kPathDermisCm;
        s[i] = std::clamp(kBaseReflectance * std::exp(-absorbance), 0.0, 1.0);
    }
    return s;
}

std::vector<XyzChromSample> generate_m2_training_set(int n, std::uint64_t seed,
                                                     const ChromophoreRanges& ranges) {
    Rng rng(seed);
    std::vector<XyzChromSample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double m = rng.uniform(ranges.m_lo, ranges.m_hi);
        const double hbo = rng.uniform(ranges.hbo_lo, ranges.hbo_hi);
        const double hbr = rng.uniform(ranges.hbr_lo, ranges.hbr_hi);
        XyzChromSample sample;
        sample.truth = Chromophores::from_raw(m, hbo, hbr);
        sample.xyz = spectrum_to_xyz(reflectance_spectrum(sample.truth));
        samples.push_back(sample);
    }
    return samples;
}

std::array<Chromophores, 24> canonical_patch_chromophores() {
    // 2 melanin x 4 HbO x 3 HbR levels spanning the sampling box.
    constexpr double m_levels[2] = {0.08, 0.28};
    constexpr double hbo_levels[4] = {0.35, 0.70, 1.05, 1.35};
    constexpr double hbr_levels[3] = {0.05, 0.25, 0.45};
    std::array<Chromophores, 24> patches;
    int k = 0;
    for (double m : m_levels)
        for (double hbo : hbo_levels)
            for (double hbr : hbr_levels) patches[k++] = Chromophores::from_raw(m, hbo, hbr);
    return patches;
}

ColorCheckerSet render_checker(const CameraModel& cam, Rng& rng) {
    ColorCheckerSet checker;
    const auto patches = canonical_patch_chromophores();
    for (int i = 0; i < 24; ++i) {
        const Spectrum s = reflectance_spectrum(patches[static_cast<std::size_t>(i)]);
        ColorCheckerSet::Patch p;
        p.id = i;
        p.reference_xyz = spectrum_to_xyz(s);
        p.rgb = spectrum_to_rgb(s, cam, rng);
        checker.patches.push_back(p);
    }
    return checker;
}

double scenario_spo2_at(const Scenario& sc, double t) {
    const auto& knots = sc.spo2_knots;
    if (t <= knots.front().first) return knots.front().second;
    if (t >= knots.back().first) return knots.back().second;
    std::size_t hi = 1;
    while (knots[hi].first < t) ++hi;
    const auto& [t0, v0] = knots[hi - 1];
    const auto& [t1, v1] = knots[hi];
    const double w = (t - t0) / (t1 - t0);
    return v0 * (1.0 - w) + v1 * w;
}

Chromophores scenario_chromophores(const Scenario& sc, double spo2_percent) {
    const double total_hb = sc.chromophore_base.c_hbo + sc.chromophore_base.c_hbr;
    const double melanin =
        sc.skin_tone_melanin > 0.0 ? sc.skin_tone_melanin : sc.chromophore_base.c_m;
    return Chromophores::from_raw(melanin, total_hb * spo2_percent / 100.0,
                                  total_hb * (1.0 - spo2_percent / 100.0));
}

SynthSession generate_session(const Scenario& sc, const CameraModel& cam) {
    validate_scenario(sc);

    SynthSession session;
    session.subject = sc.subject;
    session.frame_rate_hz = sc.frame_rate_hz;

    Rng rng(sc.rng_seed);
    // Draw order is part of the determinism contract: checker first, then
    // frames in index order, pixels row-major, channels R,G,B.
    session.checker = render_checker(cam, rng);

    const auto n_frames =
        static_cast<std::size_t>(std::lround(sc.duration_s * sc.frame_rate_hz));
    for (std::size_t i = 0; i < std::max<std::size_t>(n_frames, 1); ++i) {
        const double t = static_cast<double>(i) / sc.frame_rate_hz;
        const double spo2 = scenario_spo2_at(sc, t);
        const Chromophores truth = scenario_chromophores(sc, spo2);
        const Spectrum spectrum = reflectance_spectrum(truth);

        double base[3];
        for (int c = 0; c < 3; ++c) base[c] = cam.gain * channel_response(spectrum, cam, c);

        Image frame(sc.frame_w, sc.frame_h, 3);
        std::size_t k = 0;
        for (int y = 0; y < sc.frame_h; ++y) {
            for (int x = 0; x < sc.frame_w; ++x) {
                for (int c = 0; c < 3; ++c, ++k) {
                    double value = base[c];
                    if (cam.noise_sigma > 0.0) value += rng.normal(0.0, cam.noise_sigma);
                    frame.data[k] = static_cast<std::uint8_t>(
                        std::lround(std::clamp(value, 0.0, 255.0)));
                }
            }
        }
        session.frames.push_back(std::move(frame));
        session.frame_t.push_back(t);
        session.labels.t.push_back(t);
        session.labels.v.push_back(spo2);
        session.truth.push_back(truth);
    }
    return session;
}

void write_dataset(const std::filesystem::path& dir, const SynthSession& session) {
    std::filesystem::create_directories(dir / "frames");

    for (std::size_t i = 0; i < session.frames.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        save_png(dir / "frames" / name, session.frames[i]);
    }
    save_labels_csv(dir / "labels.csv", session.labels);
    save_colorchecker(dir / "colorchecker.csv", session.checker);

    Session shell;
    shell.session_id = dir.filename().string();
    shell.dataset_id = dir.parent_path().filename().string();
    shell.frame_rate_hz = session.frame_rate_hz;
    shell.metadata = session.subject;
    save_meta_json(dir / "meta.json", shell);

    RoiBox full;
    full.width = session.frames.front().width;
    full.height = session.frames.front().height;
    full.cx = full.width * 0.5;
    full.cy = full.height * 0.5;
    save_roi_seed_json(dir / "roi_seed.json", full);
}

} // namespace spo2cam
