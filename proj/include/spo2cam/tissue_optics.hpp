/**
 * @file tissue_optics.hpp
 * @brief Skin tissue color model: RGB -> XYZ -> chromophores -> StO2.
 */

#ifndef SPO2CAM_TISSUE_OPTICS_HPP
#define SPO2CAM_TISSUE_OPTICS_HPP

#include <array>
#include <filesystem>
#include <vector>

#include "spo2cam/types.hpp"

namespace spo2cam {

/// Affine map from camera RGB to XYZ. Rows X, Y, Z; columns act on the
/// probe vector (1, R, G, B).
struct M1Matrix {
    std::array<std::array<double, 4>, 3> a{};
};

/// Quadratic map from XYZ to chromophores. Rows C_m, C_HbO, C_HbR; columns
/// act on the feature vector (1, X, Y, Z, X^2, Y^2, Z^2, XY, XZ, YZ).
struct M2Matrix {
    std::array<std::array<double, 10>, 3> a{};
};

/// One color-checker reading: camera RGB next to the patch's reference XYZ.
struct ColorCheckerSet {
    struct Patch {
        int id = 0;
        RgbTriple rgb;
        XyzTriple reference_xyz;
    };
    std::vector<Patch> patches;
};

/// CSV columns `patch_id,r,g,b,ref_x,ref_y,ref_z`; 24 rows, ids 0-23 in order.
ColorCheckerSet load_colorchecker(const std::filesystem::path& path);
void save_colorchecker(const std::filesystem::path& path, const ColorCheckerSet& checker);

struct M1Fit {
    M1Matrix m1;
    double residual = 0.0; // sum of squared XYZ residuals over all patches
};

struct M2Fit {
    M2Matrix m2;
    std::array<double, 3> r2{}; // per-row coefficient of determination
};

struct XyzChromSample {
    XyzTriple xyz;
    Chromophores truth;
};

/// Least squares over the probe vector (1, R, G, B). Throws SingularDesign
/// when the 4x4 normal matrix is rank-deficient (e.g. identical patches).
M1Fit fit_m1(const ColorCheckerSet& checker);

XyzTriple rgb_to_xyz(const M1Matrix& m1, const RgbTriple& rgb);

/// Per-row least squares over the 10-term quadratic feature vector. Throws
/// SingularDesign when the 10x10 normal matrix is rank-deficient
/// (fewer than 10 samples is always rank-deficient).
M2Fit fit_m2(const std::vector<XyzChromSample>& samples);

/// (1, X, Y, Z, X^2, Y^2, Z^2, XY, XZ, YZ)
std::array<double, 10> quadratic_features(const XyzTriple& xyz);

/// Negative regression outputs are clamped to zero with the flag set.
Chromophores xyz_to_chromophores(const M2Matrix& m2, const XyzTriple& xyz);

/// 100 * C_HbO / (C_HbO + C_HbR). Throws ZeroHemoglobin when the
/// denominator is <= 1e-12.
double sto2(const Chromophores& c);

/// Per-frame mean ROI color -> StO2 series. Frames whose chromophores carry
/// no hemoglobin become missing values: interior gaps are linearly
/// interpolated, boundary gaps held from the nearest estimate.
TimeSeries estimate_sto2_series(const std::vector<double>& t,
                                const std::vector<RgbTriple>& roi_means,
                                const M1Matrix& m1, const M2Matrix& m2);

/// Fitted model bundle persisted as JSON:
/// {"m1": [[..4]x3], "m2": [[..10]x3], "fit_residual": .., "r2": [..3]}.
struct TissueModel {
    M1Matrix m1;
    M2Matrix m2;
    double fit_residual = 0.0;
    std::array<double, 3> r2{};
};

void save_tissue_model(const std::filesystem::path& path, const TissueModel& model);
TissueModel load_tissue_model(const std::filesystem::path& path);

} // namespace spo2cam

#endif // SPO2CAM_TISSUE_OPTICS_HPP
