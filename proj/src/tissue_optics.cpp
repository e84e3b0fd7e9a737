/**
 * @file tissue_optics.cpp
 * @brief Least-squares fits and transforms for the skin color model.
 *
 * Both fits go through normal equations with a 1e-9 ridge on the diagonal.
 * Rank is checked on the unridged normal matrix so genuinely deficient
 * designs (too few samples, collinear colors) fail loudly instead of being
 * silently regularized into garbage.
 */

#include "spo2cam/tissue_optics.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>

#include "spo2cam/csv.hpp"
#include "spo2cam/errors.hpp"

namespace spo2cam {

namespace {

constexpr double kRidge = 1e-9;

/// Minimize ||X*B - Y||^2 column-block-wise; returns B (k x m).
Eigen::MatrixXd solve_normal_equations(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                       const char* what) {
    const auto k = X.cols();
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (lu.rank() < k) {
        throw SingularDesign(std::string(what) + ": normal matrix rank " +
                             std::to_string(lu.rank()) + " < " + std::to_string(k));
    }
    xtx.diagonal().array() += kRidge;
    return xtx.ldlt().solve(X.transpose() * Y);
}

} // namespace

ColorCheckerSet load_colorchecker(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::vector<std::string> expected = {"patch_id", "r", "g", "b",
                                               "ref_x", "ref_y", "ref_z"};
    if (table.header != expected) {
        throw ParseError(path.string() +
                         ": expected header patch_id,r,g,b,ref_x,ref_y,ref_z");
    }
    if (table.rows.size() != 24) {
        throw ParseError(path.string() + ": expected 24 patches, got " +
                         std::to_string(table.rows.size()));
    }
    ColorCheckerSet checker;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = path.string() + " patch " + std::to_string(i);
        ColorCheckerSet::Patch p;
        p.id = static_cast<int>(csv::to_long(row[0], ctx));
        if (p.id != static_cast<int>(i)) {
            throw ParseError(ctx + ": patch_id out of order (want " + std::to_string(i) +
                             ", got " + std::to_string(p.id) + ")");
        }
        p.rgb = {csv::to_double(row[1], ctx), csv::to_double(row[2], ctx),
                 csv::to_double(row[3], ctx)};
        p.reference_xyz = {csv::to_double(row[4], ctx), csv::to_double(row[5], ctx),
                           csv::to_double(row[6], ctx)};
        checker.patches.push_back(p);
    }
    return checker;
}

void save_colorchecker(const std::filesystem::path& path, const ColorCheckerSet& checker) {
    std::string body = "patch_id,r,g,b,ref_x,ref_y,ref_z\n";
    for (const auto& p : checker.patches) {
        body += std::to_string(p.id) + "," + csv::format_double(p.rgb.r) + "," +
                csv::format_double(p.rgb.g) + "," + csv::format_double(p.rgb.b) + "," +
                csv::format_double(p.reference_xyz.x) + "," +
                csv::format_double(p.reference_xyz.y) + "," +
                csv::format_double(p.reference_xyz.z) + "\n";
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

M1Fit fit_m1(const ColorCheckerSet& checker) {
    const auto n = static_cast<Eigen::Index>(checker.patches.size());
    Eigen::MatrixXd X(n, 4), Y(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = checker.patches[static_cast<std::size_t>(i)];
        X(i, 0) = 1.0;
        X(i, 1) = p.rgb.r;
        X(i, 2) = p.rgb.g;
        X(i, 3) = p.rgb.b;
        Y(i, 0) = p.reference_xyz.x;
        Y(i, 1) = p.reference_xyz.y;
        Y(i, 2) = p.reference_xyz.z;
    }
    const Eigen::MatrixXd B = solve_normal_equations(X, Y, "fit_m1"); // 4 x 3

    M1Fit fit;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) fit.m1.a[r][c] = B(c, r);
    fit.residual = (X * B - Y).squaredNorm();
    return fit;
}

XyzTriple rgb_to_xyz(const M1Matrix& m1, const RgbTriple& rgb) {
    const double probe[4] = {1.0, rgb.r, rgb.g, rgb.b};
    double out[3];
    for (int r = 0; r < 3; ++r) {
        out[r] = 0.0;
        for (int c = 0; c < 4; ++c) out[r] += m1.a[r][c] * probe[c];
    }
    return {out[0], out[1], out[2]};
}

std::array<double, 10> quadratic_features(const XyzTriple& v) {
    return {1.0,       v.x,       v.y,       v.z,       v.x * v.x,
            v.y * v.y, v.z * v.z, v.x * v.y, v.x * v.z, v.y * v.z};
}

M2Fit fit_m2(const std::vector<XyzChromSample>& samples) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd X(n, 10), Y(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        const auto f = quadratic_features(s.xyz);
        for (int c = 0; c < 10; ++c) X(i, c) = f[c];
        Y(i, 0) = s.truth.c_m;
        Y(i, 1) = s.truth.c_hbo;
        Y(i, 2) = s.truth.c_hbr;
    }
    const Eigen::MatrixXd B = solve_normal_equations(X, Y, "fit_m2"); // 10 x 3

    M2Fit fit;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 10; ++c) fit.m2.a[r][c] = B(c, r);

    const Eigen::MatrixXd resid = X * B - Y;
    for (int r = 0; r < 3; ++r) {
        const double ss_res = resid.col(r).squaredNorm();
        const Eigen::VectorXd centered = Y.col(r).array() - Y.col(r).mean();
        const double ss_tot = centered.squaredNorm();
        fit.r2[static_cast<std::size_t>(r)] =
            ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-18 ? 1.0 : 0.0);
    }
    return fit;
}

Chromophores xyz_to_chromophores(const M2Matrix& m2, const XyzTriple& xyz) {
    const auto f = quadratic_features(xyz);
    double out[3];
    for (int r = 0; r < 3; ++r) {
        out[r] = 0.0;
        for (int c = 0; c < 10; ++c) out[r] += m2.a[r][c] * f[c];
    }
    return Chromophores::from_raw(out[0], out[1], out[2]);
}

double sto2(const Chromophores& c) {
    const double total = c.c_hbo + c.c_hbr;
    if (total <= 1e-12) {
        throw ZeroHemoglobin("total hemoglobin " + csv::format_double(total) + " <= 1e-12");
    }
    return 100.0 * c.c_hbo / total;
}

TimeSeries estimate_sto2_series(const std::vector<double>& t,
                                const std::vector<RgbTriple>& roi_means,
                                const M1Matrix& m1, const M2Matrix& m2) {
    if (t.size() != roi_means.size()) {
        throw LengthMismatch("timestamps (" + std::to_string(t.size()) + ") vs frames (" +
                             std::to_string(roi_means.size()) + ")");
    }
    const std::size_t n = t.size();
    std::vector<double> values(n, 0.0);
    std::vector<bool> valid(n, false);
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = xyz_to_chromophores(m2, rgb_to_xyz(m1, roi_means[i]));
        try {
            values[i] = sto2(c);
            valid[i] = true;
            ++n_valid;
        } catch (const ZeroHemoglobin&) {
            // Filled below from neighboring estimates.
        }
    }
    if (n_valid == 0) throw ZeroHemoglobin("no frame yielded a hemoglobin estimate");

    if (n_valid < n) {
        // Interior gaps: linear in time between the bracketing estimates;
        // boundary gaps: hold the nearest estimate.
        std::ptrdiff_t prev = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (valid[i]) {
                prev = static_cast<std::ptrdiff_t>(i);
                continue;
            }
            std::size_t next = i + 1;
            while (next < n && !valid[next]) ++next;
            if (prev < 0) {
                values[i] = values[next];
            } else if (next >= n) {
                values[i] = values[static_cast<std::size_t>(prev)];
            } else {
                const double t0 = t[static_cast<std::size_t>(prev)];
                const double span = t[next] - t0;
                const double w = span > 0.0 ? (t[i] - t0) / span : 0.0;
                values[i] = values[static_cast<std::size_t>(prev)] * (1.0 - w) +
                            values[next] * w;
            }
        }
    }

    TimeSeries out;
    out.t = t;
    out.v = std::move(values);
    return out;
}

void save_tissue_model(const std::filesystem::path& path, const TissueModel& model) {
    nlohmann::json j;
    j["m1"] = model.m1.a;
    j["m2"] = model.m2.a;
    j["fit_residual"] = model.fit_residual;
    j["r2"] = model.r2;

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

TissueModel load_tissue_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    TissueModel model;
    try {
        j.at("m1").get_to(model.m1.a);
        j.at("m2").get_to(model.m2.a);
        model.fit_residual = j.at("fit_residual").get<double>();
        j.at("r2").get_to(model.r2);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    for (const auto& row : model.m1.a)
        for (double v : row)
            if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite m1 entry");
    for (const auto& row : model.m2.a)
        for (double v : row)
            if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite m2 entry");
    return model;
}

} // namespace spo2cam
