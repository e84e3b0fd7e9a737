#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace spo2cam {

struct ErrorStats {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;                // percent
    std::optional<double> pearson;    // missing when either series is constant
    double lag_s = 0.0;               // lag of the best Pearson alignment
    std::size_t n = 0;
};

/// MAE, RMSE and MAPE of pred against truth (MAPE denominators are the truth
/// values). Throws LengthMismatch on empty or unequal series, ZeroTruth when
/// any truth value is <= 0.
ErrorStats compute_errors(const std::vector<double>& pred, const std::vector<double>& truth);

struct PccAlignment {
    double r = 0.0;
    double lag_s = 0.0;
};

/// Pearson correlation over integer lags l in [-L, L], L = round(max_lag_s *
/// rate_hz), pairing pred[i] with truth[i + l]. A positive lag therefore
/// means the truth series trails the predictions. The lag with the largest
/// |r| wins and its signed r is reported; ties prefer the smallest |lag|.
/// Returns nullopt when every overlap is constant in either series
/// (correlation undefined). Throws LengthMismatch when the series differ in
/// length or are not longer than L.
std::optional<PccAlignment> aligned_pcc(const std::vector<double>& pred,
                                        const std::vector<double>& truth, double max_lag_s,
                                        double rate_hz);

/// compute_errors + aligned_pcc folded into one record.
ErrorStats session_stats(const std::vector<double>& pred, const std::vector<double>& truth,
                         double max_lag_s, double rate_hz);

}  // namespace spo2cam
