#include "spo2cam/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "spo2cam/errors.hpp"

namespace spo2cam {

ErrorStats compute_errors(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.empty() || pred.size() != truth.size())
        throw LengthMismatch("compute_errors: " + std::to_string(pred.size()) +
                             " predictions vs " + std::to_string(truth.size()) + " labels");
    double abs_sum = 0.0, sq_sum = 0.0, rel_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!(truth[i] > 0.0))
            throw ZeroTruth("compute_errors: non-positive truth value " +
                            std::to_string(truth[i]) + " at index " + std::to_string(i));
        const double d = pred[i] - truth[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
        rel_sum += std::abs(d) / truth[i];
    }
    const auto n = static_cast<double>(truth.size());
    ErrorStats s;
    s.mae = abs_sum / n;
    s.rmse = std::sqrt(sq_sum / n);
    s.mape = 100.0 * rel_sum / n;
    s.n = truth.size();
    return s;
}

namespace {

// Pearson r over pred[i0..i0+len) against truth[j0..j0+len). Computed as
// cov / sqrt(var_x * var_y): for elementwise-identical slices cov equals both
// variances and sqrt(v*v) == v in IEEE arithmetic, so r comes out exactly 1.
std::optional<double> pearson_slice(const std::vector<double>& x, std::size_t i0,
                                    const std::vector<double>& y, std::size_t j0,
                                    std::size_t len) {
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        mx += x[i0 + k];
        my += y[j0 + k];
    }
    mx /= static_cast<double>(len);
    my /= static_cast<double>(len);
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
        const double dx = x[i0 + k] - mx;
        const double dy = y[j0 + k] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if (vx == 0.0 || vy == 0.0) return std::nullopt;
    return cov / std::sqrt(vx * vy);
}

}  // namespace

std::optional<PccAlignment> aligned_pcc(const std::vector<double>& pred,
                                        const std::vector<double>& truth, double max_lag_s,
                                        double rate_hz) {
    if (pred.size() != truth.size())
        throw LengthMismatch("aligned_pcc: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " labels");
    const long max_lag = std::lround(max_lag_s * rate_hz);
    if (max_lag < 0 || pred.size() <= static_cast<std::size_t>(max_lag))
        throw LengthMismatch("aligned_pcc: series length " + std::to_string(pred.size()) +
                             " must exceed the maximum lag of " + std::to_string(max_lag) +
                             " samples");

    std::optional<PccAlignment> best;
    // Visit lags by increasing |lag| so strict improvement keeps the smallest.
    for (long mag = 0; mag <= max_lag; ++mag) {
        for (const long lag : {mag, -mag}) {
            if (mag == 0 && lag < 0) continue;
            const auto shift = static_cast<std::size_t>(std::labs(lag));
            const std::size_t len = pred.size() - shift;
            const std::size_t i0 = lag < 0 ? shift : 0;
            const std::size_t j0 = lag < 0 ? 0 : shift;
            const auto r = pearson_slice(pred, i0, truth, j0, len);
            if (!r) continue;
            // Strongest alignment in magnitude; the signed value is reported,
            // so a genuinely anti-correlated pair comes back as -1 at lag 0
            // rather than as whatever weak positive value some other lag gives.
            if (!best || std::abs(*r) > std::abs(best->r))
                best = PccAlignment{*r, static_cast<double>(lag) / rate_hz};
        }
    }
    return best;
}

ErrorStats session_stats(const std::vector<double>& pred, const std::vector<double>& truth,
                         double max_lag_s, double rate_hz) {
    ErrorStats s = compute_errors(pred, truth);
    if (const auto a = aligned_pcc(pred, truth, max_lag_s, rate_hz)) {
        s.pearson = a->r;
        s.lag_s = a->lag_s;
    }
    return s;
}

}  // namespace spo2cam
