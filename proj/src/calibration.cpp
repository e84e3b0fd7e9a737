#include "spo2cam/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "spo2cam/errors.hpp"
#include "spo2cam/types.hpp"

namespace spo2cam {

namespace {

void check_window(const std::vector<double>& pred, const std::vector<double>& truth,
                  const CalibrationWindow& window) {
    if (pred.size() != truth.size())
        throw LengthMismatch("calibration: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " labels");
    if (window.indices.empty()) throw LengthMismatch("calibration: empty window");
    for (auto i : window.indices)
        if (i >= pred.size())
            throw LengthMismatch("calibration: window index " + std::to_string(i) +
                                 " out of range (series length " + std::to_string(pred.size()) +
                                 ")");
}

double window_mean(const std::vector<double>& v, const CalibrationWindow& w) {
    double s = 0.0;
    for (auto i : w.indices) s += v[i];
    return s / static_cast<double>(w.indices.size());
}

// Linear-interpolation quantile of a sorted sample (the convention most
// statistics packages default to).
double quantile_sorted(const std::vector<double>& sorted, double level) {
    const double h = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

CalibrationWindow first_n_window(std::size_t n, std::size_t total) {
    if (n == 0 || n > total)
        throw LengthMismatch("first_n_window: n=" + std::to_string(n) + " of " +
                             std::to_string(total) + " frames");
    CalibrationWindow w;
    w.mode = WindowMode::first_n;
    w.n_or_k = n;
    w.indices.resize(n);
    std::iota(w.indices.begin(), w.indices.end(), std::size_t{0});
    return w;
}

CalibrationParams fit_affine(const std::vector<double>& pred, const std::vector<double>& truth,
                             const CalibrationWindow& window) {
    check_window(pred, truth, window);
    CalibrationParams p;
    p.window = window;
    p.fallback_mean = clamp_spo2(window_mean(truth, window));

    const double mean_y = window_mean(pred, window);
    const double mean_s = window_mean(truth, window);
    double var_y = 0.0, cov = 0.0;
    for (auto i : window.indices) {
        const double dy = pred[i] - mean_y;
        var_y += dy * dy;
        cov += dy * (truth[i] - mean_s);
    }
    if (var_y == 0.0) {
        p.degenerate = true;  // slope undefined; apply falls back to the mean
        return p;
    }
    p.alpha = cov / var_y;
    p.beta = mean_s - p.alpha * mean_y;
    return p;
}

CalibrationParams fit_beta_fixed_alpha(const std::vector<double>& pred,
                                       const std::vector<double>& truth,
                                       const CalibrationWindow& window, double alpha) {
    check_window(pred, truth, window);
    CalibrationParams p;
    p.window = window;
    p.alpha = alpha;
    p.fallback_mean = clamp_spo2(window_mean(truth, window));
    double acc = 0.0;
    for (auto i : window.indices) acc += truth[i] - alpha * pred[i];
    p.beta = acc / static_cast<double>(window.indices.size());
    return p;
}

std::vector<double> apply_calibration(const std::vector<double>& pred,
                                      const CalibrationParams& params) {
    std::vector<double> out(pred.size());
    if (params.alpha > 0.0) {
        for (std::size_t i = 0; i < pred.size(); ++i)
            out[i] = clamp_spo2(params.beta + params.alpha * pred[i]);
    } else {
        std::fill(out.begin(), out.end(), clamp_spo2(params.fallback_mean));
    }
    return out;
}

CalibrationWindow intelligent_sample(const std::vector<double>& truth, std::size_t k) {
    if (k == 0 || k > truth.size())
        throw LengthMismatch("intelligent_sample: k=" + std::to_string(k) + " of " +
                             std::to_string(truth.size()) + " labels");

    CalibrationWindow w;
    w.mode = WindowMode::intelligent_k;
    w.n_or_k = k;

    std::vector<double> sorted(truth);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t distinct =
        static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    sorted.assign(truth.begin(), truth.end());
    std::sort(sorted.begin(), sorted.end());

    if (distinct < k) {
        w.fell_back_to_first = true;
        w.indices.resize(k);
        std::iota(w.indices.begin(), w.indices.end(), std::size_t{0});
        return w;
    }

    std::set<std::size_t> chosen;
    for (std::size_t j = 0; j < k; ++j) {
        const double level = (k == 1) ? 0.5 : static_cast<double>(j) / static_cast<double>(k - 1);
        const double target = quantile_sorted(sorted, level);
        std::size_t best = truth.size();
        double best_dist = 0.0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (chosen.count(i)) continue;
            const double d = std::abs(truth[i] - target);
            if (best == truth.size() || d < best_dist) {  // ties keep the earliest i
                best = i;
                best_dist = d;
            }
        }
        chosen.insert(best);
    }
    w.indices.assign(chosen.begin(), chosen.end());
    return w;
}

std::vector<double> no_calibration(const std::vector<double>& pred, double train_label_mean,
                                   double train_pred_mean) {
    const double shift = train_label_mean - train_pred_mean;
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) out[i] = clamp_spo2(pred[i] + shift);
    return out;
}

double calibration_mse(const std::vector<double>& pred, const std::vector<double>& truth,
                       const CalibrationWindow& window, double alpha, double beta) {
    check_window(pred, truth, window);
    double acc = 0.0;
    for (auto i : window.indices) {
        const double r = beta + alpha * pred[i] - truth[i];
        acc += r * r;
    }
    return acc / static_cast<double>(window.indices.size());
}

}  // namespace spo2cam
