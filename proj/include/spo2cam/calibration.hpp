#pragma once

#include <cstddef>
#include <vector>

namespace spo2cam {

enum class WindowMode { first_n, intelligent_k };

// Which selected frames a calibration is fitted on.
struct CalibrationWindow {
    std::vector<std::size_t> indices;  // positions within the session's selected frames
    WindowMode mode = WindowMode::first_n;
    std::size_t n_or_k = 0;
    // intelligent_k needs label variation; with too few distinct labels it
    // silently degrades to the first k frames and records that here.
    bool fell_back_to_first = false;
};

/// indices 0..n-1. Throws LengthMismatch when n == 0 or n > total.
CalibrationWindow first_n_window(std::size_t n, std::size_t total);

// Per-video affine map from raw model output to SpO2. A non-positive alpha
// cannot be applied as a slope; apply_calibration then emits the constant
// window-mean label instead, so the mean is always carried along.
struct CalibrationParams {
    double alpha = 0.0;
    double beta = 0.0;
    double fallback_mean = 0.0;  // mean of the window's true labels
    bool degenerate = false;     // window predictions had zero variance
    CalibrationWindow window;
};

/// Closed-form least squares over the window: alpha = cov(pred, truth) /
/// var(pred), beta = mean(truth) - alpha * mean(pred). Zero prediction
/// variance is not an error: the result has alpha = beta = 0 and the
/// `degenerate` flag set, which routes apply_calibration to the mean
/// fallback. Throws LengthMismatch on an empty window, mismatched series, or
/// out-of-range indices.
CalibrationParams fit_affine(const std::vector<double>& pred, const std::vector<double>& truth,
                             const CalibrationWindow& window);

/// beta = mean(truth - alpha * pred) over the window; alpha passes through.
CalibrationParams fit_beta_fixed_alpha(const std::vector<double>& pred,
                                       const std::vector<double>& truth,
                                       const CalibrationWindow& window, double alpha);

/// alpha > 0: clamp(beta + alpha * pred). alpha <= 0: constant
/// clamp(fallback_mean), independent of the predictions.
std::vector<double> apply_calibration(const std::vector<double>& pred,
                                      const CalibrationParams& params);

/// Picks k frames whose labels sit nearest the k evenly spaced label
/// quantiles (min..max; k == 1 uses the median). Ties go to the earliest
/// frame and every chosen frame is distinct. Fewer than k distinct label
/// values means no useful spread: fall back to the first k frames, flagged.
/// Throws LengthMismatch when k == 0 or k > truth.size().
CalibrationWindow intelligent_sample(const std::vector<double>& truth, std::size_t k);

/// The "no calibration" reference: shift every prediction by the gap between
/// the training-population label mean and prediction mean, then clamp.
std::vector<double> no_calibration(const std::vector<double>& pred, double train_label_mean,
                                   double train_pred_mean);

/// Window MSE of beta + alpha*pred (no clamping) against truth — the
/// objective fit_affine minimizes; exposed for optimality probes.
double calibration_mse(const std::vector<double>& pred, const std::vector<double>& truth,
                       const CalibrationWindow& window, double alpha, double beta);

}  // namespace spo2cam
