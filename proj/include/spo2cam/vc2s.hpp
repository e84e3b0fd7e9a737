#pragma once

// Training, inference, and checkpointing for the dual-path video+colorcheck
// saturation regressor. The network core lives in vc2s_net.hpp.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spo2cam/image.hpp"
#include "spo2cam/preprocess.hpp"
#include "spo2cam/tissue_optics.hpp"
#include "spo2cam/vc2s_net.hpp"

namespace spo2cam::vc2s {

struct TrainConfig {
    int epochs = 15;
    double learning_rate = 1e-3;
    int batch_size = 32;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t rng_seed = 1;
};

/// One training pair. `roi` is (3, in_h, in_w) channel-major in [0,1];
/// `checker` is (3, 24, 1) in [0,1]; `label` is SpO2 in percent.
struct TrainSample {
    std::vector<float> roi;
    std::vector<float> checker;
    float label = 0.0f;
};

struct Vc2sModel {
    int version = 1;
    int in_h = 0;
    int in_w = 0;
    bool use_colorcheck = true;
    TrainConfig config;
    std::vector<float> params;       // flat layout, see vc2s_net.hpp
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// AdamW step with decoupled weight decay, applied uniformly to every
/// parameter. `step` is the 1-based global batch counter (bias correction).
void adamw_step(std::vector<float>& params, const std::vector<float>& grad, std::vector<float>& m,
                std::vector<float>& v, long step, double lr, const TrainConfig& cfg);

/// Full-batch SGD-free training driver: seeded init, per-epoch cosine decay of
/// the learning rate (floor 0 at t = epochs), per-epoch reshuffle, AdamW
/// updates per mini-batch. Deterministic for a fixed config and sample order.
/// When `use_colorcheck` is false the color branch input is forced to zeros.
/// Throws ShapeMismatch on inconsistent sample shapes, NonFiniteLoss (with the
/// global batch index) when a batch loss stops being finite.
Vc2sModel train_vc2s(const std::vector<TrainSample>& samples, int in_h, int in_w,
                     const TrainConfig& cfg, bool use_colorcheck = true);

/// Image (interleaved u8 RGB) to channel-major [0,1] float tensor.
std::vector<float> roi_tensor(const Image& img);

/// Checker reading to the (3, 24, 1) branch input: per-patch mean RGB
/// rescaled to [0,1]. Throws ShapeMismatch unless exactly 24 patches.
std::vector<float> checker_tensor(const ColorCheckerSet& checker);

/// All-zero color branch input (colorcheck-free ablation).
std::vector<float> zero_checker_tensor();

/// Raw uncalibrated per-frame predictions for one preprocessed session, in
/// selected-frame order. `checker` may be the session's own reading or a
/// dataset-level substitute; models trained with the color branch active
/// throw MissingColorcheck when it is absent. Pure: same inputs, same bits.
std::vector<double> predict_series(const Vc2sModel& model, const PreprocessedSession& pre,
                                   const std::optional<std::vector<float>>& checker);

/// Zero-phase 0.025 Hz second-order low-pass, no clamping: the smoothing
/// applied to raw predictions before calibration.
std::vector<double> lowpass_series(const std::vector<double>& values, double rate_hz);

/// JSON checkpoint: version (mandatory), input shape, color-branch flag,
/// config echo including the seed, per-epoch loss curve, and all parameters.
/// Writes are atomic (temp file + rename) and byte-stable.
void save_checkpoint(const std::filesystem::path& path, const Vc2sModel& model);

/// Throws ParseError on malformed JSON, a missing/unsupported version field,
/// wrong parameter count, or non-finite parameters; IoError if unreadable.
Vc2sModel load_checkpoint(const std::filesystem::path& path);

}  // namespace spo2cam::vc2s
