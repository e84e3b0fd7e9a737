#pragma once

// Evaluation protocols: leave-one-subject-out and cross-dataset runs over
// session collections, per-video calibration, aggregate reporting, subgroup
// breakdowns, and percent-change comparison tables.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spo2cam/calibration.hpp"
#include "spo2cam/metrics.hpp"
#include "spo2cam/preprocess.hpp"
#include "spo2cam/session.hpp"
#include "spo2cam/tissue_optics.hpp"
#include "spo2cam/vc2s.hpp"

namespace spo2cam {

enum class Method { baseline, vc2s };
enum class CalibrationMode { affine, fixed_alpha, none };

Method parse_method(const std::string& name);  // ConfigError on unknown
std::string method_name(Method method);
CalibrationMode parse_calibration_mode(const std::string& name);
std::string calibration_mode_name(CalibrationMode mode);

struct EvalConfig {
    Method method = Method::vc2s;
    CalibrationMode calibration = CalibrationMode::affine;
    double fixed_alpha = 1.0;  // slope used by CalibrationMode::fixed_alpha
    WindowMode window_mode = WindowMode::first_n;
    std::size_t window_n = 270;  // calibration frames; 0 behaves like mode none
    bool color_check = true;
    PreprocessConfig pre;  // one ROI size for every dataset in a run
    vc2s::TrainConfig train;
    // Fitted color+chromophore model, required by Method::baseline.
    std::optional<TissueModel> tissue;
};

struct PerVideo {
    std::string session_id;
    std::string subject_id;
    std::string dataset_id;
    ErrorStats stats;
    CalibrationParams calibration;
};

struct Aggregate {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample standard deviation (ddof 1) / sqrt(n)
    std::size_t n = 0;
};

/// Mean and standard error of one metric over per-video rows. Summation runs
/// in row order, so recomputing from a report's (sorted) rows is bit-exact.
Aggregate aggregate_metric(const std::vector<double>& values);

struct Report {
    std::vector<PerVideo> per_video;  // sorted by session_id
    Aggregate mae, rmse, mape;
    Aggregate pearson;  // over the rows where it is defined
    std::vector<std::string> config_echo;  // flat key=value lines
};

/// Sorts rows by session id and fills the aggregates.
Report make_report(std::vector<PerVideo> rows, std::vector<std::string> config_echo);

std::vector<std::string> eval_config_echo(const EvalConfig& cfg);

/// Fold layout without running anything: subject id -> its held-out session
/// ids, sorted. All of a subject's videos leave together.
std::vector<std::pair<std::string, std::vector<std::string>>> loso_folds(
    const std::vector<Session>& sessions);

/// Leave-one-subject-out over one dataset. Per fold the method is trained on
/// the remaining subjects (the baseline's tissue model is fitted upstream and
/// passed in cfg, so its folds differ only in the test split) and every
/// held-out video is predicted, smoothed, calibrated per cfg, and scored.
/// Folds run in subject-id order; fold i trains with seed cfg.train.rng_seed
/// + i. Throws SingleSubject with fewer than two subjects, MissingColorcheck
/// when the color branch is active and neither a session-level nor a
/// dataset-level checker reading exists.
Report run_loso(const std::vector<Session>& sessions, const EvalConfig& cfg);

/// Train on the union of the training sessions, evaluate every test session.
/// Training and test dataset ids must be disjoint (DatasetOverlap). All
/// sessions share cfg.pre's ROI size, which is what makes mixed datasets
/// comparable.
Report run_cross(const std::vector<Session>& train, const std::vector<Session>& test,
                 const EvalConfig& cfg);

/// Everything the network trains on: one sample per selected frame of every
/// session. Checker tensors come from the session's own reading, from the
/// dataset-level substitute, or are zeroed when the color branch is off.
struct TrainingSet {
    std::vector<vc2s::TrainSample> samples;
    int in_h = 0, in_w = 0;
};

TrainingSet build_training_set(const std::vector<Session>& sessions, const EvalConfig& cfg);

/// One session's uncalibrated prediction: selected-frame timestamps, the
/// normalized truth labels, and the method output after zero-phase
/// smoothing. Method::baseline reads cfg.tissue; Method::vc2s reads `model`.
struct PredictedSeries {
    std::string session_id;
    std::vector<double> t, truth, pred;
};

PredictedSeries predict_session(const Session& session, const EvalConfig& cfg,
                                const std::optional<vc2s::Vc2sModel>& model = std::nullopt);

enum class SubgroupField { skin_tone, age, gender, covid };

SubgroupField parse_subgroup_field(const std::string& name);
std::string subgroup_field_name(SubgroupField field);

struct SubgroupRow {
    std::string bin;  // "1-2", "24-29", "f", "yes", ...
    std::size_t n = 0;  // videos in the bin
    Aggregate mae, rmse, mape, pearson;
};

/// Groups a report's rows by a metadata field. Bins: skin tone 1-2 / 3-4 /
/// 5-6; age 18-23 / 24-29 / 30+ (ages below 18 land in the first bin);
/// gender by distinct value; covid yes / no. Only non-empty bins are emitted,
/// in canonical order. Throws MissingMetadata listing every session whose
/// subject has no metadata row.
std::vector<SubgroupRow> subgroup_report(const Report& report,
                                         const std::vector<SubjectMetadata>& metadata,
                                         SubgroupField field);

/// Percent change per aggregate metric: 100 * (ours - baseline) / baseline.
/// Negative numbers mean improvement. Uses unrounded aggregate means. Both
/// reports must cover the same session ids (LengthMismatch).
struct DeltaTable {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;
};

DeltaTable delta(const Report& ours, const Report& baseline);

/// report.json plus per_video.csv
/// (`session_id,mae,rmse,mape,pearson,lag_s,alpha,beta`) and aggregate.csv
/// (`metric,mean,stderr,n`). All writes are atomic.
void save_report(const std::filesystem::path& dir, const Report& report);

std::string per_video_csv(const Report& report);
std::string aggregate_csv(const Report& report);

Report load_report(const std::filesystem::path& dir);  // reads report.json

}  // namespace spo2cam
