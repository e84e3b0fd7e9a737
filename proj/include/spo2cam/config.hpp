#pragma once

// Flat key=value run configuration: file grammar, typed binding with
// documented defaults, and echo for self-describing run directories.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spo2cam/evalproto.hpp"

namespace spo2cam {

/// One `key=value` pair per line; `#` starts a comment (full-line or
/// trailing); blank lines are skipped; keys and values are trimmed. Repeated
/// keys keep the last value. Throws ParseError naming the line on anything
/// else.
std::map<std::string, std::string> parse_config_text(const std::string& text);

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

/// Applies one `key=value` override (command-line flag form) onto a parsed
/// map. Throws ParseError when the argument has no '='.
void apply_override(std::map<std::string, std::string>& kv, const std::string& assignment);

// Every knob a run can carry. Defaults are the values documented here; the
// echo lists all of them so a run directory fully describes itself.
struct RunConfig {
    Method method = Method::vc2s;                      // method=vc2s|baseline
    CalibrationMode calibration = CalibrationMode::affine;  // calibration=auto|fixed|none
    double fixed_alpha = 1.0;                          // fixed_alpha=1.0
    WindowMode window_mode = WindowMode::first_n;      // window_mode=first_n|intelligent_k
    std::size_t window_n = 270;                        // window_n=270 (0 = no calibration)
    bool color_check = true;                           // color_check=on|off
    FramePolicy frame_policy = FramePolicy::uniform_1hz;  // frame_policy=...
    int roi_w = 100;                                   // roi_w=100
    int roi_h = 60;                                    // roi_h=60
    vc2s::TrainConfig train;  // epochs=15 learning_rate=0.001 batch_size=32
                              // weight_decay=0.01 adam_beta1=0.9 adam_beta2=0.999
                              // adam_eps=1e-8 train_seed=1
    std::uint64_t seed = 1;   // seed=1 (generator / run-level randomness)
    // Optional path-valued keys; commands may also take these as flags.
    std::string dataset;         // dataset=<root with one dir per session>
    std::string train_datasets;  // train_datasets=<comma-separated roots>
    std::string test_dataset;    // test_dataset=<root>
    std::string tissue_model;    // tissue_model=<fitted model JSON>
    std::string checkpoint;      // checkpoint=<network checkpoint JSON>
};

/// Binds a parsed map onto the defaults. Unknown keys are rejected by name;
/// malformed values name both key and value.
RunConfig run_config_from(const std::map<std::string, std::string>& kv);

RunConfig load_run_config(const std::filesystem::path& path);

/// Every field as `key=value`, defaults included — the run-directory echo.
/// Feeding these lines back through run_config_from reproduces the config.
std::vector<std::string> run_config_echo(const RunConfig& cfg);

/// The evaluation-layer view (tissue model attached separately by callers).
EvalConfig to_eval_config(const RunConfig& cfg);

}  // namespace spo2cam
