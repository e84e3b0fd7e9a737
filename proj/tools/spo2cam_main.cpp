// spo2cam: command-line surface over the library. Every command writes its
// outputs under a run directory holding args.txt (the exact invocation) and
// config.txt (the fully-resolved configuration echo), so a run directory is
// enough to reproduce itself. Failures print one machine-readable JSON
// object on stderr and exit nonzero. Input dataset directories are never
// written to.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spo2cam/config.hpp"
#include "spo2cam/errors.hpp"
#include "spo2cam/evalproto.hpp"
#include "spo2cam/preprocess.hpp"
#include "spo2cam/rng.hpp"
#include "spo2cam/session.hpp"
#include "spo2cam/svgplot.hpp"
#include "spo2cam/synth.hpp"
#include "spo2cam/tissue_optics.hpp"
#include "spo2cam/vc2s.hpp"

namespace fs = std::filesystem;
using namespace spo2cam;

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

// Common flags every command carries: config sources plus the run directory.
struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true) {
    cmd->add_option("--config", c.config_path, "key=value config file");
    cmd->add_option("--set", c.sets, "override one config key (key=value, repeatable)");
    auto* o = cmd->add_option("--out", c.out, "run directory for all outputs");
    if (needs_out) o->required();
}

RunConfig resolve_config(const Common& c) {
    std::map<std::string, std::string> kv;
    if (!c.config_path.empty()) kv = load_config_file(c.config_path);
    for (const std::string& s : c.sets) apply_override(kv, s);
    return run_config_from(kv);
}

// args.txt + config.txt make the run self-describing; rerunning the recorded
// invocation reproduces the outputs byte for byte.
fs::path open_run_dir(const Common& c, const RunConfig& cfg,
                      const std::vector<std::string>& argv) {
    const fs::path run(c.out);
    fs::create_directories(run);
    std::string args;
    for (const std::string& a : argv) args += a + "\n";
    write_text_atomic(run / "args.txt", args);
    std::string conf;
    for (const std::string& line : run_config_echo(cfg)) conf += line + "\n";
    write_text_atomic(run / "config.txt", conf);
    return run;
}

std::vector<std::string> split_roots(const std::string& joined) {
    std::vector<std::string> roots;
    std::string item;
    std::istringstream in(joined);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) roots.push_back(item.substr(b, e - b + 1));
    }
    if (roots.empty()) throw ConfigError("no dataset roots in '" + joined + "'");
    return roots;
}

std::vector<Session> load_roots(const std::string& joined) {
    std::vector<Session> all;
    for (const std::string& root : split_roots(joined)) {
        std::vector<Session> part = load_dataset(root);
        all.insert(all.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    }
    return all;
}

std::string require_value(const std::string& value, const std::string& what) {
    if (!value.empty()) return value;
    throw ConfigError(what + " is required (flag or config key)");
}

void save_m1_json(const fs::path& path, const M1Fit& fit) {
    nlohmann::json j;
    for (const auto& row : fit.m1.a) j["m1"].push_back(row);
    j["residual"] = fit.residual;
    write_text_atomic(path, j.dump(2) + "\n");
}

M1Fit load_m1_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    M1Fit fit;
    try {
        const auto& m = j.at("m1");
        if (!m.is_array() || m.size() != 3) throw ParseError(path.string() + ": m1 must be 3x4");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) fit.m1.a[r][c] = m.at(r).at(c).get<double>();
        fit.residual = j.value("residual", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return fit;
}

std::string series_csv(const PredictedSeries& s) {
    std::string csv = "t_s,truth,pred\n";
    for (std::size_t i = 0; i < s.t.size(); ++i)
        csv += fmt_g(s.t[i]) + "," + fmt_g(s.truth[i]) + "," + fmt_g(s.pred[i]) + "\n";
    return csv;
}

void print_aggregates(const Report& r) {
    const auto line = [](const char* name, const Aggregate& a) {
        std::printf("%-8s %9.4f +/- %.4f  (n=%zu)\n", name, a.mean, a.stderr_, a.n);
    };
    line("mae", r.mae);
    line("rmse", r.rmse);
    line("mape", r.mape);
    if (r.pearson.n > 0) line("pearson", r.pearson);
}

// ---- commands ----

int cmd_fit_color(const Common& common, const std::vector<std::string>& argv,
                  const std::string& checker_path, const std::string& session_dir) {
    const RunConfig cfg = resolve_config(common);
    const fs::path run = open_run_dir(common, cfg, argv);
    ColorCheckerSet checker;
    if (!session_dir.empty()) {
        const Session s = load_session(session_dir);
        if (!s.colorchecker)
            throw MissingColorcheck("session " + s.session_id + " has no colorchecker.csv");
        checker = *s.colorchecker;
    } else if (!checker_path.empty()) {
        checker = load_colorchecker(checker_path);
    } else {
        throw ConfigError("fit-color needs --checker or --session");
    }
    const M1Fit fit = fit_m1(checker);
    save_m1_json(run / "m1.json", fit);
    std::printf("wrote %s (residual %.6g)\n", (run / "m1.json").c_str(), fit.residual);
    return 0;
}

int cmd_fit_m2(const Common& common, const std::vector<std::string>& argv,
               const std::string& m1_path, int n) {
    const RunConfig cfg = resolve_config(common);
    const fs::path run = open_run_dir(common, cfg, argv);
    const M1Fit m1 = load_m1_json(m1_path);
    const auto samples = generate_m2_training_set(n, cfg.seed);
    const M2Fit m2 = fit_m2(samples);
    TissueModel model;
    model.m1 = m1.m1;
    model.m2 = m2.m2;
    model.fit_residual = m1.residual;
    model.r2 = m2.r2;
    save_tissue_model(run / "tissue.json", model);
    std::printf("wrote %s (r2 %.4f %.4f %.4f over %d samples)\n",
                (run / "tissue.json").c_str(), m2.r2[0], m2.r2[1], m2.r2[2], n);
    return 0;
}

int cmd_synth_generate(const Common& common, const std::vector<std::string>& argv,
                       int subjects, int sessions_per, double duration, double rate,
                       int frame_w, int frame_h, double gain, double noise) {
    const RunConfig cfg = resolve_config(common);
    const fs::path run = open_run_dir(common, cfg, argv);
    if (subjects < 1 || sessions_per < 1)
        throw ConfigError("subjects and sessions must be positive");
    if (subjects * sessions_per > 99)
        throw ConfigError("at most 99 sessions per generated dataset");

    const CameraModel cam = CameraModel::standard(gain, noise);
    const Rng base(cfg.seed);
    // Varied but fixed subject pools so subgroup bins are populated.
    static constexpr int kAges[6] = {21, 26, 33, 22, 28, 45};
    int made = 0;
    for (int i = 1; i <= subjects; ++i) {
        SubjectMetadata subject;
        char sid[16];
        std::snprintf(sid, sizeof sid, "p%02d", i);
        subject.subject_id = sid;
        subject.skin_tone = 1 + (i - 1) % 6;
        subject.age = kAges[(i - 1) % 6];
        subject.gender = (i % 2 == 1) ? "f" : "m";
        subject.covid_history = (i % 3 == 0);
        for (int j = 1; j <= sessions_per; ++j) {
            const int idx = (i - 1) * sessions_per + (j - 1);
            Rng r = base.derive(static_cast<std::uint64_t>(idx) + 1);
            Scenario sc;
            sc.duration_s = duration;
            sc.frame_rate_hz = rate;
            sc.frame_w = frame_w;
            sc.frame_h = frame_h;
            sc.subject = subject;
            sc.skin_tone_melanin = 0.05 + 0.05 * (subject.skin_tone - 1);
            sc.rng_seed = cfg.seed + static_cast<std::uint64_t>(idx) * 7919 + 1;
            // Desaturation dip and recovery, jittered per session.
            sc.spo2_knots = {{0.0, 98.0},
                             {0.35 * duration, 85.0 + r.uniform(-2.0, 2.0)},
                             {0.75 * duration, 96.0 + r.uniform(-1.0, 1.0)}};
            char name[16];
            std::snprintf(name, sizeof name, "s%02d", idx + 1);
            write_dataset(run / name, generate_session(sc, cam));
            ++made;
        }
    }
    std::printf("generated %d session(s) under %s\n", made, run.c_str());
    return 0;
}

int cmd_preprocess(const Common& common, const std::vector<std::string>& argv,
                   const std::string& dataset_flag) {
    RunConfig cfg = resolve_config(common);
    if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string root = require_value(cfg.dataset, "dataset");
    const EvalConfig ecfg = to_eval_config(cfg);
    nlohmann::json summary = nlohmann::json::array();
    for (const Session& s : load_dataset(root)) {
        const PreprocessedSession pre = preprocess_session(s, ecfg.pre);
        const fs::path sdir = run / "sessions" / s.session_id;
        fs::create_directories(sdir);
        write_roi_cache(sdir, pre, ecfg.pre);
        summary.push_back({{"session_id", s.session_id},
                           {"frames", pre.frame_indices.size()},
                           {"tracking_lost", pre.tracking_lost},
                           {"roi_w", ecfg.pre.roi_w},
                           {"roi_h", ecfg.pre.roi_h}});
        std::printf("%s: %zu frames%s\n", s.session_id.c_str(), pre.frame_indices.size(),
                    pre.tracking_lost ? " (tracking lost)" : "");
    }
    write_text_atomic(run / "summary.json", summary.dump(2) + "\n");
    return 0;
}

int cmd_predict_baseline(const Common& common, const std::vector<std::string>& argv,
                         const std::string& dataset_flag, const std::string& tissue_flag) {
    RunConfig cfg = resolve_config(common);
    if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
    if (!tissue_flag.empty()) cfg.tissue_model = tissue_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string root = require_value(cfg.dataset, "dataset");
    const std::string tissue = require_value(cfg.tissue_model, "tissue_model");
    EvalConfig ecfg = to_eval_config(cfg);
    ecfg.method = Method::baseline;
    ecfg.tissue = load_tissue_model(tissue);
    fs::create_directories(run / "series");
    for (const Session& s : load_dataset(root)) {
        const PredictedSeries ps = predict_session(s, ecfg);
        write_text_atomic(run / "series" / (s.session_id + ".csv"), series_csv(ps));
        std::printf("wrote series/%s.csv (%zu rows)\n", s.session_id.c_str(), ps.t.size());
    }
    return 0;
}

int cmd_train(const Common& common, const std::vector<std::string>& argv,
              const std::string& datasets_flag) {
    RunConfig cfg = resolve_config(common);
    if (!datasets_flag.empty()) cfg.train_datasets = datasets_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string joined = require_value(
        !cfg.train_datasets.empty() ? cfg.train_datasets : cfg.dataset, "train_datasets");
    const std::vector<Session> sessions = load_roots(joined);
    const EvalConfig ecfg = to_eval_config(cfg);
    const TrainingSet ts = build_training_set(sessions, ecfg);
    const vc2s::Vc2sModel model =
        vc2s::train_vc2s(ts.samples, ts.in_h, ts.in_w, cfg.train, cfg.color_check);
    vc2s::save_checkpoint(run / "checkpoint.json", model);

    std::string loss_csv = "epoch,loss\n";
    SvgSeries loss_series;
    loss_series.label = "training loss";
    for (std::size_t e = 0; e < model.epoch_loss.size(); ++e) {
        loss_csv += std::to_string(e + 1) + "," + fmt_g(model.epoch_loss[e]) + "\n";
        loss_series.x.push_back(static_cast<double>(e + 1));
        loss_series.y.push_back(model.epoch_loss[e]);
    }
    write_text_atomic(run / "loss.csv", loss_csv);
    save_svg(run / "loss.svg",
             render_line_chart("training loss", "epoch", "weighted mse", {loss_series}));
    std::printf("trained on %zu samples; final epoch loss %.6g; wrote %s\n",
                ts.samples.size(), model.epoch_loss.empty() ? 0.0 : model.epoch_loss.back(),
                (run / "checkpoint.json").c_str());
    return 0;
}

int cmd_predict(const Common& common, const std::vector<std::string>& argv,
                const std::string& dataset_flag, const std::string& checkpoint_flag) {
    RunConfig cfg = resolve_config(common);
    if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
    if (!checkpoint_flag.empty()) cfg.checkpoint = checkpoint_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string root = require_value(cfg.dataset, "dataset");
    const std::string ckpt = require_value(cfg.checkpoint, "checkpoint");
    const vc2s::Vc2sModel model = vc2s::load_checkpoint(ckpt);
    EvalConfig ecfg = to_eval_config(cfg);
    ecfg.method = Method::vc2s;
    // The checkpoint dictates the crop size it was trained on.
    ecfg.pre.roi_h = model.in_h;
    ecfg.pre.roi_w = model.in_w;
    fs::create_directories(run / "series");
    for (const Session& s : load_dataset(root)) {
        const PredictedSeries ps = predict_session(s, ecfg, model);
        write_text_atomic(run / "series" / (s.session_id + ".csv"), series_csv(ps));
        std::printf("wrote series/%s.csv (%zu rows)\n", s.session_id.c_str(), ps.t.size());
    }
    return 0;
}

int cmd_eval_loso(const Common& common, const std::vector<std::string>& argv,
                  const std::string& dataset_flag, const std::string& tissue_flag) {
    RunConfig cfg = resolve_config(common);
    if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
    if (!tissue_flag.empty()) cfg.tissue_model = tissue_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string root = require_value(cfg.dataset, "dataset");
    EvalConfig ecfg = to_eval_config(cfg);
    if (!cfg.tissue_model.empty()) ecfg.tissue = load_tissue_model(cfg.tissue_model);
    const Report report = run_loso(load_dataset(root), ecfg);
    save_report(run, report);
    print_aggregates(report);
    return 0;
}

int cmd_eval_cross(const Common& common, const std::vector<std::string>& argv,
                   const std::string& train_flag, const std::string& test_flag,
                   const std::string& tissue_flag) {
    RunConfig cfg = resolve_config(common);
    if (!train_flag.empty()) cfg.train_datasets = train_flag;
    if (!test_flag.empty()) cfg.test_dataset = test_flag;
    if (!tissue_flag.empty()) cfg.tissue_model = tissue_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string train_roots = require_value(cfg.train_datasets, "train_datasets");
    const std::string test_root = require_value(cfg.test_dataset, "test_dataset");
    EvalConfig ecfg = to_eval_config(cfg);
    if (!cfg.tissue_model.empty()) ecfg.tissue = load_tissue_model(cfg.tissue_model);
    const Report report = run_cross(load_roots(train_roots), load_dataset(test_root), ecfg);
    save_report(run, report);
    print_aggregates(report);
    return 0;
}

int cmd_subgroup(const Common& common, const std::vector<std::string>& argv,
                 const std::string& report_dir, const std::string& dataset_flag,
                 const std::string& field_name) {
    RunConfig cfg = resolve_config(common);
    if (!dataset_flag.empty()) cfg.dataset = dataset_flag;
    const fs::path run = open_run_dir(common, cfg, argv);
    const std::string root = require_value(cfg.dataset, "dataset");
    const Report report = load_report(report_dir);
    std::vector<SubjectMetadata> metadata;
    std::set<std::string> seen;
    for (const Session& s : load_dataset(root))
        if (seen.insert(s.metadata.subject_id).second) metadata.push_back(s.metadata);
    const SubgroupField field = parse_subgroup_field(field_name);
    const std::vector<SubgroupRow> rows = subgroup_report(report, metadata, field);

    std::string csv = "bin,n,mae,rmse,mape,pearson\n";
    for (const SubgroupRow& r : rows) {
        csv += r.bin + "," + std::to_string(r.n) + "," + fmt_g(r.mae.mean) + "," +
               fmt_g(r.rmse.mean) + "," + fmt_g(r.mape.mean) + ",";
        if (r.pearson.n > 0) csv += fmt_g(r.pearson.mean);
        csv += "\n";
        std::printf("%-8s n=%zu mae=%.4f rmse=%.4f mape=%.4f\n", r.bin.c_str(), r.n,
                    r.mae.mean, r.rmse.mean, r.mape.mean);
    }
    write_text_atomic(run / ("subgroup_" + subgroup_field_name(field) + ".csv"), csv);
    return 0;
}

// Prediction-vs-truth charts from series CSVs (the predict commands' output).
int cmd_plot(const Common& common, const std::vector<std::string>& argv,
             const std::string& series_arg) {
    const RunConfig cfg = resolve_config(common);
    const fs::path run = open_run_dir(common, cfg, argv);
    std::vector<fs::path> files;
    const fs::path src(series_arg);
    if (fs::is_directory(src)) {
        for (const auto& entry : fs::directory_iterator(src))
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
    } else if (fs::exists(src)) {
        files.push_back(src);
    } else {
        throw IoError("no such series file or directory: " + src.string());
    }
    if (files.empty()) throw IoError("no .csv series under " + src.string());

    for (const fs::path& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError("cannot open " + file.string());
        std::string line;
        if (!std::getline(in, line) || line != "t_s,truth,pred")
            throw ParseError(file.string() + ": expected header t_s,truth,pred");
        SvgSeries truth{"truth", {}, {}, "#1f77b4"};
        SvgSeries pred{"predicted", {}, {}, "#d62728"};
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            double t, y_truth, y_pred;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &y_truth, &y_pred) != 3)
                throw ParseError(file.string() + " line " + std::to_string(line_no) +
                                 ": expected t,truth,pred");
            truth.x.push_back(t);
            truth.y.push_back(y_truth);
            pred.x.push_back(t);
            pred.y.push_back(y_pred);
        }
        const std::string name = file.stem().string();
        save_svg(run / (name + ".svg"),
                 render_line_chart(name, "time (s)", "SpO2 (%)", {truth, pred}));
        std::printf("wrote %s.svg\n", name.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SpO2 estimation from facial-video frames"};
    app.require_subcommand(1);

    Common c_fit_color, c_fit_m2, c_synth, c_pre, c_pb, c_train, c_predict, c_loso, c_cross,
        c_sub, c_plot;
    std::string checker_path, session_dir, m1_path, dataset, tissue, datasets, checkpoint,
        test_dataset, report_dir, field, series_arg;
    int m2_n = 300, subjects = 3, sessions_per = 1, frame_w = 20, frame_h = 20;
    double duration = 560.0, rate = 1.0, gain = 250.0, noise = 0.0;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;

    auto* fit_color = app.add_subcommand("fit-color", "fit the camera-to-XYZ map from a checker reading");
    add_common(fit_color, c_fit_color);
    fit_color->add_option("--checker", checker_path, "colorchecker CSV");
    fit_color->add_option("--session", session_dir, "session dir providing the reading");

    auto* fit_m2_cmd = app.add_subcommand("fit-m2", "fit the XYZ-to-chromophore map on synthetic samples");
    add_common(fit_m2_cmd, c_fit_m2);
    fit_m2_cmd->add_option("--m1", m1_path, "m1.json from fit-color")->required();
    fit_m2_cmd->add_option("--n", m2_n, "training sample count");
    fit_m2_cmd->add_option("--seed", seed_flag, "sampling seed (shorthand for --set seed=)")
        ->each([&](const std::string&) { seed_set = true; });

    auto* synth = app.add_subcommand("synth-generate", "write a synthetic labeled dataset");
    add_common(synth, c_synth);
    synth->add_option("--subjects", subjects, "distinct subjects");
    synth->add_option("--sessions", sessions_per, "sessions per subject");
    synth->add_option("--duration", duration, "seconds per session");
    synth->add_option("--rate", rate, "frames per second");
    synth->add_option("--frame-w", frame_w, "frame width");
    synth->add_option("--frame-h", frame_h, "frame height");
    synth->add_option("--gain", gain, "camera gain");
    synth->add_option("--noise", noise, "camera noise sigma");
    synth->add_option("--seed", seed_flag, "generator seed (shorthand for --set seed=)")
        ->each([&](const std::string&) { seed_set = true; });

    auto* pre = app.add_subcommand("preprocess", "select frames, track the ROI, cache crops");
    add_common(pre, c_pre);
    pre->add_option("--dataset", dataset, "dataset root");

    auto* pb = app.add_subcommand("predict-baseline", "tissue-model prediction per session");
    add_common(pb, c_pb);
    pb->add_option("--dataset", dataset, "dataset root");
    pb->add_option("--tissue", tissue, "tissue model JSON");

    auto* train = app.add_subcommand("train", "train the network on one or more datasets");
    add_common(train, c_train);
    train->add_option("--datasets", datasets, "comma-separated dataset roots");

    auto* predict = app.add_subcommand("predict", "network prediction per session");
    add_common(predict, c_predict);
    predict->add_option("--dataset", dataset, "dataset root");
    predict->add_option("--checkpoint", checkpoint, "checkpoint JSON");

    auto* loso = app.add_subcommand("eval-loso", "leave-one-subject-out evaluation");
    add_common(loso, c_loso);
    loso->add_option("--dataset", dataset, "dataset root");
    loso->add_option("--tissue", tissue, "tissue model JSON (required for baseline)");

    auto* cross = app.add_subcommand("eval-cross", "train on some datasets, test on another");
    add_common(cross, c_cross);
    cross->add_option("--train-datasets", datasets, "comma-separated training roots");
    cross->add_option("--test-dataset", test_dataset, "held-out dataset root");
    cross->add_option("--tissue", tissue, "tissue model JSON (required for baseline)");

    auto* sub = app.add_subcommand("subgroup", "aggregate a saved report by a metadata field");
    add_common(sub, c_sub);
    sub->add_option("--report", report_dir, "run dir holding report.json")->required();
    sub->add_option("--dataset", dataset, "dataset root providing subject metadata");
    sub->add_option("--field", field, "skin_tone | age | gender | covid")->required();

    auto* plot = app.add_subcommand("plot", "render series CSVs to SVG charts");
    add_common(plot, c_plot);
    plot->add_option("--series", series_arg, "series CSV file or directory of them")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::json j{{"error", "Usage"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return 2;
    }

    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc));
    args.emplace_back("spo2cam");
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

    try {
        if (seed_set) {
            Common& c = *fit_m2_cmd ? c_fit_m2 : c_synth;
            c.sets.push_back("seed=" + std::to_string(seed_flag));
        }
        if (*fit_color) return cmd_fit_color(c_fit_color, args, checker_path, session_dir);
        if (*fit_m2_cmd) return cmd_fit_m2(c_fit_m2, args, m1_path, m2_n);
        if (*synth)
            return cmd_synth_generate(c_synth, args, subjects, sessions_per, duration, rate,
                                      frame_w, frame_h, gain, noise);
        if (*pre) return cmd_preprocess(c_pre, args, dataset);
        if (*pb) return cmd_predict_baseline(c_pb, args, dataset, tissue);
        if (*train) return cmd_train(c_train, args, datasets);
        if (*predict) return cmd_predict(c_predict, args, dataset, checkpoint);
        if (*loso) return cmd_eval_loso(c_loso, args, dataset, tissue);
        if (*cross) return cmd_eval_cross(c_cross, args, datasets, test_dataset, tissue);
        if (*sub) return cmd_subgroup(c_sub, args, report_dir, dataset, field);
        if (*plot) return cmd_plot(c_plot, args, series_arg);
    } catch (const Error& e) {
        nlohmann::json j{{"error", e.code()}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json j{{"error", "Internal"}, {"message", e.what()}};
        std::cerr << j.dump() << "\n";
        return 1;
    }
    return 0;
}
