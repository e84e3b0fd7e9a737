#include "spo2cam/evalproto.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spo2cam/errors.hpp"
#include "spo2cam/image.hpp"

namespace spo2cam {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// One session, preprocessed and ready for either method.
struct Prepared {
    const Session* src = nullptr;
    PreprocessedSession pre;
    std::vector<double> t;  // timestamps of the selected frames
    double rate_hz = 0.0;   // effective rate of the selected series
    std::optional<std::vector<float>> checker;  // session or dataset-level reading
    std::vector<RgbTriple> roi_means;
};

std::vector<Prepared> prepare_all(const std::vector<Session>& sessions, const EvalConfig& cfg) {
    std::vector<const Session*> order;
    order.reserve(sessions.size());
    for (const Session& s : sessions) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const Session* a, const Session* b) { return a->session_id < b->session_id; });

    // Dataset-level checker substitute: the first reading per dataset in
    // session-id order stands in for sessions recorded without one.
    std::map<std::string, std::vector<float>> dataset_ref;
    for (const Session* s : order)
        if (s->colorchecker && !dataset_ref.count(s->dataset_id))
            dataset_ref.emplace(s->dataset_id, vc2s::checker_tensor(*s->colorchecker));

    std::vector<Prepared> out;
    out.reserve(order.size());
    for (const Session* s : order) {
        Prepared p;
        p.src = s;
        p.pre = preprocess_or_load(*s, cfg.pre);
        p.t.reserve(p.pre.frame_indices.size());
        for (std::size_t idx : p.pre.frame_indices)
            p.t.push_back(static_cast<double>(idx) / s->frame_rate_hz);
        p.rate_hz = static_cast<double>(p.t.size() - 1) / (p.t.back() - p.t.front());
        if (s->colorchecker)
            p.checker = vc2s::checker_tensor(*s->colorchecker);
        else if (auto it = dataset_ref.find(s->dataset_id); it != dataset_ref.end())
            p.checker = it->second;
        p.roi_means.reserve(p.pre.rois.size());
        for (const Image& roi : p.pre.rois) p.roi_means.push_back(mean_rgb(roi));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<double> baseline_raw(const Prepared& p, const EvalConfig& cfg) {
    const TissueModel& tm = *cfg.tissue;
    M1Matrix m1 = tm.m1;
    // with the color check enabled, each video's own reading refits the
    // camera-to-XYZ map; otherwise the reference fit is used everywhere
    if (cfg.color_check && p.src->colorchecker) m1 = fit_m1(*p.src->colorchecker).m1;
    return estimate_sto2_series(p.t, p.roi_means, m1, tm.m2).v;
}

std::vector<vc2s::TrainSample> make_train_set(const std::vector<const Prepared*>& train,
                                              const EvalConfig& cfg) {
    std::vector<vc2s::TrainSample> set;
    for (const Prepared* p : train) {
        std::vector<float> ck;
        if (cfg.color_check) {
            if (!p->checker)
                throw MissingColorcheck("session " + p->src->session_id +
                                        " has no color-check reading and dataset " +
                                        p->src->dataset_id + " has no substitute");
            ck = *p->checker;
        } else {
            ck = vc2s::zero_checker_tensor();
        }
        for (std::size_t i = 0; i < p->pre.rois.size(); ++i) {
            vc2s::TrainSample s;
            s.roi = vc2s::roi_tensor(p->pre.rois[i]);
            s.checker = ck;
            s.label = static_cast<float>(p->pre.labels[i]);
            set.push_back(std::move(s));
        }
    }
    return set;
}

bool wants_no_calibration(const EvalConfig& cfg) {
    return cfg.calibration == CalibrationMode::none || cfg.window_n == 0;
}

PerVideo score_video(const Prepared& p, const std::vector<double>& smooth, const EvalConfig& cfg,
                     const std::optional<std::pair<double, double>>& train_means) {
    const std::vector<double>& truth = p.pre.labels;
    CalibrationParams params;
    std::vector<double> calibrated;
    if (wants_no_calibration(cfg)) {
        const auto [label_mean, pred_mean] = *train_means;
        params.alpha = 1.0;
        params.beta = label_mean - pred_mean;
        params.fallback_mean = clamp_spo2(label_mean);
        calibrated = no_calibration(smooth, label_mean, pred_mean);
    } else {
        const CalibrationWindow window = cfg.window_mode == WindowMode::first_n
                                             ? first_n_window(cfg.window_n, truth.size())
                                             : intelligent_sample(truth, cfg.window_n);
        params = cfg.calibration == CalibrationMode::fixed_alpha
                     ? fit_beta_fixed_alpha(smooth, truth, window, cfg.fixed_alpha)
                     : fit_affine(smooth, truth, window);
        calibrated = apply_calibration(smooth, params);
    }
    PerVideo row;
    row.session_id = p.src->session_id;
    row.subject_id = p.src->metadata.subject_id;
    row.dataset_id = p.src->dataset_id;
    row.stats = session_stats(calibrated, truth, 10.0, p.rate_hz);
    row.calibration = std::move(params);
    return row;
}

// Population label/prediction means over training sessions, for the
// no-calibration shift.
std::pair<double, double> population_means(
    const std::vector<const Prepared*>& train,
    const std::function<std::vector<double>(const Prepared&)>& predict_smooth) {
    double label_sum = 0.0, pred_sum = 0.0;
    std::size_t n = 0;
    for (const Prepared* p : train) {
        const std::vector<double> smooth = predict_smooth(*p);
        for (std::size_t i = 0; i < smooth.size(); ++i) {
            label_sum += p->pre.labels[i];
            pred_sum += smooth[i];
            ++n;
        }
    }
    if (n == 0) throw LengthMismatch("no training frames to derive the no-calibration shift");
    return {label_sum / static_cast<double>(n), pred_sum / static_cast<double>(n)};
}

void require_method_inputs(const EvalConfig& cfg) {
    if (cfg.method == Method::baseline && !cfg.tissue)
        throw ConfigError("the baseline method requires a fitted tissue model");
}

nlohmann::json aggregate_json(const Aggregate& a) {
    return {{"mean", a.mean}, {"stderr", a.stderr_}, {"n", a.n}};
}

Aggregate aggregate_from_json(const nlohmann::json& j) {
    Aggregate a;
    a.mean = j.at("mean").get<double>();
    a.stderr_ = j.at("stderr").get<double>();
    a.n = j.at("n").get<std::size_t>();
    return a;
}

}  // namespace

Method parse_method(const std::string& name) {
    if (name == "baseline") return Method::baseline;
    if (name == "vc2s") return Method::vc2s;
    throw ConfigError("unknown method '" + name + "' (expected baseline or vc2s)");
}

std::string method_name(Method method) {
    return method == Method::baseline ? "baseline" : "vc2s";
}

CalibrationMode parse_calibration_mode(const std::string& name) {
    if (name == "affine" || name == "auto") return CalibrationMode::affine;
    if (name == "fixed") return CalibrationMode::fixed_alpha;
    if (name == "none") return CalibrationMode::none;
    throw ConfigError("unknown calibration mode '" + name + "' (expected auto, fixed, or none)");
}

std::string calibration_mode_name(CalibrationMode mode) {
    switch (mode) {
        case CalibrationMode::affine: return "auto";
        case CalibrationMode::fixed_alpha: return "fixed";
        default: return "none";
    }
}

Aggregate aggregate_metric(const std::vector<double>& values) {
    Aggregate a;
    a.n = values.size();
    if (values.empty()) return a;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
                    std::sqrt(static_cast<double>(values.size()));
    }
    return a;
}

Report make_report(std::vector<PerVideo> rows, std::vector<std::string> config_echo) {
    std::sort(rows.begin(), rows.end(),
              [](const PerVideo& a, const PerVideo& b) { return a.session_id < b.session_id; });
    Report r;
    r.per_video = std::move(rows);
    r.config_echo = std::move(config_echo);
    std::vector<double> mae, rmse, mape, pearson;
    for (const PerVideo& row : r.per_video) {
        mae.push_back(row.stats.mae);
        rmse.push_back(row.stats.rmse);
        mape.push_back(row.stats.mape);
        if (row.stats.pearson) pearson.push_back(*row.stats.pearson);
    }
    r.mae = aggregate_metric(mae);
    r.rmse = aggregate_metric(rmse);
    r.mape = aggregate_metric(mape);
    r.pearson = aggregate_metric(pearson);
    return r;
}

std::vector<std::string> eval_config_echo(const EvalConfig& cfg) {
    std::vector<std::string> lines;
    lines.push_back("method=" + method_name(cfg.method));
    lines.push_back("calibration=" + calibration_mode_name(cfg.calibration));
    if (cfg.calibration == CalibrationMode::fixed_alpha)
        lines.push_back("fixed_alpha=" + fmt_g(cfg.fixed_alpha));
    lines.push_back(std::string("window_mode=") +
                    (cfg.window_mode == WindowMode::first_n ? "first_n" : "intelligent_k"));
    lines.push_back("window_n=" + std::to_string(cfg.window_n));
    lines.push_back(std::string("color_check=") + (cfg.color_check ? "on" : "off"));
    lines.push_back("frame_policy=" + frame_policy_name(cfg.pre.policy));
    lines.push_back("roi_w=" + std::to_string(cfg.pre.roi_w));
    lines.push_back("roi_h=" + std::to_string(cfg.pre.roi_h));
    lines.push_back("epochs=" + std::to_string(cfg.train.epochs));
    lines.push_back("learning_rate=" + fmt_g(cfg.train.learning_rate));
    lines.push_back("batch_size=" + std::to_string(cfg.train.batch_size));
    lines.push_back("weight_decay=" + fmt_g(cfg.train.weight_decay));
    lines.push_back("seed=" + std::to_string(cfg.train.rng_seed));
    return lines;
}

std::vector<std::pair<std::string, std::vector<std::string>>> loso_folds(
    const std::vector<Session>& sessions) {
    std::map<std::string, std::vector<std::string>> by_subject;
    for (const Session& s : sessions)
        by_subject[s.metadata.subject_id].push_back(s.session_id);
    std::vector<std::pair<std::string, std::vector<std::string>>> folds;
    for (auto& [subject, ids] : by_subject) {
        std::sort(ids.begin(), ids.end());
        folds.emplace_back(subject, std::move(ids));
    }
    return folds;
}

Report run_loso(const std::vector<Session>& sessions, const EvalConfig& cfg) {
    if (sessions.empty()) throw LengthMismatch("run_loso: no sessions");
    require_method_inputs(cfg);
    std::set<std::string> subjects;
    for (const Session& s : sessions) subjects.insert(s.metadata.subject_id);
    if (subjects.size() < 2)
        throw SingleSubject("run_loso: " + std::to_string(subjects.size()) +
                            " distinct subject(s); leave-one-subject-out needs at least 2");

    const std::vector<Prepared> prepared = prepare_all(sessions, cfg);
    std::vector<PerVideo> rows;
    int fold = 0;
    for (const std::string& subject : subjects) {
        std::vector<const Prepared*> train, test;
        for (const Prepared& p : prepared)
            (p.src->metadata.subject_id == subject ? test : train).push_back(&p);

        std::optional<vc2s::Vc2sModel> model;
        if (cfg.method == Method::vc2s) {
            vc2s::TrainConfig fold_cfg = cfg.train;
            fold_cfg.rng_seed = cfg.train.rng_seed + static_cast<std::uint64_t>(fold);
            model = vc2s::train_vc2s(make_train_set(train, cfg), cfg.pre.roi_h, cfg.pre.roi_w,
                                     fold_cfg, cfg.color_check);
        }
        const std::function<std::vector<double>(const Prepared&)> predict_smooth =
            [&](const Prepared& p) {
                const std::vector<double> raw = cfg.method == Method::baseline
                                                    ? baseline_raw(p, cfg)
                                                    : vc2s::predict_series(*model, p.pre, p.checker);
                return vc2s::lowpass_series(raw, p.rate_hz);
            };
        std::optional<std::pair<double, double>> means;
        if (wants_no_calibration(cfg)) means = population_means(train, predict_smooth);
        for (const Prepared* p : test) rows.push_back(score_video(*p, predict_smooth(*p), cfg, means));
        ++fold;
    }
    return make_report(std::move(rows), eval_config_echo(cfg));
}

Report run_cross(const std::vector<Session>& train, const std::vector<Session>& test,
                 const EvalConfig& cfg) {
    if (train.empty() || test.empty()) throw LengthMismatch("run_cross: empty session list");
    require_method_inputs(cfg);
    std::set<std::string> train_ids, test_ids;
    for (const Session& s : train) train_ids.insert(s.dataset_id);
    for (const Session& s : test) test_ids.insert(s.dataset_id);
    std::vector<std::string> overlap;
    std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(), test_ids.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
        std::string msg = "run_cross: dataset id(s) on both sides:";
        for (const std::string& id : overlap) msg += " " + id;
        throw DatasetOverlap(msg);
    }

    const std::vector<Prepared> train_prep = prepare_all(train, cfg);
    const std::vector<Prepared> test_prep = prepare_all(test, cfg);
    std::vector<const Prepared*> train_ptrs;
    for (const Prepared& p : train_prep) train_ptrs.push_back(&p);

    std::optional<vc2s::Vc2sModel> model;
    if (cfg.method == Method::vc2s)
        model = vc2s::train_vc2s(make_train_set(train_ptrs, cfg), cfg.pre.roi_h, cfg.pre.roi_w,
                                 cfg.train, cfg.color_check);
    const std::function<std::vector<double>(const Prepared&)> predict_smooth =
        [&](const Prepared& p) {
            const std::vector<double> raw = cfg.method == Method::baseline
                                                ? baseline_raw(p, cfg)
                                                : vc2s::predict_series(*model, p.pre, p.checker);
            return vc2s::lowpass_series(raw, p.rate_hz);
        };
    std::optional<std::pair<double, double>> means;
    if (wants_no_calibration(cfg)) means = population_means(train_ptrs, predict_smooth);
    std::vector<PerVideo> rows;
    for (const Prepared& p : test_prep) rows.push_back(score_video(p, predict_smooth(p), cfg, means));
    return make_report(std::move(rows), eval_config_echo(cfg));
}

TrainingSet build_training_set(const std::vector<Session>& sessions, const EvalConfig& cfg) {
    if (sessions.empty()) throw LengthMismatch("build_training_set: no sessions");
    const std::vector<Prepared> prepared = prepare_all(sessions, cfg);
    std::vector<const Prepared*> ptrs;
    ptrs.reserve(prepared.size());
    for (const Prepared& p : prepared) ptrs.push_back(&p);
    TrainingSet out;
    out.samples = make_train_set(ptrs, cfg);
    out.in_h = cfg.pre.roi_h;
    out.in_w = cfg.pre.roi_w;
    return out;
}

PredictedSeries predict_session(const Session& session, const EvalConfig& cfg,
                                const std::optional<vc2s::Vc2sModel>& model) {
    if (cfg.method == Method::baseline)
        require_method_inputs(cfg);
    else if (!model)
        throw ConfigError("the network method requires a trained model");
    const std::vector<Prepared> prepared = prepare_all({session}, cfg);
    const Prepared& p = prepared.front();
    const std::vector<double> raw = cfg.method == Method::baseline
                                        ? baseline_raw(p, cfg)
                                        : vc2s::predict_series(*model, p.pre, p.checker);
    PredictedSeries out;
    out.session_id = session.session_id;
    out.t = p.t;
    out.truth = p.pre.labels;
    out.pred = vc2s::lowpass_series(raw, p.rate_hz);
    return out;
}

SubgroupField parse_subgroup_field(const std::string& name) {
    if (name == "skin_tone" || name == "skin") return SubgroupField::skin_tone;
    if (name == "age") return SubgroupField::age;
    if (name == "gender") return SubgroupField::gender;
    if (name == "covid") return SubgroupField::covid;
    throw ConfigError("unknown subgroup field '" + name +
                      "' (expected skin_tone, age, gender, or covid)");
}

std::string subgroup_field_name(SubgroupField field) {
    switch (field) {
        case SubgroupField::skin_tone: return "skin_tone";
        case SubgroupField::age: return "age";
        case SubgroupField::gender: return "gender";
        default: return "covid";
    }
}

std::vector<SubgroupRow> subgroup_report(const Report& report,
                                         const std::vector<SubjectMetadata>& metadata,
                                         SubgroupField field) {
    std::map<std::string, const SubjectMetadata*> table;
    for (const SubjectMetadata& m : metadata) table[m.subject_id] = &m;

    std::string missing;
    for (const PerVideo& row : report.per_video)
        if (!table.count(row.subject_id)) missing += (missing.empty() ? "" : ", ") + row.session_id;
    if (!missing.empty())
        throw MissingMetadata("no subject metadata for session(s): " + missing);

    auto bin_of = [&](const SubjectMetadata& m) -> std::string {
        switch (field) {
            case SubgroupField::skin_tone:
                if (m.skin_tone < 1 || m.skin_tone > 6)
                    throw ConfigError("subject " + m.subject_id + " has skin tone " +
                                      std::to_string(m.skin_tone) + " outside 1-6");
                return m.skin_tone <= 2 ? "1-2" : m.skin_tone <= 4 ? "3-4" : "5-6";
            case SubgroupField::age:
                return m.age <= 23 ? "18-23" : m.age <= 29 ? "24-29" : "30+";
            case SubgroupField::gender:
                return m.gender;
            default:
                return m.covid_history ? "yes" : "no";
        }
    };

    std::map<std::string, std::vector<const PerVideo*>> groups;
    for (const PerVideo& row : report.per_video)
        groups[bin_of(*table.at(row.subject_id))].push_back(&row);

    std::vector<std::string> order;
    switch (field) {
        case SubgroupField::skin_tone: order = {"1-2", "3-4", "5-6"}; break;
        case SubgroupField::age: order = {"18-23", "24-29", "30+"}; break;
        case SubgroupField::covid: order = {"yes", "no"}; break;
        case SubgroupField::gender:
            for (const auto& [bin, rows] : groups) order.push_back(bin);  // map: sorted
            break;
    }

    std::vector<SubgroupRow> out;
    for (const std::string& bin : order) {
        const auto it = groups.find(bin);
        if (it == groups.end()) continue;
        SubgroupRow sr;
        sr.bin = bin;
        sr.n = it->second.size();
        std::vector<double> mae, rmse, mape, pearson;
        for (const PerVideo* row : it->second) {
            mae.push_back(row->stats.mae);
            rmse.push_back(row->stats.rmse);
            mape.push_back(row->stats.mape);
            if (row->stats.pearson) pearson.push_back(*row->stats.pearson);
        }
        sr.mae = aggregate_metric(mae);
        sr.rmse = aggregate_metric(rmse);
        sr.mape = aggregate_metric(mape);
        sr.pearson = aggregate_metric(pearson);
        out.push_back(std::move(sr));
    }
    return out;
}

DeltaTable delta(const Report& ours, const Report& baseline) {
    if (ours.per_video.size() != baseline.per_video.size())
        throw LengthMismatch("delta: reports cover " + std::to_string(ours.per_video.size()) +
                             " vs " + std::to_string(baseline.per_video.size()) + " videos");
    for (std::size_t i = 0; i < ours.per_video.size(); ++i)
        if (ours.per_video[i].session_id != baseline.per_video[i].session_id)
            throw LengthMismatch("delta: session sets differ at row " + std::to_string(i) + ": " +
                                 ours.per_video[i].session_id + " vs " +
                                 baseline.per_video[i].session_id);
    DeltaTable d;
    d.mae = 100.0 * (ours.mae.mean - baseline.mae.mean) / baseline.mae.mean;
    d.rmse = 100.0 * (ours.rmse.mean - baseline.rmse.mean) / baseline.rmse.mean;
    d.mape = 100.0 * (ours.mape.mean - baseline.mape.mean) / baseline.mape.mean;
    return d;
}

std::string per_video_csv(const Report& report) {
    std::string csv = "session_id,mae,rmse,mape,pearson,lag_s,alpha,beta\n";
    for (const PerVideo& row : report.per_video) {
        csv += row.session_id;
        csv += "," + fmt_g(row.stats.mae);
        csv += "," + fmt_g(row.stats.rmse);
        csv += "," + fmt_g(row.stats.mape);
        csv += ",";
        if (row.stats.pearson) csv += fmt_g(*row.stats.pearson);
        csv += "," + fmt_g(row.stats.lag_s);
        csv += "," + fmt_g(row.calibration.alpha);
        csv += "," + fmt_g(row.calibration.beta);
        csv += "\n";
    }
    return csv;
}

std::string aggregate_csv(const Report& report) {
    std::string csv = "metric,mean,stderr,n\n";
    const auto line = [&](const char* name, const Aggregate& a) {
        csv += std::string(name) + "," + fmt_g(a.mean) + "," + fmt_g(a.stderr_) + "," +
               std::to_string(a.n) + "\n";
    };
    line("mae", report.mae);
    line("rmse", report.rmse);
    line("mape", report.mape);
    line("pearson", report.pearson);
    return csv;
}

void save_report(const std::filesystem::path& dir, const Report& report) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["per_video"] = nlohmann::json::array();
    for (const PerVideo& row : report.per_video) {
        nlohmann::json r;
        r["session_id"] = row.session_id;
        r["subject_id"] = row.subject_id;
        r["dataset_id"] = row.dataset_id;
        r["mae"] = row.stats.mae;
        r["rmse"] = row.stats.rmse;
        r["mape"] = row.stats.mape;
        if (row.stats.pearson)
            r["pearson"] = *row.stats.pearson;
        else
            r["pearson"] = nullptr;
        r["lag_s"] = row.stats.lag_s;
        r["n"] = row.stats.n;
        r["alpha"] = row.calibration.alpha;
        r["beta"] = row.calibration.beta;
        r["fallback_mean"] = row.calibration.fallback_mean;
        r["degenerate"] = row.calibration.degenerate;
        r["window_mode"] =
            row.calibration.window.mode == WindowMode::first_n ? "first_n" : "intelligent_k";
        r["window_n"] = row.calibration.window.n_or_k;
        r["window_fell_back"] = row.calibration.window.fell_back_to_first;
        j["per_video"].push_back(std::move(r));
    }
    j["aggregate"] = {{"mae", aggregate_json(report.mae)},
                      {"rmse", aggregate_json(report.rmse)},
                      {"mape", aggregate_json(report.mape)},
                      {"pearson", aggregate_json(report.pearson)}};
    j["config"] = report.config_echo;

    const std::filesystem::path tmp = dir / "report.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, dir / "report.json");
    write_text_atomic(dir / "per_video.csv", per_video_csv(report));
    write_text_atomic(dir / "aggregate.csv", aggregate_csv(report));
}

Report load_report(const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / "report.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        Report report;
        for (const auto& r : j.at("per_video")) {
            PerVideo row;
            row.session_id = r.at("session_id").get<std::string>();
            row.subject_id = r.at("subject_id").get<std::string>();
            row.dataset_id = r.at("dataset_id").get<std::string>();
            row.stats.mae = r.at("mae").get<double>();
            row.stats.rmse = r.at("rmse").get<double>();
            row.stats.mape = r.at("mape").get<double>();
            if (!r.at("pearson").is_null()) row.stats.pearson = r.at("pearson").get<double>();
            row.stats.lag_s = r.at("lag_s").get<double>();
            row.stats.n = r.at("n").get<std::size_t>();
            row.calibration.alpha = r.at("alpha").get<double>();
            row.calibration.beta = r.at("beta").get<double>();
            row.calibration.fallback_mean = r.at("fallback_mean").get<double>();
            row.calibration.degenerate = r.at("degenerate").get<bool>();
            row.calibration.window.mode = r.at("window_mode").get<std::string>() == "first_n"
                                              ? WindowMode::first_n
                                              : WindowMode::intelligent_k;
            row.calibration.window.n_or_k = r.at("window_n").get<std::size_t>();
            row.calibration.window.fell_back_to_first = r.at("window_fell_back").get<bool>();
            report.per_video.push_back(std::move(row));
        }
        const auto& agg = j.at("aggregate");
        report.mae = aggregate_from_json(agg.at("mae"));
        report.rmse = aggregate_from_json(agg.at("rmse"));
        report.mape = aggregate_from_json(agg.at("mape"));
        report.pearson = aggregate_from_json(agg.at("pearson"));
        report.config_echo = j.at("config").get<std::vector<std::string>>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("report " + path.string() + ": " + e.what());
    }
}

}  // namespace spo2cam
