/**
 * @file session.cpp
 * @brief Dataset directory loading/saving and cross-file validation.
 */

#include "spo2cam/session.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "spo2cam/csv.hpp"
#include "spo2cam/errors.hpp"

namespace spo2cam {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

std::string frame_name(long index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06ld.png", index);
    return buf;
}

} // namespace

TimeSeries load_labels_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::vector<std::string> expected = {"t_s", "spo2"};
    if (table.header != expected) {
        throw ParseError(path.string() + ": expected header t_s,spo2");
    }
    TimeSeries labels;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const std::string ctx = path.string() + ":" + std::to_string(i + 2);
        labels.t.push_back(csv::to_double(table.rows[i][0], ctx));
        labels.v.push_back(csv::to_double(table.rows[i][1], ctx));
        if (i > 0 && labels.t[i] <= labels.t[i - 1]) {
            throw ParseError(ctx + ": timestamps must be strictly increasing");
        }
    }
    if (labels.empty()) throw MissingLabels(path.string() + ": no label rows");
    return labels;
}

void save_labels_csv(const std::filesystem::path& path, const TimeSeries& labels) {
    std::string body = "t_s,spo2\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        body += csv::format_double(labels.t[i]) + "," + csv::format_double(labels.v[i]) + "\n";
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open " + tmp.string());
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

RoiBox load_roi_seed_json(const std::filesystem::path& path) {
    const auto j = read_json(path);
    RoiBox box;
    try {
        const int x = j.at("x").get<int>();
        const int y = j.at("y").get<int>();
        box.width = j.at("w").get<int>();
        box.height = j.at("h").get<int>();
        box.cx = x + box.width * 0.5;
        box.cy = y + box.height * 0.5;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (box.width <= 0 || box.height <= 0) {
        throw ParseError(path.string() + ": box dimensions must be positive");
    }
    return box;
}

void save_roi_seed_json(const std::filesystem::path& path, const RoiBox& box) {
    nlohmann::json j;
    j["x"] = box.left();
    j["y"] = box.top();
    j["w"] = box.width;
    j["h"] = box.height;
    write_json_atomic(path, j);
}

void save_meta_json(const std::filesystem::path& path, const Session& session) {
    nlohmann::json j;
    j["session_id"] = session.session_id;
    j["dataset_id"] = session.dataset_id;
    j["frame_rate_hz"] = session.frame_rate_hz;
    j["subject"] = {{"subject_id", session.metadata.subject_id},
                    {"skin_tone", session.metadata.skin_tone},
                    {"age", session.metadata.age},
                    {"gender", session.metadata.gender},
                    {"covid_history", session.metadata.covid_history}};
    write_json_atomic(path, j);
}

Session load_session(const std::filesystem::path& dir) {
    Session s;
    s.dir = dir;

    const auto meta_path = dir / "meta.json";
    if (!std::filesystem::exists(meta_path)) {
        throw MissingMetadata(meta_path.string() + " not found");
    }
    const auto meta = read_json(meta_path);
    try {
        s.session_id = meta.at("session_id").get<std::string>();
        s.dataset_id = meta.at("dataset_id").get<std::string>();
        s.frame_rate_hz = meta.at("frame_rate_hz").get<double>();
        const auto& subj = meta.at("subject");
        s.metadata.subject_id = subj.at("subject_id").get<std::string>();
        s.metadata.skin_tone = subj.at("skin_tone").get<int>();
        s.metadata.age = subj.at("age").get<int>();
        s.metadata.gender = subj.at("gender").get<std::string>();
        s.metadata.covid_history = subj.at("covid_history").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    if (s.frame_rate_hz <= 0.0) {
        throw ParseError(meta_path.string() + ": frame_rate_hz must be positive");
    }
    if (s.metadata.skin_tone < 1 || s.metadata.skin_tone > 6) {
        throw ParseError(meta_path.string() + ": skin_tone must be in 1..6");
    }

    const auto labels_path = dir / "labels.csv";
    if (!std::filesystem::exists(labels_path)) {
        throw MissingLabels(labels_path.string() + " not found");
    }
    s.labels = load_labels_csv(labels_path);

    const auto frames_dir = dir / "frames";
    if (!std::filesystem::is_directory(frames_dir)) {
        throw IoError(frames_dir.string() + " not found");
    }
    std::vector<long> indices;
    for (const auto& entry : std::filesystem::directory_iterator(frames_dir)) {
        if (entry.path().extension() != ".png") continue;
        const std::string stem = entry.path().stem().string();
        try {
            indices.push_back(csv::to_long(stem, entry.path().string()));
        } catch (const ParseError&) {
            throw ParseError(entry.path().string() + ": frame name is not %06d.png");
        }
    }
    if (indices.empty()) throw InsufficientFrames(frames_dir.string() + " holds no frames");
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 1; i < indices.size(); ++i) {
        if (indices[i] != indices[i - 1] + 1) {
            throw FrameGap(frames_dir.string() + ": " + frame_name(indices[i - 1]) +
                           " is followed by " + frame_name(indices[i]));
        }
    }
    for (long idx : indices) s.frame_paths.push_back(frames_dir / frame_name(idx));

    // Cross-file consistency: the video and label spans must describe the
    // same recording (frame count = duration * rate within one frame, label
    // times within the frame span plus one frame period).
    const double duration = s.labels.t.back() - s.labels.t.front();
    const double expected_frames = duration * s.frame_rate_hz + 1.0;
    if (std::abs(static_cast<double>(s.frame_paths.size()) - expected_frames) > 1.0) {
        throw LengthMismatch(dir.string() + ": " + std::to_string(s.frame_paths.size()) +
                             " frames but labels span " + csv::format_double(duration) +
                             " s at " + csv::format_double(s.frame_rate_hz) + " fps");
    }
    const double frame_span =
        static_cast<double>(s.frame_paths.size() - 1) / s.frame_rate_hz;
    if (s.labels.t.front() < -1.0 / s.frame_rate_hz ||
        s.labels.t.back() > frame_span + 1.0 / s.frame_rate_hz) {
        throw LengthMismatch(dir.string() + ": label timestamps leave the frame span");
    }

    const auto checker_path = dir / "colorchecker.csv";
    if (std::filesystem::exists(checker_path)) {
        s.colorchecker = load_colorchecker(checker_path);
    }
    const auto seed_path = dir / "roi_seed.json";
    if (std::filesystem::exists(seed_path)) {
        s.roi_seed = load_roi_seed_json(seed_path);
    }
    return s;
}

Image load_frame(const Session& session, std::size_t index) {
    if (index >= session.frame_paths.size()) {
        throw ShapeMismatch("frame index " + std::to_string(index) + " out of range");
    }
    return load_png(session.frame_paths[index]);
}

std::vector<Session> load_dataset(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) {
        throw IoError(root.string() + " is not a directory");
    }
    std::vector<std::filesystem::path> dirs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json")) {
            dirs.push_back(entry.path());
        }
    }
    if (dirs.empty()) throw IoError(root.string() + " contains no sessions");
    std::sort(dirs.begin(), dirs.end());
    std::vector<Session> sessions;
    for (const auto& d : dirs) sessions.push_back(load_session(d));
    std::sort(sessions.begin(), sessions.end(),
              [](const Session& a, const Session& b) { return a.session_id < b.session_id; });
    return sessions;
}

} // namespace spo2cam
