#include "spo2cam/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "spo2cam/dsp.hpp"
#include "spo2cam/errors.hpp"

namespace spo2cam {

FramePolicy parse_frame_policy(const std::string& name) {
    if (name == "uniform_1hz") return FramePolicy::uniform_1hz;
    if (name == "span_minmax") return FramePolicy::span_minmax;
    throw ConfigError("unknown frame policy '" + name +
                      "' (expected uniform_1hz or span_minmax)");
}

std::string frame_policy_name(FramePolicy policy) {
    return policy == FramePolicy::uniform_1hz ? "uniform_1hz" : "span_minmax";
}

namespace {

std::vector<std::size_t> select_uniform_1hz(const TimeSeries& labels, std::size_t total) {
    const double rate = labels.rate_hz();
    if (rate <= 0.0) throw InsufficientFrames("uniform_1hz: cannot derive a frame rate");
    std::vector<std::size_t> idx;
    idx.reserve(kSelectedFrames);
    for (std::size_t i = 0; i < kSelectedFrames; ++i) {
        const long v = std::lround(static_cast<double>(i) * rate);
        if (v < 0 || static_cast<std::size_t>(v) >= total ||
            (!idx.empty() && static_cast<std::size_t>(v) <= idx.back()))
            throw InsufficientFrames("uniform_1hz: video supplies only " + std::to_string(total) +
                                     " frames; need one per second for " +
                                     std::to_string(kSelectedFrames) + " s");
        idx.push_back(static_cast<std::size_t>(v));
    }
    return idx;
}

std::vector<std::size_t> select_span_minmax(const TimeSeries& labels, std::size_t total) {
    const auto& v = labels.v;
    const std::size_t min_idx =
        static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());

    // Nearest maximal sample on each side of the global minimum.
    std::size_t left = 0;
    double best = v[0];
    for (std::size_t i = 0; i <= min_idx; ++i)
        if (v[i] >= best) {
            best = v[i];
            left = i;
        }
    std::size_t right = min_idx;
    best = v[min_idx];
    for (std::size_t i = min_idx; i < v.size(); ++i)
        if (v[i] > best) {
            best = v[i];
            right = i;
        }

    if (right - left + 1 < kSelectedFrames)
        throw InsufficientFrames("span_minmax: window [" + std::to_string(left) + "," +
                                 std::to_string(right) + "] holds fewer than " +
                                 std::to_string(kSelectedFrames) + " frames");

    const double span = static_cast<double>(right - left);
    std::vector<std::size_t> idx;
    idx.reserve(kSelectedFrames);
    for (std::size_t k = 0; k < kSelectedFrames; ++k) {
        auto cand = static_cast<std::size_t>(
            std::lround(left + span * static_cast<double>(k) / (kSelectedFrames - 1)));
        if (!idx.empty() && cand <= idx.back()) cand = idx.back() + 1;  // dedupe upward
        if (cand > right || cand >= total)
            throw InsufficientFrames("span_minmax: resampling overran the window");
        idx.push_back(cand);
    }
    return idx;
}

}  // namespace

std::vector<std::size_t> select_frames(const TimeSeries& frame_labels, std::size_t total_frames,
                                       FramePolicy policy) {
    if (frame_labels.size() != total_frames)
        throw LengthMismatch("select_frames: " + std::to_string(frame_labels.size()) +
                             " frame-aligned labels vs " + std::to_string(total_frames) +
                             " frames");
    if (total_frames < kSelectedFrames)
        throw InsufficientFrames("select_frames: video has " + std::to_string(total_frames) +
                                 " frames, need at least " + std::to_string(kSelectedFrames));
    return policy == FramePolicy::uniform_1hz ? select_uniform_1hz(frame_labels, total_frames)
                                              : select_span_minmax(frame_labels, total_frames);
}

// ---------------------------------------------------------------------------
// Pyramidal Lucas-Kanade
// ---------------------------------------------------------------------------

namespace {

constexpr int kWin = 5;  // 11x11 tracking window
constexpr int kMaxIter = 30;
constexpr double kConvergeEps = 0.01;
constexpr double kMinEigPerPixel = 0.5;  // gradient-matrix degeneracy cutoff
constexpr int kGrid = 7;                 // 7x7 tracked points

double sample_bilinear(const GrayImageF& im, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(im.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(im.height - 1));
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, im.width - 1), y1 = std::min(y0 + 1, im.height - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * im.at(x0, y0) + fx * (1 - fy) * im.at(x1, y0) +
           (1 - fx) * fy * im.at(x0, y1) + fx * fy * im.at(x1, y1);
}

GrayImageF downsample2(const GrayImageF& src) {
    GrayImageF dst(src.width / 2, src.height / 2);
    for (int y = 0; y < dst.height; ++y)
        for (int x = 0; x < dst.width; ++x)
            dst.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                                    src.at(2 * x, 2 * y + 1) + src.at(2 * x + 1, 2 * y + 1));
    return dst;
}

std::vector<GrayImageF> build_pyramid(const GrayImageF& base) {
    std::vector<GrayImageF> pyr{base};
    while (pyr.size() < 3) {
        const auto& top = pyr.back();
        if (std::min(top.width, top.height) < 2 * (2 * kWin + 1)) break;
        pyr.push_back(downsample2(top));
    }
    return pyr;
}

bool lk_point(const std::vector<GrayImageF>& prev, const std::vector<GrayImageF>& next, double x,
              double y, double& out_x, double& out_y) {
    constexpr int kN = (2 * kWin + 1) * (2 * kWin + 1);
    double iv[kN], ixv[kN], iyv[kN];

    double gx = 0.0, gy = 0.0;
    for (int level = static_cast<int>(prev.size()) - 1; level >= 0; --level) {
        const auto& I = prev[level];
        const auto& J = next[level];
        const double px = x / (1 << level), py = y / (1 << level);

        double gxx = 0, gxy = 0, gyy = 0;
        int m = 0;
        for (int dy = -kWin; dy <= kWin; ++dy)
            for (int dx = -kWin; dx <= kWin; ++dx, ++m) {
                const double sx = px + dx, sy = py + dy;
                iv[m] = sample_bilinear(I, sx, sy);
                ixv[m] = 0.5 * (sample_bilinear(I, sx + 1, sy) - sample_bilinear(I, sx - 1, sy));
                iyv[m] = 0.5 * (sample_bilinear(I, sx, sy + 1) - sample_bilinear(I, sx, sy - 1));
                gxx += ixv[m] * ixv[m];
                gxy += ixv[m] * iyv[m];
                gyy += iyv[m] * iyv[m];
            }
        const double tr = gxx + gyy;
        const double det = gxx * gyy - gxy * gxy;
        const double min_eig = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        if (!(min_eig / kN >= kMinEigPerPixel)) return false;

        double dx_acc = 0.0, dy_acc = 0.0;
        for (int it = 0; it < kMaxIter; ++it) {
            double b0 = 0, b1 = 0;
            m = 0;
            for (int dy = -kWin; dy <= kWin; ++dy)
                for (int dx = -kWin; dx <= kWin; ++dx, ++m) {
                    const double diff =
                        iv[m] - sample_bilinear(J, px + gx + dx_acc + dx, py + gy + dy_acc + dy);
                    b0 += diff * ixv[m];
                    b1 += diff * iyv[m];
                }
            const double sx = (gyy * b0 - gxy * b1) / det;
            const double sy = (gxx * b1 - gxy * b0) / det;
            if (!std::isfinite(sx) || !std::isfinite(sy)) return false;
            dx_acc += sx;
            dy_acc += sy;
            if (sx * sx + sy * sy < kConvergeEps * kConvergeEps) break;
        }
        if (level > 0) {
            gx = 2.0 * (gx + dx_acc);
            gy = 2.0 * (gy + dy_acc);
        } else {
            gx += dx_acc;
            gy += dy_acc;
        }
    }
    out_x = x + gx;
    out_y = y + gy;
    return std::isfinite(out_x) && std::isfinite(out_y) && out_x >= 0.0 && out_y >= 0.0 &&
           out_x <= prev[0].width - 1.0 && out_y <= prev[0].height - 1.0;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LkTracker::LkTracker(const GrayImageF& first_frame, const RoiBox& seed) {
    if (seed.width <= 0 || seed.height <= 0)
        throw ConfigError("track_roi: seed box must have positive size");
    frame_w_ = first_frame.width;
    frame_h_ = first_frame.height;
    box_ = seed.clamped(frame_w_, frame_h_);
    box_.frame_index = 0;
    prev_pyramid_ = build_pyramid(first_frame);
    reseed_all();
}

void LkTracker::reseed_all() {
    points_.resize(static_cast<std::size_t>(kGrid) * kGrid);
    for (int gy = 0; gy < kGrid; ++gy)
        for (int gx = 0; gx < kGrid; ++gx) {
            auto& p = points_[static_cast<std::size_t>(gy) * kGrid + gx];
            p.x = box_.cx + ((gx + 0.5) / kGrid - 0.5) * box_.width * 0.9;
            p.y = box_.cy + ((gy + 0.5) / kGrid - 0.5) * box_.height * 0.9;
        }
}

RoiBox LkTracker::step(const GrayImageF& next_frame) {
    const auto frame_index = static_cast<int>(frames_seen_++);
    if (lost_) {
        box_.frame_index = frame_index;
        return box_;
    }

    auto pyramid = build_pyramid(next_frame);
    std::vector<Point> moved(points_.size());
    std::vector<char> ok(points_.size(), 0);
    std::vector<double> dxs, dys;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        ok[i] = lk_point(prev_pyramid_, pyramid, points_[i].x, points_[i].y, moved[i].x,
                         moved[i].y);
        if (ok[i]) {
            dxs.push_back(moved[i].x - points_[i].x);
            dys.push_back(moved[i].y - points_[i].y);
        }
    }

    const std::size_t failed = points_.size() - dxs.size();
    if (failed * 2 > points_.size()) {
        lost_ = true;  // freeze at the last good position
        box_.frame_index = frame_index;
        return box_;
    }

    box_.cx += median(dxs);
    box_.cy += median(dys);
    box_ = box_.clamped(frame_w_, frame_h_);
    box_.frame_index = frame_index;

    // Survivors carry their tracked positions; failures rejoin the grid at
    // the consensus position the survivors established.
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (ok[i]) {
            points_[i] = moved[i];
        } else {
            const int gx = static_cast<int>(i) % kGrid, gy = static_cast<int>(i) / kGrid;
            points_[i].x = box_.cx + ((gx + 0.5) / kGrid - 0.5) * box_.width * 0.9;
            points_[i].y = box_.cy + ((gy + 0.5) / kGrid - 0.5) * box_.height * 0.9;
        }
    }
    prev_pyramid_ = std::move(pyramid);
    return box_;
}

TrackResult track_roi(const std::vector<GrayImageF>& frames, const RoiBox& seed) {
    if (frames.empty()) throw LengthMismatch("track_roi: empty frame sequence");
    TrackResult result;
    LkTracker tracker(frames[0], seed);
    result.boxes.push_back(tracker.box());
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const bool was_lost = tracker.lost();
        result.boxes.push_back(tracker.step(frames[i]));
        if (!was_lost && tracker.lost()) result.lost_frame = i;
    }
    result.tracking_lost = tracker.lost();
    return result;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

TimeSeries normalize_labels(const TimeSeries& labels, double rate_hz) {
    if (!(rate_hz > 0.05))
        throw RateTooLow("normalize_labels: rate " + std::to_string(rate_hz) +
                         " Hz puts the 0.025 Hz cutoff at or above Nyquist");
    std::vector<double> clamped(labels.v.size());
    for (std::size_t i = 0; i < labels.v.size(); ++i) clamped[i] = clamp_spo2(labels.v[i]);

    TimeSeries out;
    out.t = labels.t;
    out.v = filtfilt(butter2_lowpass(0.025, rate_hz), clamped);
    for (auto& v : out.v) v = clamp_spo2(v);
    return out;
}

// ---------------------------------------------------------------------------
// Session driver + cache
// ---------------------------------------------------------------------------

PreprocessedSession preprocess_session(const Session& session, const PreprocessConfig& config) {
    if (config.roi_w <= 0 || config.roi_h <= 0)
        throw ConfigError("preprocess: ROI target dimensions must be positive");

    const auto norm = normalize_labels(session.labels, session.labels.rate_hz());
    const std::size_t n = session.frame_count();
    TimeSeries frame_labels;
    frame_labels.t.reserve(n);
    frame_labels.v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = session.frame_time(i);
        frame_labels.t.push_back(t);
        frame_labels.v.push_back(norm.interp(t));
    }

    PreprocessedSession out;
    out.frame_indices = select_frames(frame_labels, n, config.policy);
    out.labels.reserve(out.frame_indices.size());
    for (auto idx : out.frame_indices) out.labels.push_back(frame_labels.v[idx]);

    Image first = load_frame(session, out.frame_indices[0]);
    const int fw = first.width, fh = first.height;
    RoiBox full{fw * 0.5, fh * 0.5, fw, fh, 0};
    const bool no_segmentation =
        !session.roi_seed || (session.roi_seed->width >= fw && session.roi_seed->height >= fh);

    out.rois.reserve(out.frame_indices.size());
    out.boxes.reserve(out.frame_indices.size());
    if (no_segmentation) {
        for (std::size_t k = 0; k < out.frame_indices.size(); ++k) {
            Image frame = (k == 0) ? std::move(first) : load_frame(session, out.frame_indices[k]);
            RoiBox box = full;
            box.frame_index = static_cast<int>(k);
            out.boxes.push_back(box);
            out.rois.push_back(extract_roi(frame, box, config.roi_w, config.roi_h));
        }
    } else {
        LkTracker tracker(to_gray(first), *session.roi_seed);
        out.boxes.push_back(tracker.box());
        out.rois.push_back(extract_roi(first, tracker.box(), config.roi_w, config.roi_h));
        for (std::size_t k = 1; k < out.frame_indices.size(); ++k) {
            Image frame = load_frame(session, out.frame_indices[k]);
            const RoiBox box = tracker.step(to_gray(frame));
            out.boxes.push_back(box);
            out.rois.push_back(extract_roi(frame, box, config.roi_w, config.roi_h));
        }
        out.tracking_lost = tracker.lost();
    }
    return out;
}

namespace {

std::filesystem::path roi_frame_path(const std::filesystem::path& dir, std::size_t k) {
    char name[16];
    std::snprintf(name, sizeof(name), "%06zu.png", k);
    return dir / name;
}

}  // namespace

void write_roi_cache(const std::filesystem::path& session_dir, const PreprocessedSession& pre,
                     const PreprocessConfig& config) {
    const auto roi_dir = session_dir / "roi";
    std::filesystem::create_directories(roi_dir);
    for (std::size_t k = 0; k < pre.rois.size(); ++k)
        save_png(roi_frame_path(roi_dir, k), pre.rois[k]);

    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : pre.boxes)
        boxes.push_back({{"cx", b.cx}, {"cy", b.cy}, {"w", b.width}, {"h", b.height}});
    const nlohmann::json meta = {{"version", 1},
                                 {"policy", frame_policy_name(config.policy)},
                                 {"target_w", config.roi_w},
                                 {"target_h", config.roi_h},
                                 {"tracking_lost", pre.tracking_lost},
                                 {"frame_indices", pre.frame_indices},
                                 {"labels", pre.labels},
                                 {"boxes", boxes}};
    const auto path = session_dir / "roi_meta.json";
    const auto tmp = session_dir / "roi_meta.json.tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw IoError("cannot write " + tmp.string());
        f << meta.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

std::optional<PreprocessedSession> load_roi_cache(const std::filesystem::path& session_dir,
                                                  const PreprocessConfig& config) {
    const auto meta_path = session_dir / "roi_meta.json";
    if (!std::filesystem::exists(meta_path)) return std::nullopt;
    std::ifstream f(meta_path);
    if (!f) throw IoError("cannot read " + meta_path.string());
    nlohmann::json meta;
    try {
        f >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }

    if (meta.value("version", 0) != 1 ||
        meta.value("policy", "") != frame_policy_name(config.policy) ||
        meta.value("target_w", -1) != config.roi_w || meta.value("target_h", -1) != config.roi_h)
        return std::nullopt;  // stale cache for some other configuration

    PreprocessedSession pre;
    pre.tracking_lost = meta.at("tracking_lost").get<bool>();
    pre.frame_indices = meta.at("frame_indices").get<std::vector<std::size_t>>();
    pre.labels = meta.at("labels").get<std::vector<double>>();
    for (const auto& b : meta.at("boxes")) {
        RoiBox box{b.at("cx").get<double>(), b.at("cy").get<double>(), b.at("w").get<int>(),
                   b.at("h").get<int>(), static_cast<int>(pre.boxes.size())};
        pre.boxes.push_back(box);
    }
    if (pre.boxes.size() != pre.frame_indices.size() ||
        pre.labels.size() != pre.frame_indices.size())
        throw ParseError(meta_path.string() + ": inconsistent array lengths");

    pre.rois.reserve(pre.frame_indices.size());
    for (std::size_t k = 0; k < pre.frame_indices.size(); ++k) {
        const auto path = roi_frame_path(session_dir / "roi", k);
        if (!std::filesystem::exists(path))
            throw IoError("roi cache missing frame " + path.string());
        pre.rois.push_back(load_png(path));
    }
    return pre;
}

PreprocessedSession preprocess_or_load(const Session& session, const PreprocessConfig& config) {
    if (auto cached = load_roi_cache(session.dir, config)) return std::move(*cached);
    return preprocess_session(session, config);
}

}  // namespace spo2cam
