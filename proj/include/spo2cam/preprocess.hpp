#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spo2cam/image.hpp"
#include "spo2cam/session.hpp"
#include "spo2cam/types.hpp"

namespace spo2cam {

// How the 540 frames are picked from a recording.
//   uniform_1hz  — one frame per second from the start of the video.
//   span_minmax  — the window between the nearest label maxima on either side
//                  of the global label minimum, resampled evenly.
enum class FramePolicy { uniform_1hz, span_minmax };

FramePolicy parse_frame_policy(const std::string& name);  // ConfigError on unknown
std::string frame_policy_name(FramePolicy policy);

inline constexpr std::size_t kSelectedFrames = 540;

/// `frame_labels` must hold one sample per video frame (timestamps = frame
/// times); use TimeSeries::interp to resample raw labels first. Returns
/// exactly 540 strictly increasing in-range indices or throws
/// InsufficientFrames / LengthMismatch.
std::vector<std::size_t> select_frames(const TimeSeries& frame_labels,
                                       std::size_t total_frames, FramePolicy policy);

/// Incremental pyramidal Lucas-Kanade box tracker. A grid of points inside
/// the seed box is tracked frame to frame; the box center moves by the median
/// point displacement and the size never changes. Points that leave the frame
/// or sit on textureless patches are re-seeded at their grid offsets around
/// the consensus center. If more than half the points fail in one step the
/// box freezes at its last position and `lost()` reports true from then on.
class LkTracker {
public:
    LkTracker(const GrayImageF& first_frame, const RoiBox& seed);

    RoiBox step(const GrayImageF& next_frame);

    const RoiBox& box() const { return box_; }
    bool lost() const { return lost_; }
    std::size_t frames_seen() const { return frames_seen_; }

private:
    struct Point {
        double x = 0, y = 0;
    };

    void reseed_all();

    std::vector<GrayImageF> prev_pyramid_;
    std::vector<Point> points_;
    RoiBox box_;
    int frame_w_ = 0, frame_h_ = 0;
    bool lost_ = false;
    std::size_t frames_seen_ = 1;
};

struct TrackResult {
    std::vector<RoiBox> boxes;  // one per input frame; boxes[0] == clamped seed
    bool tracking_lost = false;
    std::size_t lost_frame = 0;  // first frame where tracking failed, if lost
};

TrackResult track_roi(const std::vector<GrayImageF>& frames, const RoiBox& seed);

/// Clamp to [80,100], zero-phase low-pass at 0.025 Hz, clamp again.
/// Timestamps pass through unchanged. Throws RateTooLow when rate_hz <= 0.05
/// (cutoff would sit at or above Nyquist).
TimeSeries normalize_labels(const TimeSeries& labels, double rate_hz);

struct PreprocessConfig {
    FramePolicy policy = FramePolicy::uniform_1hz;
    int roi_w = 100;
    int roi_h = 60;
};

struct PreprocessedSession {
    std::vector<std::size_t> frame_indices;  // 540 selected video-frame indices
    std::vector<Image> rois;                 // extracted ROI crops, roi_w x roi_h
    std::vector<RoiBox> boxes;               // tracked box per selected frame
    std::vector<double> labels;              // normalized SpO2 at each selected frame
    bool tracking_lost = false;
};

/// Full preprocessing pass over one session: normalize labels, resample them
/// onto frame timestamps, select frames, track the ROI over the selected
/// sequence, extract crops. A missing ROI seed, or one covering the whole
/// frame, means "no segmentation": the box is the full frame and tracking is
/// skipped.
PreprocessedSession preprocess_session(const Session& session, const PreprocessConfig& config);

/// Cache layout, beside the session's frames/:
///   roi/%06d.png   one crop per selected frame, in selection order
///   roi_meta.json  indices, boxes, labels, policy, target size
void write_roi_cache(const std::filesystem::path& session_dir, const PreprocessedSession& pre,
                     const PreprocessConfig& config);

/// Returns the cached result only when the cache exists and was produced
/// with the same policy and target size; otherwise nullopt (caller recomputes).
std::optional<PreprocessedSession> load_roi_cache(const std::filesystem::path& session_dir,
                                                  const PreprocessConfig& config);

/// Cache if present and compatible, else compute in memory.
PreprocessedSession preprocess_or_load(const Session& session, const PreprocessConfig& config);

}  // namespace spo2cam
