/**
 * @file session.hpp
 * @brief One recording on disk: frames, labels, optional checker and ROI seed.
 *
 * Canonical dataset layout per session directory:
 *   frames/%06d.png   contiguous numbering
 *   labels.csv        columns t_s,spo2 (header required)
 *   meta.json         session_id, dataset_id, frame_rate_hz, subject
 *   colorchecker.csv  optional
 *   roi_seed.json     optional {"x","y","w","h"} top-left box for frame 0
 */

#ifndef SPO2CAM_SESSION_HPP
#define SPO2CAM_SESSION_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spo2cam/image.hpp"
#include "spo2cam/tissue_optics.hpp"
#include "spo2cam/types.hpp"

namespace spo2cam {

struct Session {
    std::string session_id;
    std::string dataset_id;
    std::filesystem::path dir;
    std::vector<std::filesystem::path> frame_paths;
    double frame_rate_hz = 0.0;
    TimeSeries labels;
    std::optional<ColorCheckerSet> colorchecker;
    std::optional<RoiBox> roi_seed;
    SubjectMetadata metadata;

    std::size_t frame_count() const { return frame_paths.size(); }
    double frame_time(std::size_t index) const {
        return static_cast<double>(index) / frame_rate_hz;
    }
};

/// Validates layout and cross-file consistency. Throws MissingLabels,
/// FrameGap (non-contiguous numbering), ParseError (with path and line),
/// IoError.
Session load_session(const std::filesystem::path& dir);

Image load_frame(const Session& session, std::size_t index);

/// Sessions sorted by session_id; every immediate subdirectory containing a
/// meta.json is treated as a session.
std::vector<Session> load_dataset(const std::filesystem::path& root);

void save_meta_json(const std::filesystem::path& path, const Session& session);
void save_labels_csv(const std::filesystem::path& path, const TimeSeries& labels);
void save_roi_seed_json(const std::filesystem::path& path, const RoiBox& box);
TimeSeries load_labels_csv(const std::filesystem::path& path);
RoiBox load_roi_seed_json(const std::filesystem::path& path);

} // namespace spo2cam

#endif // SPO2CAM_SESSION_HPP
