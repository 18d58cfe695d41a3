#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ellipsekit/metrics.hpp"
#include "ellipsekit/quadric.hpp"
#include "ellipsekit/synth.hpp"

namespace ellipsekit::io {

// Line-oriented JSON formats. Parse failures throw InvalidArgument with the
// offending line number.

/// {"image_id", "ellipse": {"x","y","a","b","theta"}, "visible_box"?: {"x","y","w","h"},
///  "visibility"?: number}
std::string annotation_line(const GtRecord& gt);
GtRecord parse_annotation(const std::string& line);
std::vector<GtRecord> read_annotations(std::istream& in);
void write_annotations(std::ostream& out, const std::vector<GtRecord>& gts);

/// {"image_id", "ellipse": {...}, "score": number, "object_id"?: string}
struct DetectionLine {
  DetectionRecord det;
  std::optional<std::string> object_id;
};
std::string detection_line(const DetectionRecord& det,
                           const std::optional<std::string>& object_id = std::nullopt);
DetectionLine parse_detection(const std::string& line);
std::vector<DetectionLine> read_detections(std::istream& in);
void write_detections(std::ostream& out, const std::vector<DetectionRecord>& dets);

/// Object mapping image_id to a 3x4 row-major matrix, either nested rows or
/// a flat list of 12 numbers.
std::map<std::string, CameraMatrix> read_cameras(std::istream& in);
void write_cameras(std::ostream& out, const std::map<std::string, CameraMatrix>& cameras);

/// List of {"object_id", "center": [3], "semi_axes": [3], "rotation": [[3],[3],[3]]}.
/// Entries may carry an "errors" object, which read_poses ignores.
std::map<std::string, EllipsoidPose> read_poses(std::istream& in);
std::string poses_json(const std::map<std::string, EllipsoidPose>& poses,
                       const std::map<std::string, PoseErrors>* errors = nullptr);

/// Scene generator configuration; unknown keys are rejected.
SceneConfig parse_scene_config(const std::string& text);

/// Binary PGM (P5), one byte per cell.
void write_pgm(std::ostream& out, const LabelMap& map);
LabelMap read_pgm(std::istream& in);

}  // namespace ellipsekit::io
