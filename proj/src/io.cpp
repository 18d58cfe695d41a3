#include "ellipsekit/io.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <sstream>

#include "ellipsekit/errors.hpp"

namespace ellipsekit::io {
namespace {

using nlohmann::json;

json ellipse_json(const Ellipse& e) {
  return {{"x", e.x()}, {"y", e.y()}, {"a", e.a()}, {"b", e.b()}, {"theta", e.theta()}};
}

Ellipse ellipse_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("a").get<double>(),
          j.at("b").get<double>(), j.at("theta").get<double>()};
}

json box_json(const BoxRegion& b) {
  return {{"x", b.x()}, {"y", b.y()}, {"w", b.w()}, {"h", b.h()}};
}

BoxRegion box_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
          j.at("h").get<double>()};
}

template <typename Fn>
auto parse_or_throw(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw InvalidArgument(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InvalidArgument(what + ": " + e.what());
  }
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse&& parse) {
  std::vector<T> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const std::invalid_argument& e) {
      throw InvalidArgument("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

Matrix34d matrix34_from(const json& j) {
  Matrix34d p;
  if (j.is_array() && j.size() == 12) {
    for (int i = 0; i < 12; ++i) p(i / 4, i % 4) = j.at(i).get<double>();
  } else if (j.is_array() && j.size() == 3) {
    for (int r = 0; r < 3; ++r) {
      if (j.at(r).size() != 4) throw InvalidArgument("camera rows must have 4 entries");
      for (int c = 0; c < 4; ++c) p(r, c) = j.at(r).at(c).get<double>();
    }
  } else {
    throw InvalidArgument("camera must be 3 rows of 4 or 12 numbers");
  }
  return p;
}

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-vector");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("ranges are [lo, hi] pairs");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

IntRange int_range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("ranges are [lo, hi] pairs");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

std::string annotation_line(const GtRecord& gt) {
  json j = {{"image_id", gt.image_id}, {"ellipse", ellipse_json(gt.ellipse)}};
  if (gt.visible_box) j["visible_box"] = box_json(*gt.visible_box);
  j["visibility"] = gt.visibility;
  return j.dump();
}

GtRecord parse_annotation(const std::string& line) {
  return parse_or_throw("annotation", [&] {
    const json j = json::parse(line);
    GtRecord gt{j.at("image_id").get<std::string>(), ellipse_from(j.at("ellipse")), std::nullopt,
                1.0};
    if (j.contains("visible_box") && !j.at("visible_box").is_null()) {
      gt.visible_box = box_from(j.at("visible_box"));
    }
    if (j.contains("visibility")) gt.visibility = j.at("visibility").get<double>();
    if (!(gt.visibility > 0.0 && gt.visibility <= 1.0)) {
      throw InvalidArgument("visibility must lie in (0, 1]");
    }
    return gt;
  });
}

std::vector<GtRecord> read_annotations(std::istream& in) {
  return read_lines<GtRecord>(in, parse_annotation);
}

void write_annotations(std::ostream& out, const std::vector<GtRecord>& gts) {
  for (const auto& g : gts) out << annotation_line(g) << '\n';
}

std::string detection_line(const DetectionRecord& det, const std::optional<std::string>& object_id) {
  json j = {{"image_id", det.image_id}, {"ellipse", ellipse_json(det.ellipse)}, {"score", det.score}};
  if (object_id) j["object_id"] = *object_id;
  return j.dump();
}

DetectionLine parse_detection(const std::string& line) {
  return parse_or_throw("detection", [&] {
    const json j = json::parse(line);
    DetectionLine out{{j.at("image_id").get<std::string>(), ellipse_from(j.at("ellipse")),
                       j.value("score", 1.0)},
                      std::nullopt};
    if (!(out.det.score >= 0.0 && out.det.score <= 1.0)) {
      throw InvalidArgument("score must lie in [0, 1]");
    }
    if (j.contains("object_id")) {
      const json& id = j.at("object_id");
      out.object_id = id.is_string() ? id.get<std::string>() : id.dump();
    }
    return out;
  });
}

std::vector<DetectionLine> read_detections(std::istream& in) {
  return read_lines<DetectionLine>(in, parse_detection);
}

void write_detections(std::ostream& out, const std::vector<DetectionRecord>& dets) {
  for (const auto& d : dets) out << detection_line(d) << '\n';
}

std::map<std::string, CameraMatrix> read_cameras(std::istream& in) {
  return parse_or_throw("camera file", [&] {
    const json j = json::parse(in);
    std::map<std::string, CameraMatrix> out;
    if (j.is_object()) {
      for (const auto& [id, m] : j.items()) out.emplace(id, CameraMatrix(matrix34_from(m)));
    } else if (j.is_array()) {
      for (const auto& entry : j) {
        out.emplace(entry.at("image_id").get<std::string>(),
                    CameraMatrix(matrix34_from(entry.at("P"))));
      }
    } else {
      throw InvalidArgument("expected an object or a list of cameras");
    }
    return out;
  });
}

void write_cameras(std::ostream& out, const std::map<std::string, CameraMatrix>& cameras) {
  json j = json::object();
  for (const auto& [id, cam] : cameras) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
      rows.push_back({cam.p()(r, 0), cam.p()(r, 1), cam.p()(r, 2), cam.p()(r, 3)});
    }
    j[id] = rows;
  }
  out << j.dump(2) << '\n';
}

std::map<std::string, EllipsoidPose> read_poses(std::istream& in) {
  return parse_or_throw("pose file", [&] {
    const json j = json::parse(in);
    std::map<std::string, EllipsoidPose> out;
    for (const auto& entry : j) {
      EllipsoidPose pose;
      const json& id = entry.at("object_id");
      pose.center = vec3_from(entry.at("center"));
      pose.semi_axes = vec3_from(entry.at("semi_axes"));
      const json& rot = entry.at("rotation");
      if (!rot.is_array() || rot.size() != 3) throw InvalidArgument("rotation must be 3x3");
      for (int r = 0; r < 3; ++r) pose.rotation.row(r) = vec3_from(rot.at(r)).transpose();
      out.emplace(id.is_string() ? id.get<std::string>() : id.dump(), pose);
    }
    return out;
  });
}

std::string poses_json(const std::map<std::string, EllipsoidPose>& poses,
                       const std::map<std::string, PoseErrors>* errors) {
  json j = json::array();
  for (const auto& [id, p] : poses) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
    j.push_back({{"object_id", id},
                 {"center", {p.center.x(), p.center.y(), p.center.z()}},
                 {"semi_axes", {p.semi_axes(0), p.semi_axes(1), p.semi_axes(2)}},
                 {"rotation", rot}});
    if (errors) {
      const auto e = errors->find(id);
      if (e != errors->end()) {
        j.back()["errors"] = {{"rotation_deg", e->second.rotation_deg},
                              {"position", e->second.position},
                              {"relative_size", e->second.relative_size}};
      }
    }
  }
  return j.dump(2);
}

SceneConfig parse_scene_config(const std::string& text) {
  return parse_or_throw("scene config", [&] {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    SceneConfig cfg;
    for (const auto& [key, v] : j.items()) {
      if (key == "width") cfg.width = v.get<int>();
      else if (key == "height") cfg.height = v.get<int>();
      else if (key == "objects") cfg.objects = int_range_from(v);
      else if (key == "size_scale") cfg.size_scale = range_from(v);
      else if (key == "center_translation") cfg.center_translation = range_from(v);
      else if (key == "axes_ratio") cfg.axes_ratio = range_from(v);
      else if (key == "visibility") cfg.visibility = range_from(v);
      else if (key == "triangles") cfg.triangles = int_range_from(v);
      else if (key == "max_retries") cfg.max_retries = v.get<int>();
      else if (key == "num_images") cfg.num_images = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "raster") cfg.raster = v.get<bool>();
      else throw InvalidArgument("unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
  });
}

void write_pgm(std::ostream& out, const LabelMap& map) {
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(map.labels.data()),
            static_cast<std::streamsize>(map.labels.size()));
}

LabelMap read_pgm(std::istream& in) {
  std::string magic;
  LabelMap map;
  int maxval = 0;
  in >> magic >> map.width >> map.height >> maxval;
  if (!in || magic != "P5" || map.width <= 0 || map.height <= 0 || maxval != 255) {
    throw InvalidArgument("expected a binary 8-bit PGM (P5)");
  }
  in.get();
  map.labels.resize(static_cast<std::size_t>(map.width) * map.height);
  in.read(reinterpret_cast<char*>(map.labels.data()), static_cast<std::streamsize>(map.labels.size()));
  if (in.gcount() != static_cast<std::streamsize>(map.labels.size())) {
    throw InvalidArgument("PGM pixel data is truncated");
  }
  return map;
}

}  // namespace ellipsekit::io
