#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellipsekit/io.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(ELLIPSEKIT_TEST_DATA) + "/" + name;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<ellipsekit::GtRecord> toy_gt() {
  std::ifstream in(data_path("toy_gt.jsonl"));
  return ellipsekit::io::read_annotations(in);
}

inline std::vector<ellipsekit::DetectionRecord> toy_det() {
  std::ifstream in(data_path("toy_det.jsonl"));
  std::vector<ellipsekit::DetectionRecord> out;
  for (auto& line : ellipsekit::io::read_detections(in)) out.push_back(line.det);
  return out;
}

}  // namespace fixtures
