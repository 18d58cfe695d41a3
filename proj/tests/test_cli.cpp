#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ellipsekit/io.hpp"
#include "ellipsekit/refinement.hpp"
#include "fixtures.hpp"
#include "scenes.hpp"

using namespace ellipsekit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("ellipsekit_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  RunResult run(const std::string& args) const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = std::string("\"") + ELLIPSEKIT_CLI + "\" " + args + " >\"" + out +
                            "\" 2>\"" + err + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = fixtures::read_text(out);
    r.err = fixtures::read_text(err);
    return r;
  }

  fs::path dir_;
};

std::vector<std::string> csv_row(const std::string& csv, int index) {
  std::istringstream in(csv);
  std::string line;
  for (int i = 0; i <= index; ++i) std::getline(in, line);
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_F(CliTest, GenerateIsByteIdentical) {
  write("cfg.json", "{\"width\": 96, \"height\": 96, \"num_images\": 4, \"raster\": true}");
  for (const char* out : {"a", "b"}) {
    const RunResult r = run("generate --config " + path("cfg.json") + " --out " + path(out) + " --seed 5");
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const std::string ann = fixtures::read_text(path("a/annotations.jsonl"));
  EXPECT_FALSE(ann.empty());
  EXPECT_EQ(ann, fixtures::read_text(path("b/annotations.jsonl")));
  for (int i = 0; i < 4; ++i) {
    const std::string pgm = "scene_00000" + std::to_string(i) + ".pgm";
    EXPECT_EQ(fixtures::read_text(path("a/" + pgm)), fixtures::read_text(path("b/" + pgm)));
  }
  const RunResult threaded = run("--threads 3 generate --config " + path("cfg.json") + " --out " +
                                 path("c") + " --seed 5");
  ASSERT_EQ(threaded.code, 0);
  EXPECT_EQ(ann, fixtures::read_text(path("c/annotations.jsonl")));

  const RunResult other = run("generate --config " + path("cfg.json") + " --out " + path("d") + " --seed 6");
  ASSERT_EQ(other.code, 0);
  EXPECT_NE(ann, fixtures::read_text(path("d/annotations.jsonl")));
}

TEST_F(CliTest, GenerateRejectsMalformedConfig) {
  write("bad.json", "{\"width\": 96,");
  RunResult r = run("generate --config " + path("bad.json") + " --out " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
  write("unknown.json", "{\"wdth\": 96}");
  r = run("generate --config " + path("unknown.json") + " --out " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("wdth"), std::string::npos);
  EXPECT_EQ(run("generate --config " + path("missing.json") + " --out " + path("o")).code, 2);
  EXPECT_EQ(run("generate").code, 2);
}

TEST_F(CliTest, EvalSelfDetectionIsPerfect) {
  const std::string gt = fixtures::data_path("toy_gt.jsonl");
  const RunResult r = run("eval --gt " + gt + " --det " + gt + " --preset soe --out " + path("r.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = fixtures::read_text(path("r.csv"));
  const auto header = csv_row(csv, 0);
  const auto row = csv_row(csv, 1);
  ASSERT_EQ(header.size(), row.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("AP", 0) == 0) EXPECT_EQ(row[i], "1.000") << header[i];
  }
  EXPECT_FALSE(r.out.empty());
}

TEST_F(CliTest, EvalEmptyDetections) {
  write("empty.jsonl", "");
  const RunResult r = run("eval --gt " + fixtures::data_path("toy_gt.jsonl") + " --det " +
                          path("empty.jsonl") + " --out " + path("r.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = fixtures::read_text(path("r.csv"));
  const auto header = csv_row(csv, 0);
  const auto row = csv_row(csv, 1);
  for (std::size_t i = 0; i < header.size(); ++i) {
    EXPECT_EQ(row[i], header[i].rfind("AP", 0) == 0 ? "0.000" : "1.000") << header[i];
  }
}

TEST_F(CliTest, EvalToyFixtureMatchesOracleCsv) {
  const RunResult r = run("--quiet eval --gt " + fixtures::data_path("toy_gt.jsonl") + " --det " +
                          fixtures::data_path("toy_det.jsonl") + " --preset soe --out " + path("r.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(fixtures::read_text(path("r.csv")), fixtures::read_text(fixtures::data_path("toy_oracle_soe.csv")));

  const RunResult threaded = run("--threads 4 eval --gt " + fixtures::data_path("toy_gt.jsonl") +
                                 " --det " + fixtures::data_path("toy_det.jsonl") + " --preset soe --out " +
                                 path("t.csv") + " --svg " + path("pr.svg"));
  ASSERT_EQ(threaded.code, 0) << threaded.err;
  EXPECT_EQ(fixtures::read_text(path("t.csv")), fixtures::read_text(path("r.csv")));
  EXPECT_NE(fixtures::read_text(path("pr.svg")).find("<svg"), std::string::npos);
}

TEST_F(CliTest, EvalExitCodes) {
  write("empty.jsonl", "");
  const std::string det = fixtures::data_path("toy_det.jsonl");
  EXPECT_EQ(run("eval --gt " + path("empty.jsonl") + " --det " + det).code, 1);
  write("broken.jsonl", "{\"image_id\": \"a\"}\n");
  EXPECT_EQ(run("eval --gt " + path("broken.jsonl") + " --det " + det).code, 2);
  EXPECT_EQ(run("eval --gt " + fixtures::data_path("toy_gt.jsonl") + " --det " + det + " --preset xyz").code, 2);
}

TEST_F(CliTest, ReconstructNoiselessFixture) {
  std::mt19937_64 rng(21);
  std::map<std::string, CameraMatrix> cameras;
  std::map<std::string, EllipsoidPose> gt;
  std::ostringstream dets;
  for (int obj = 0; obj < 3; ++obj) {
    const std::string id = "obj" + std::to_string(obj);
    gt[id] = scenes::random_pose(rng);
    // The last object is seen only twice.
    const int views = obj == 2 ? 2 : 4;
    const auto cams = scenes::random_cameras(rng, gt[id], views);
    for (int v = 0; v < views; ++v) {
      const std::string image = id + "_view" + std::to_string(v);
      cameras.emplace(image, cams[static_cast<std::size_t>(v)]);
      const Ellipse e = project(ellipsoid_to_quadric(gt[id]), cams[static_cast<std::size_t>(v)]);
      dets << io::detection_line({image, e, 1.0}, id) << '\n';
    }
  }
  std::ostringstream cam_text;
  io::write_cameras(cam_text, cameras);
  write("cams.json", cam_text.str());
  write("dets.jsonl", dets.str());
  write("gt.json", io::poses_json(gt));

  const RunResult r = run("reconstruct --cameras " + path("cams.json") + " --det " + path("dets.jsonl") +
                          " --gt " + path("gt.json") + " --out " + path("poses.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("obj2"), std::string::npos);
  EXPECT_NE(r.out.find("rot_deg"), std::string::npos);
  std::ifstream in(path("poses.json"));
  const auto poses = io::read_poses(in);
  ASSERT_EQ(poses.size(), 2u);
  for (const auto& [id, pose] : poses) {
    const PoseErrors err = pose_errors(pose, gt.at(id));
    EXPECT_LT(err.position, 1e-6);
    EXPECT_LT(err.rotation_deg, 1e-4);
    EXPECT_LT(err.relative_size, 1e-6);
  }
  EXPECT_NE(fixtures::read_text(path("poses.json")).find("\"errors\""), std::string::npos);
}

TEST_F(CliTest, ReconstructInputErrors) {
  write("dets.jsonl", "");
  write("cams.json", "{\"v\": [[1, 0], [0, 1]]}");
  EXPECT_EQ(run("reconstruct --cameras " + path("cams.json") + " --det " + path("dets.jsonl")).code, 2);
  EXPECT_EQ(run("reconstruct --cameras " + path("nope.json") + " --det " + path("dets.jsonl")).code, 2);
  write("cams.json", "{\"v\": [[1,0,0,0],[0,1,0,0],[0,0,1,5]]}");
  write("dets.jsonl", "{\"image_id\":\"v\",\"ellipse\":{\"x\":0,\"y\":0,\"a\":1,\"b\":1,\"theta\":0},\"score\":1}\n");
  EXPECT_EQ(run("reconstruct --cameras " + path("cams.json") + " --det " + path("dets.jsonl")).code, 2);
}

TEST_F(CliTest, FitRecoversRasterEllipse) {
  const GridSpec grid{0, 0, 1, 120, 90};
  const Ellipse truth(60.2, 44.7, 30, 14, 0.5);
  const Mask mask = rasterize(truth, grid);
  LabelMap map{120, 90, std::vector<std::uint8_t>(120 * 90, 0)};
  for (std::size_t i = 0; i < map.labels.size(); ++i) map.labels[i] = mask.cells()[i] ? 3 : 0;
  std::ostringstream pgm;
  io::write_pgm(pgm, map);
  write("mask.pgm", pgm.str());

  const RunResult r = run("fit --mask " + path("mask.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  // {"label":3,"x":...,"theta":...} reads as an annotation once wrapped.
  const std::string prefix = "{\"label\":3,";
  ASSERT_EQ(r.out.rfind(prefix, 0), 0u) << r.out;
  std::string body = r.out.substr(prefix.size());
  body = body.substr(0, body.find('}'));
  const GtRecord fitted = io::parse_annotation("{\"image_id\":\"m\",\"ellipse\":{" + body + "}}");
  EXPECT_NEAR(fitted.ellipse.x(), truth.x(), 1.0);
  EXPECT_NEAR(fitted.ellipse.a(), truth.a(), 1.5);
  EXPECT_NEAR(fitted.ellipse.b(), truth.b(), 1.5);
  EXPECT_NEAR(fitted.ellipse.theta(), truth.theta(), 0.05);
  EXPECT_EQ(run("fit --mask " + path("mask.pgm") + " --label 300").code, 2);
}

TEST_F(CliTest, Selftest) {
  const RunResult r = run("selftest --cases 2000 --seed 3");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(r.out.empty());
}
