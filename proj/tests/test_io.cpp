#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ellipsekit/errors.hpp"
#include "ellipsekit/io.hpp"
#include "scenes.hpp"

using namespace ellipsekit;

namespace {

Ellipse random_ellipse(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-1e3, 1e3), axis(1e-3, 1e3), ratio(1e-3, 1),
      ang(-kPi / 2, kPi / 2);
  const double a = axis(rng);
  return Ellipse(pos(rng), pos(rng), a, a * ratio(rng), ang(rng));
}

void expect_same(const Ellipse& a, const Ellipse& b) {
  EXPECT_NEAR(a.x(), b.x(), 1e-12 * (1 + std::abs(b.x())));
  EXPECT_NEAR(a.y(), b.y(), 1e-12 * (1 + std::abs(b.y())));
  EXPECT_NEAR(a.a(), b.a(), 1e-12 * b.a());
  EXPECT_NEAR(a.b(), b.b(), 1e-12 * b.a());
  EXPECT_NEAR(a.theta(), b.theta(), 1e-12);
}

}  // namespace

TEST(Annotations, RoundTrip) {
  std::mt19937_64 rng(1);
  std::vector<GtRecord> gts;
  for (int i = 0; i < 200; ++i) {
    GtRecord g{"img_" + std::to_string(i % 7), random_ellipse(rng), std::nullopt, 1.0};
    if (i % 2) {
      g.visible_box = BoxRegion(g.ellipse.x(), g.ellipse.y(), 3.5 + i, 1.25);
      g.visibility = 0.3 + 0.001 * i;
    }
    gts.push_back(g);
  }
  std::stringstream ss;
  io::write_annotations(ss, gts);
  const auto back = io::read_annotations(ss);
  ASSERT_EQ(back.size(), gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    EXPECT_EQ(back[i].image_id, gts[i].image_id);
    expect_same(back[i].ellipse, gts[i].ellipse);
    EXPECT_EQ(back[i].visible_box.has_value(), gts[i].visible_box.has_value());
    if (gts[i].visible_box) EXPECT_EQ(*back[i].visible_box, *gts[i].visible_box);
    EXPECT_EQ(back[i].visibility, gts[i].visibility);
  }
}

TEST(Annotations, MinimalLineAndBlankLines) {
  std::stringstream ss(
      "{\"image_id\":\"a\",\"ellipse\":{\"x\":1,\"y\":2,\"a\":3,\"b\":1,\"theta\":0.5}}\n\n");
  const auto gts = io::read_annotations(ss);
  ASSERT_EQ(gts.size(), 1u);
  EXPECT_EQ(gts[0].visibility, 1.0);
  EXPECT_FALSE(gts[0].visible_box);
}

TEST(Annotations, MalformedInputReportsLine) {
  const std::string good = "{\"image_id\":\"a\",\"ellipse\":{\"x\":1,\"y\":2,\"a\":3,\"b\":1,\"theta\":0}}\n";
  for (const std::string bad :
       {std::string("{not json}\n"), std::string("{\"image_id\":\"a\"}\n"),
        std::string("{\"image_id\":\"a\",\"ellipse\":{\"x\":1,\"y\":2,\"a\":1,\"b\":3,\"theta\":0}}\n"),
        std::string("{\"image_id\":7,\"ellipse\":{\"x\":1,\"y\":2,\"a\":3,\"b\":1,\"theta\":0}}\n")}) {
    std::stringstream ss(good + bad);
    try {
      io::read_annotations(ss);
      FAIL() << "accepted " << bad;
    } catch (const InvalidArgument& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Detections, RoundTripWithObjectIds) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> score(0, 1);
  std::stringstream ss;
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 100; ++i) {
    dets.push_back({"im" + std::to_string(i % 5), random_ellipse(rng), score(rng)});
    ss << io::detection_line(dets.back(), i % 3 ? std::optional<std::string>("obj" + std::to_string(i % 4))
                                                : std::nullopt)
       << '\n';
  }
  const auto back = io::read_detections(ss);
  ASSERT_EQ(back.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_EQ(back[i].det.image_id, dets[i].image_id);
    EXPECT_EQ(back[i].det.score, dets[i].score);
    expect_same(back[i].det.ellipse, dets[i].ellipse);
    EXPECT_EQ(back[i].object_id.has_value(), i % 3 != 0);
  }
  std::stringstream plain;
  io::write_detections(plain, dets);
  EXPECT_EQ(io::read_detections(plain).size(), dets.size());
}

TEST(Detections, ScoreDefaultsToOneAndIsRangeChecked) {
  const std::string head = "{\"image_id\":\"a\",\"ellipse\":{\"x\":1,\"y\":2,\"a\":3,\"b\":1,\"theta\":0}";
  std::stringstream gt_line(head + "}\n");
  EXPECT_EQ(io::read_detections(gt_line).at(0).det.score, 1.0);
  std::stringstream high(head + ",\"score\":1.5}\n");
  EXPECT_THROW(io::read_detections(high), InvalidArgument);
  std::stringstream text(head + ",\"score\":\"high\"}\n");
  EXPECT_THROW(io::read_detections(text), InvalidArgument);
}

TEST(Cameras, NestedFlatAndListForms) {
  std::stringstream nested(
      "{\"v0\": [[500,0,320,0],[0,500,240,0],[0,0,1,10]],"
      " \"v1\": [500,0,320,5, 0,500,240,0, 0,0,1,10]}");
  const auto cams = io::read_cameras(nested);
  ASSERT_EQ(cams.size(), 2u);
  EXPECT_EQ(cams.at("v0").p()(2, 3), 10.0);
  EXPECT_EQ(cams.at("v1").p()(0, 3), 5.0);

  std::stringstream listed("[{\"image_id\":\"v2\",\"P\":[[1,0,0,0],[0,1,0,0],[0,0,1,4]]}]");
  EXPECT_EQ(io::read_cameras(listed).at("v2").p()(2, 3), 4.0);

  std::stringstream out;
  io::write_cameras(out, cams);
  const auto back = io::read_cameras(out);
  EXPECT_EQ(back.at("v0").p(), cams.at("v0").p());
  EXPECT_EQ(back.at("v1").p(), cams.at("v1").p());
}

TEST(Cameras, Malformed) {
  for (const char* bad : {"[1,2,3]", "{\"v\": [[1,0,0,0],[0,1,0,0]]}", "{\"v\": [1,2,3]}",
                          "{\"v\": [[1,0,0,0],[0,1,0,0],[0,0,0,0]]}", "nope"}) {
    std::stringstream ss(bad);
    EXPECT_THROW(io::read_cameras(ss), InvalidArgument) << bad;
  }
}

TEST(Poses, RoundTripWithErrors) {
  std::mt19937_64 rng(3);
  std::map<std::string, EllipsoidPose> poses;
  std::map<std::string, PoseErrors> errors;
  for (int i = 0; i < 10; ++i) {
    poses["o" + std::to_string(i)] = scenes::random_pose(rng);
    errors["o" + std::to_string(i)] = {0.5 * i, 0.01 * i, 0.1};
  }
  std::stringstream ss(io::poses_json(poses, &errors));
  EXPECT_NE(ss.str().find("\"errors\""), std::string::npos);
  const auto back = io::read_poses(ss);
  ASSERT_EQ(back.size(), poses.size());
  for (const auto& [id, pose] : poses) {
    EXPECT_LT((back.at(id).center - pose.center).norm(), 1e-12);
    EXPECT_LT((back.at(id).semi_axes - pose.semi_axes).norm(), 1e-12);
    EXPECT_LT((back.at(id).rotation - pose.rotation).norm(), 1e-12);
  }
}

TEST(SceneConfigText, ParsesAndRejects) {
  const SceneConfig cfg = io::parse_scene_config(
      "{\"width\": 96, \"height\": 64, \"objects\": [2, 4], \"visibility\": [0.3, 1.0],"
      " \"seed\": 12345678901, \"raster\": true, \"num_images\": 5}");
  EXPECT_EQ(cfg.width, 96);
  EXPECT_EQ(cfg.objects.hi, 4);
  EXPECT_EQ(cfg.visibility.hi, 1.0);
  EXPECT_EQ(cfg.seed, 12345678901u);
  EXPECT_TRUE(cfg.raster);
  EXPECT_EQ(cfg.num_images, 5);
  EXPECT_EQ(cfg.size_scale.lo, SceneConfig{}.size_scale.lo);

  EXPECT_THROW(io::parse_scene_config("{\"colour\": 3}"), InvalidArgument);
  EXPECT_THROW(io::parse_scene_config("{\"objects\": 3}"), InvalidArgument);
  EXPECT_THROW(io::parse_scene_config("{\"visibility\": [0.6, 0.3]}"), InvalidArgument);
  EXPECT_THROW(io::parse_scene_config("[1, 2]"), InvalidArgument);
  EXPECT_THROW(io::parse_scene_config("{\"width\": \"wide\"}"), InvalidArgument);
}

TEST(Pgm, RoundTrip) {
  LabelMap map{5, 3, {0, 1, 2, 3, 255, 10, 11, 12, 13, 14, 0, 0, 7, 0, 0}};
  std::stringstream ss;
  io::write_pgm(ss, map);
  EXPECT_EQ(ss.str().substr(0, 11), "P5\n5 3\n255\n");
  const LabelMap back = io::read_pgm(ss);
  EXPECT_EQ(back.width, 5);
  EXPECT_EQ(back.height, 3);
  EXPECT_EQ(back.labels, map.labels);

  std::stringstream ascii("P2\n2 2\n255\n0 1 2 3\n");
  EXPECT_THROW(io::read_pgm(ascii), InvalidArgument);
  std::stringstream truncated("P5\n4 4\n255\nab");
  EXPECT_THROW(io::read_pgm(truncated), InvalidArgument);
}
