#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ellipsekit/codec.hpp"
#include "ellipsekit/errors.hpp"
#include "ellipsekit/geometry.hpp"
#include "ellipsekit/io.hpp"
#include "ellipsekit/metrics.hpp"
#include "ellipsekit/mvee.hpp"
#include "ellipsekit/quadric.hpp"
#include "ellipsekit/refinement.hpp"
#include "ellipsekit/synth.hpp"

namespace py = pybind11;
using namespace ellipsekit;

namespace {

using PointArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using BoolImage = py::array_t<bool, py::array::c_style>;

std::vector<Point2> to_points(const PointArray& pts) {
  std::vector<Point2> out(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) out[static_cast<std::size_t>(i)] = pts.row(i).transpose();
  return out;
}

BoolImage mask_to_array(const Mask& m) {
  BoolImage out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) view(r, c) = m.at(c, r);
  return out;
}

Mask array_to_mask(const BoolImage& a) {
  if (a.ndim() != 2) throw InvalidArgument("mask must be a 2-D array");
  const auto view = a.unchecked<2>();
  Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (py::ssize_t r = 0; r < a.shape(0); ++r)
    for (py::ssize_t c = 0; c < a.shape(1); ++c) m.set(static_cast<int>(c), static_cast<int>(r), view(r, c));
  return m;
}

py::array_t<std::uint8_t> labels_to_array(const LabelMap& map) {
  py::array_t<std::uint8_t> out({map.height, map.width});
  std::copy(map.labels.begin(), map.labels.end(), out.mutable_data());
  return out;
}

std::string ellipse_repr(const Ellipse& e) {
  std::ostringstream s;
  s.precision(6);
  s << "Ellipse(x=" << e.x() << ", y=" << e.y() << ", a=" << e.a() << ", b=" << e.b()
    << ", theta=" << e.theta() << ")";
  return s.str();
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["iou_thresholds"] = r.iou_thresholds;
  d["ap"] = r.ap;
  d["ap_star"] = r.ap_star;
  d["mr"] = r.mr;
  d["mr_star"] = r.mr_star;
  d["ap_angle_thresholds"] = r.ap_angle_thresholds;
  d["ap_theta"] = r.ap_theta;
  d["ap_theta_star"] = r.ap_theta_star;
  d["mr_angle_thresholds"] = r.mr_angle_thresholds;
  d["mr_theta"] = r.mr_theta;
  d["mr_theta_star"] = r.mr_theta_star;
  d["csv"] = report_csv(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ellipse detection geometry, metrics and multi-view ellipsoid tools";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  auto not_ellipse = py::register_exception<NotAnEllipse>(m, "NotAnEllipse", PyExc_RuntimeError);
  py::register_exception<BehindCamera>(m, "BehindCamera", not_ellipse.ptr());
  py::register_exception<NotAnEllipsoid>(m, "NotAnEllipsoid", PyExc_RuntimeError);
  py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_RuntimeError);
  py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure", PyExc_RuntimeError);
  py::register_exception<IllConditioned>(m, "IllConditioned", PyExc_RuntimeError);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_RuntimeError);
  py::register_exception<SceneGenerationFailed>(m, "SceneGenerationFailed", PyExc_RuntimeError);

  // Geometry.
  py::class_<Ellipse>(m, "Ellipse")
      .def(py::init<double, double, double, double, double>(), py::arg("x"), py::arg("y"),
           py::arg("a"), py::arg("b"), py::arg("theta"))
      .def_property_readonly("x", &Ellipse::x)
      .def_property_readonly("y", &Ellipse::y)
      .def_property_readonly("a", &Ellipse::a)
      .def_property_readonly("b", &Ellipse::b)
      .def_property_readonly("theta", &Ellipse::theta)
      .def_property_readonly("area", &Ellipse::area)
      .def("contains", [](const Ellipse& e, double px, double py) { return contains(e, px, py); })
      .def("to_conic", [](const Ellipse& e) { return ellipse_to_conic(e).m; })
      .def("to_dual_conic", &ellipse_to_dual_conic)
      .def("__eq__", [](const Ellipse& a, const Ellipse& b) { return a == b; })
      .def("__repr__", &ellipse_repr);

  py::class_<BoxRegion>(m, "BoxRegion")
      .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("w"),
           py::arg("h"))
      .def_property_readonly("x", &BoxRegion::x)
      .def_property_readonly("y", &BoxRegion::y)
      .def_property_readonly("w", &BoxRegion::w)
      .def_property_readonly("h", &BoxRegion::h)
      .def("__eq__", [](const BoxRegion& a, const BoxRegion& b) { return a == b; });

  py::class_<SquareRegion>(m, "SquareRegion")
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("l"))
      .def_property_readonly("x", &SquareRegion::x)
      .def_property_readonly("y", &SquareRegion::y)
      .def_property_readonly("l", &SquareRegion::l)
      .def("__eq__", [](const SquareRegion& a, const SquareRegion& b) { return a == b; });

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](double ox, double oy, double cell, int cols, int rows) {
             GridSpec g{ox, oy, cell, cols, rows};
             g.validate();
             return g;
           }),
           py::arg("origin_x"), py::arg("origin_y"), py::arg("cell"), py::arg("cols"), py::arg("rows"))
      .def_readonly("origin_x", &GridSpec::origin_x)
      .def_readonly("origin_y", &GridSpec::origin_y)
      .def_readonly("cell", &GridSpec::cell)
      .def_readonly("cols", &GridSpec::cols)
      .def_readonly("rows", &GridSpec::rows);

  m.def("normalize_angle", &normalize_angle, py::arg("theta"));
  m.def("aa_box", &aa_box, py::arg("ellipse"));
  m.def("enclosing_square", &enclosing_square, py::arg("ellipse"));
  m.def("extend_box_to_square", &extend_box_to_square, py::arg("box"));
  m.def("conic_to_ellipse", [](const Eigen::Matrix3d& c) { return conic_to_ellipse({c}); },
        py::arg("conic"));
  m.def("dual_conic_to_ellipse", &dual_conic_to_ellipse, py::arg("dual"));
  m.def("rasterize", [](const Ellipse& e, const GridSpec& g) { return mask_to_array(rasterize(e, g)); },
        py::arg("ellipse"), py::arg("grid"), "Boolean (rows, cols) array of cells whose centers lie inside.");

  // Regression codec.
  m.def(
      "encode_ellipse",
      [](const SquareRegion& q, const Ellipse& e, std::optional<double> s) {
        const EllipseOffsets d = s ? encode_ellipse(q, e, VisibilityScale(*s)) : encode_ellipse_unoccluded(q, e);
        return d.as_array();
      },
      py::arg("square"), py::arg("ellipse"), py::arg("scale") = py::none(),
      "Six offsets (dx, dy, da, db, ds, dtheta); without a scale the object is taken as unoccluded.");
  m.def(
      "decode_ellipse",
      [](const SquareRegion& q, const std::array<double, 6>& d) {
        const DecodedEllipse out = decode_ellipse(q, EllipseOffsets::from_array(d));
        return py::make_tuple(out.ellipse, out.scale);
      },
      py::arg("square"), py::arg("offsets"), "Returns (ellipse, visibility scale).");
  m.def("visibility_scale", [](const SquareRegion& q, const Ellipse& e) { return visibility_scale(q, e).value(); },
        py::arg("square"), py::arg("ellipse"));
  m.def("angle_residual", &angle_residual, py::arg("d"), py::arg("d_star"));
  m.def("smooth_l1", &smooth_l1, py::arg("x"));
  m.def(
      "ellipse_loss",
      [](const std::array<double, 6>& d, const std::array<double, 6>& t, bool positive) {
        return ellipse_loss(EllipseOffsets::from_array(d), EllipseOffsets::from_array(t), positive);
      },
      py::arg("predicted"), py::arg("target"), py::arg("positive") = true);
  m.def(
      "ellipse_loss_grad",
      [](const std::array<double, 6>& d, const std::array<double, 6>& t) {
        return ellipse_loss_grad(EllipseOffsets::from_array(d), EllipseOffsets::from_array(t)).as_array();
      },
      py::arg("predicted"), py::arg("target"));

  // Region refinement.
  m.def(
      "occlusion_target",
      [](const Ellipse& e, const BoxRegion& visible, int size) {
        const OcclusionTarget t = occlusion_target(e, visible, size);
        return py::make_tuple(mask_to_array(t.whole_mask), mask_to_array(t.visible_mask));
      },
      py::arg("ellipse"), py::arg("visible"), py::arg("size") = kDefaultMaskSize,
      "Returns (whole, visible) boolean masks over the extended square of the visible box.");
  m.def(
      "validity_mask",
      [](const SquareRegion& q, const BoxRegion& visible, int size) {
        return mask_to_array(validity_mask(q, visible, size));
      },
      py::arg("square"), py::arg("visible"), py::arg("size") = kDefaultMaskSize);
  m.def(
      "bce_mask_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred, const BoolImage& target) {
        if (pred.ndim() != 2) throw InvalidArgument("predictions must be a 2-D array");
        ProbabilityGrid grid{static_cast<int>(pred.shape(1)), static_cast<int>(pred.shape(0)),
                             std::vector<double>(pred.data(), pred.data() + pred.size())};
        return bce_mask_loss(grid, array_to_mask(target));
      },
      py::arg("predicted"), py::arg("target"));

  // Metrics.
  py::class_<GtRecord>(m, "GtRecord")
      .def(py::init([](std::string id, const Ellipse& e, std::optional<BoxRegion> box, double vis) {
             return GtRecord{std::move(id), e, box, vis};
           }),
           py::arg("image_id"), py::arg("ellipse"), py::arg("visible_box") = py::none(),
           py::arg("visibility") = 1.0)
      .def_readonly("image_id", &GtRecord::image_id)
      .def_readonly("ellipse", &GtRecord::ellipse)
      .def_readonly("visible_box", &GtRecord::visible_box)
      .def_readonly("visibility", &GtRecord::visibility);

  py::class_<DetectionRecord>(m, "DetectionRecord")
      .def(py::init([](std::string id, const Ellipse& e, double score) {
             return DetectionRecord{std::move(id), e, score};
           }),
           py::arg("image_id"), py::arg("ellipse"), py::arg("score"))
      .def_readonly("image_id", &DetectionRecord::image_id)
      .def_readonly("ellipse", &DetectionRecord::ellipse)
      .def_readonly("score", &DetectionRecord::score);

  m.def("ellipse_iou", &ellipse_iou, py::arg("e1"), py::arg("e2"),
        py::arg("resolution") = kDefaultIouResolution);
  m.def("angle_error", &angle_error, py::arg("e1"), py::arg("e2"));
  m.def(
      "average_precision",
      [](const std::vector<DetectionRecord>& dets, const std::vector<GtRecord>& gts, double iou,
         std::optional<double> angle) {
        return average_precision(dets, gts, MatchCriteria{iou, angle});
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("iou_threshold") = 0.5,
      py::arg("angle_threshold_deg") = py::none());
  m.def(
      "log_avg_miss_rate",
      [](const std::vector<DetectionRecord>& dets, const std::vector<GtRecord>& gts, double iou,
         std::optional<double> angle) {
        return log_avg_miss_rate(dets, gts, MatchCriteria{iou, angle});
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("iou_threshold") = 0.5,
      py::arg("angle_threshold_deg") = py::none());
  m.def(
      "evaluate",
      [](const std::vector<DetectionRecord>& dets, const std::vector<GtRecord>& gts, const std::string& preset,
         bool circular_exempt, int threads) {
        EvalConfig cfg = EvalConfig::preset(preset);
        cfg.circular_angle_exempt = circular_exempt;
        cfg.threads = threads;
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = evaluate(dets, gts, cfg);
        }
        return report_dict(r);
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("preset") = "default",
      py::arg("circular_exempt") = false, py::arg("threads") = 1);

  // Ellipse fitting.
  m.def(
      "mvee",
      [](const PointArray& pts, double tol, int max_iter) {
        const auto points = to_points(pts);
        const MveeFit fit = mvee_fit(points, tol, max_iter);
        return py::make_tuple(fit.ellipse, fit.iterations);
      },
      py::arg("points"), py::arg("tol") = kMveeDefaultTol, py::arg("max_iter") = kMveeDefaultMaxIter,
      "Minimum-volume enclosing ellipse of an (n, 2) point array. Returns (ellipse, iterations).");
  m.def(
      "mask_points",
      [](const BoolImage& mask, const GridSpec& grid) {
        const auto pts = mask_to_points(array_to_mask(mask), grid);
        PointArray out(static_cast<Eigen::Index>(pts.size()), 2);
        for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
        return out;
      },
      py::arg("mask"), py::arg("grid"), "Centers of the boundary cells of a (rows, cols) mask.");

  // Multi-view ellipsoids.
  py::class_<EllipsoidPose>(m, "EllipsoidPose")
      .def(py::init([](const Eigen::Vector3d& c, const Eigen::Vector3d& axes, const Eigen::Matrix3d& r) {
             return EllipsoidPose{c, axes, r};
           }),
           py::arg("center"), py::arg("semi_axes"), py::arg("rotation"))
      .def_readonly("center", &EllipsoidPose::center)
      .def_readonly("semi_axes", &EllipsoidPose::semi_axes)
      .def_readonly("rotation", &EllipsoidPose::rotation);

  py::class_<PoseErrors>(m, "PoseErrors")
      .def_readonly("rotation_deg", &PoseErrors::rotation_deg)
      .def_readonly("position", &PoseErrors::position)
      .def_readonly("relative_size", &PoseErrors::relative_size);

  m.def("look_at_camera",
        [](double f, double cx, double cy, const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
           const Eigen::Vector3d& up) { return Eigen::MatrixXd(look_at_camera(f, cx, cy, eye, target, up).p()); },
        py::arg("focal"), py::arg("cx"), py::arg("cy"), py::arg("eye"), py::arg("target"),
        py::arg("up") = Eigen::Vector3d::UnitY().eval(), "3x4 projection matrix.");
  m.def("ellipsoid_to_quadric", [](const EllipsoidPose& p) { return ellipsoid_to_quadric(p).q; },
        py::arg("pose"), "4x4 dual quadric.");
  m.def("decompose_quadric", [](const Eigen::Matrix4d& q) { return decompose_quadric({q}); },
        py::arg("quadric"));
  m.def("project", [](const Eigen::Matrix4d& q, const Matrix34d& p) { return project({q}, CameraMatrix(p)); },
        py::arg("quadric"), py::arg("camera"));
  m.def(
      "reconstruct",
      [](const std::vector<Matrix34d>& cams, const std::vector<Ellipse>& ellipses) {
        if (cams.size() != ellipses.size()) throw InvalidArgument("cameras and ellipses differ in length");
        std::vector<View> views;
        for (std::size_t i = 0; i < cams.size(); ++i) views.push_back({CameraMatrix(cams[i]), ellipses[i]});
        return reconstruct(views).q;
      },
      py::arg("cameras"), py::arg("ellipses"), "4x4 dual quadric from at least three views.");
  m.def("pose_errors", &pose_errors, py::arg("estimate"), py::arg("truth"));

  // Synthetic scenes.
  m.def(
      "generate_dataset",
      [](const std::string& config_json, int threads) {
        const SceneConfig cfg = io::parse_scene_config(config_json);
        std::vector<AnnotatedScene> scenes;
        {
          py::gil_scoped_release release;
          scenes = generate_dataset(cfg, threads);
        }
        py::list out;
        for (const auto& s : scenes) {
          py::dict d;
          d["image_id"] = s.image_id;
          d["gt"] = s.gt;
          d["labels"] = s.raster ? py::object(labels_to_array(*s.raster)) : py::object(py::none());
          out.append(d);
        }
        return out;
      },
      py::arg("config_json") = "{}", py::arg("threads") = 1,
      "Scenes as dicts with image_id, gt and labels (a uint8 image when raster is set).");

  // Text formats.
  m.def("annotation_line", &io::annotation_line, py::arg("gt"));
  m.def("parse_annotation", &io::parse_annotation, py::arg("line"));
  m.def("detection_line", [](const DetectionRecord& d) { return io::detection_line(d); }, py::arg("detection"));
  m.def("parse_detection", [](const std::string& line) { return io::parse_detection(line).det; }, py::arg("line"));
}
