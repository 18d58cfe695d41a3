#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ellipsekit/geometry.hpp"

namespace ellipsekit {

struct DetectionRecord {
  std::string image_id;
  Ellipse ellipse;
  double score = 0.0;
};

struct GtRecord {
  std::string image_id;
  Ellipse ellipse;
  std::optional<BoxRegion> visible_box;
  double visibility = 1.0;
};

inline constexpr int kDefaultIouResolution = 256;
/// Floor applied to miss rates before the log-average.
inline constexpr double kMissRateFloor = 1e-4;
inline constexpr int kFppiPoints = 9;

/// IoU of the filled ellipses, by rasterizing both on one grid that covers
/// the union of their bounding boxes with `resolution` cells on its longer
/// side. Symmetric in its arguments.
double ellipse_iou(const Ellipse& e1, const Ellipse& e2, int resolution = kDefaultIouResolution);

/// Orientation difference in degrees, in [0, 90], modulo 180.
double angle_error(const Ellipse& e1, const Ellipse& e2);

/// The nine FPPI reference points 10^(-2 + k/4), k = 0..8.
std::vector<double> fppi_reference_points();

struct MatchCriteria {
  double iou_threshold = 0.5;
  std::optional<double> angle_threshold_deg;
  // When set, GT with b/a above circular_ratio skip the angle criterion.
  bool circular_angle_exempt = false;
  double circular_ratio = 0.95;
};

struct MatchResult {
  std::vector<bool> det_tp;      // by detection input index
  std::vector<bool> gt_matched;  // by GT input index
};

struct PrPoint {
  double recall;
  double precision;
};

struct MissRatePoint {
  double fppi;
  double miss_rate;
};

/// Pairwise IoU and angle errors precomputed once, so many criteria can be
/// evaluated against the same detections.
class DetectionEvaluator {
 public:
  DetectionEvaluator(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                     int iou_resolution = kDefaultIouResolution, int threads = 1);

  /// Greedy one-to-one matching. Detections are visited by descending score,
  /// ties broken by (image_id, input index); each takes the unmatched GT of
  /// its image with the highest IoU passing the criteria.
  MatchResult match(const MatchCriteria& criteria) const;

  /// All-point interpolated average precision. Throws UndefinedMetric with no GT.
  double average_precision(const MatchCriteria& criteria) const;

  /// Geometric mean of the miss rates at the nine FPPI reference points.
  /// Throws UndefinedMetric with no GT.
  double log_avg_miss_rate(const MatchCriteria& criteria) const;

  /// Precision/recall after each detection in score order.
  std::vector<PrPoint> pr_curve(const MatchCriteria& criteria) const;

  /// FPPI/miss-rate operating points, starting with the empty detection set.
  std::vector<MissRatePoint> miss_rate_curve(const MatchCriteria& criteria) const;

  std::size_t num_gt() const { return gt_image_.size(); }
  std::size_t num_images() const { return num_images_; }
  /// Detection indices in evaluation order.
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  struct Candidate {
    std::size_t gt;
    double iou;
    double angle_deg;
  };

  std::vector<bool> tp_in_order(const MatchCriteria& criteria,
                                std::vector<bool>* gt_matched = nullptr) const;

  std::size_t num_dets_ = 0;
  std::size_t num_images_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> gt_image_;
  std::vector<double> gt_axis_ratio_;
  std::vector<std::vector<Candidate>> candidates_;  // by detection input index
};

MatchResult match_detections(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                             const MatchCriteria& criteria,
                             int iou_resolution = kDefaultIouResolution);

double average_precision(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                         const MatchCriteria& criteria,
                         int iou_resolution = kDefaultIouResolution);

double log_avg_miss_rate(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                         const MatchCriteria& criteria,
                         int iou_resolution = kDefaultIouResolution);

/// Threshold grids for a full report.
struct EvalConfig {
  std::vector<double> iou_thresholds;       // strictly increasing, in (0, 1)
  std::vector<double> ap_angle_thresholds;  // degrees, for AP^theta
  std::vector<double> mr_angle_thresholds;  // degrees, for MR^theta
  double default_iou = 0.75;                // IoU used with the angle criteria
  bool circular_angle_exempt = false;
  double circular_ratio = 0.95;
  int iou_resolution = kDefaultIouResolution;
  int threads = 1;

  /// "soe", "sof" (alias "rof") or "default". Throws InvalidArgument otherwise.
  static EvalConfig preset(std::string_view name);
  void validate() const;
};

struct EvalReport {
  std::vector<double> iou_thresholds;
  std::vector<double> ap;
  double ap_star = 0.0;
  std::vector<double> mr;
  double mr_star = 0.0;
  std::vector<double> ap_angle_thresholds;
  std::vector<double> ap_theta;
  double ap_theta_star = 0.0;
  std::vector<double> mr_angle_thresholds;
  std::vector<double> mr_theta;
  double mr_theta_star = 0.0;
};

EvalReport evaluate(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                    const EvalConfig& config);

/// CSV header and single data row (4 significant digits, miss rates at the
/// floor shown as zero).
std::string report_csv(const EvalReport& report);

/// Human-readable summary table (percent).
std::string report_table(const EvalReport& report);

}  // namespace ellipsekit
