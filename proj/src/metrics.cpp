#include "ellipsekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "ellipsekit/errors.hpp"
#include "ellipsekit/parallel.hpp"

namespace ellipsekit {
namespace {

struct Bounds {
  double x0, y0, x1, y1;
};

Bounds bounds_of(const Ellipse& e) {
  const AaExtent ext = aa_extent(e);
  return {e.x() - ext.dx / 2, e.y() - ext.dy / 2, e.x() + ext.dx / 2, e.y() + ext.dy / 2};
}

std::vector<double> threshold_range(double start, double stop, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::lround((stop - start) / step)) + 1;
  for (int i = 0; i < n; ++i) out.push_back(std::round((start + i * step) * 1e6) / 1e6);
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double ellipse_iou(const Ellipse& e1, const Ellipse& e2, int resolution) {
  if (resolution < 1) throw InvalidArgument("IoU resolution must be positive");
  const Bounds b1 = bounds_of(e1);
  const Bounds b2 = bounds_of(e2);
  if (b1.x1 <= b2.x0 || b2.x1 <= b1.x0 || b1.y1 <= b2.y0 || b2.y1 <= b1.y0) return 0.0;
  const double x0 = std::min(b1.x0, b2.x0);
  const double y0 = std::min(b1.y0, b2.y0);
  const double w = std::max(b1.x1, b2.x1) - x0;
  const double h = std::max(b1.y1, b2.y1) - y0;
  GridSpec grid;
  grid.origin_x = x0;
  grid.origin_y = y0;
  grid.cell = std::max(w, h) / resolution;
  grid.cols = std::max(1, static_cast<int>(std::ceil(w / grid.cell)));
  grid.rows = std::max(1, static_cast<int>(std::ceil(h / grid.cell)));
  const Mask m1 = rasterize(e1, grid);
  const Mask m2 = rasterize(e2, grid);
  std::int64_t inter = 0;
  std::int64_t uni = 0;
  const auto& c1 = m1.cells();
  const auto& c2 = m2.cells();
  for (std::size_t i = 0; i < c1.size(); ++i) {
    inter += c1[i] & c2[i];
    uni += c1[i] | c2[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double angle_error(const Ellipse& e1, const Ellipse& e2) {
  return std::abs(normalize_angle(e1.theta() - e2.theta())) * 180.0 / kPi;
}

std::vector<double> fppi_reference_points() {
  std::vector<double> refs;
  for (int k = 0; k < kFppiPoints; ++k) refs.push_back(std::pow(10.0, -2.0 + k / 4.0));
  return refs;
}

DetectionEvaluator::DetectionEvaluator(std::span<const DetectionRecord> dets,
                                       std::span<const GtRecord> gts, int iou_resolution,
                                       int threads)
    : num_dets_(dets.size()) {
  std::map<std::string, std::size_t> image_index;
  for (const auto& g : gts) image_index.emplace(g.image_id, 0);
  for (const auto& d : dets) image_index.emplace(d.image_id, 0);
  std::size_t next = 0;
  for (auto& [id, idx] : image_index) idx = next++;
  num_images_ = image_index.size();

  std::vector<std::vector<std::size_t>> gts_by_image(num_images_);
  gt_image_.reserve(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const std::size_t img = image_index.at(gts[i].image_id);
    gt_image_.push_back(img);
    gt_axis_ratio_.push_back(gts[i].ellipse.b() / gts[i].ellipse.a());
    gts_by_image[img].push_back(i);
  }

  for (const auto& d : dets) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw InvalidArgument("detection score must lie in [0, 1]");
    }
  }
  order_.resize(dets.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].image_id < dets[b].image_id;
  });

  candidates_.resize(dets.size());
  parallel_for(dets.size(), threads, [&](std::size_t i) {
    const std::size_t img = image_index.at(dets[i].image_id);
    auto& cands = candidates_[i];
    for (std::size_t g : gts_by_image[img]) {
      const double iou = ellipse_iou(dets[i].ellipse, gts[g].ellipse, iou_resolution);
      if (iou <= 0.0) continue;
      cands.push_back({g, iou, angle_error(dets[i].ellipse, gts[g].ellipse)});
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.iou > b.iou; });
  });
}

std::vector<bool> DetectionEvaluator::tp_in_order(const MatchCriteria& criteria,
                                                  std::vector<bool>* gt_matched) const {
  std::vector<bool> gt_taken(gt_image_.size(), false);
  std::vector<bool> tp(order_.size(), false);
  for (std::size_t k = 0; k < order_.size(); ++k) {
    for (const Candidate& c : candidates_[order_[k]]) {
      if (c.iou < criteria.iou_threshold) break;
      if (gt_taken[c.gt]) continue;
      if (criteria.angle_threshold_deg) {
        const bool exempt =
            criteria.circular_angle_exempt && gt_axis_ratio_[c.gt] > criteria.circular_ratio;
        if (!exempt && c.angle_deg > *criteria.angle_threshold_deg) continue;
      }
      gt_taken[c.gt] = true;
      tp[k] = true;
      break;
    }
  }
  if (gt_matched) *gt_matched = std::move(gt_taken);
  return tp;
}

MatchResult DetectionEvaluator::match(const MatchCriteria& criteria) const {
  MatchResult out;
  const std::vector<bool> tp = tp_in_order(criteria, &out.gt_matched);
  out.det_tp.assign(num_dets_, false);
  for (std::size_t k = 0; k < order_.size(); ++k) out.det_tp[order_[k]] = tp[k];
  return out;
}

std::vector<PrPoint> DetectionEvaluator::pr_curve(const MatchCriteria& criteria) const {
  if (gt_image_.empty()) throw UndefinedMetric("precision/recall undefined without ground truth");
  const std::vector<bool> tp = tp_in_order(criteria);
  std::vector<PrPoint> curve;
  curve.reserve(tp.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    hits += tp[k] ? 1 : 0;
    curve.push_back({static_cast<double>(hits) / static_cast<double>(gt_image_.size()),
                     static_cast<double>(hits) / static_cast<double>(k + 1)});
  }
  return curve;
}

double DetectionEvaluator::average_precision(const MatchCriteria& criteria) const {
  if (gt_image_.empty()) throw UndefinedMetric("AP undefined without ground truth");
  const std::vector<bool> tp = tp_in_order(criteria);
  const std::vector<PrPoint> curve = pr_curve(criteria);
  std::vector<double> envelope(curve.size());
  double best = 0.0;
  for (std::size_t k = curve.size(); k-- > 0;) {
    best = std::max(best, curve[k].precision);
    envelope[k] = best;
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (tp[k]) ap += envelope[k];
  }
  return ap / static_cast<double>(gt_image_.size());
}

std::vector<MissRatePoint> DetectionEvaluator::miss_rate_curve(
    const MatchCriteria& criteria) const {
  if (gt_image_.empty()) throw UndefinedMetric("miss rate undefined without ground truth");
  const std::vector<bool> tp = tp_in_order(criteria);
  const double n_gt = static_cast<double>(gt_image_.size());
  const double n_img = static_cast<double>(num_images_);
  std::vector<MissRatePoint> curve{{0.0, 1.0}};
  std::size_t hits = 0;
  std::size_t false_pos = 0;
  for (bool t : tp) {
    (t ? hits : false_pos) += 1;
    curve.push_back({static_cast<double>(false_pos) / n_img, 1.0 - static_cast<double>(hits) / n_gt});
  }
  return curve;
}

double DetectionEvaluator::log_avg_miss_rate(const MatchCriteria& criteria) const {
  const std::vector<MissRatePoint> curve = miss_rate_curve(criteria);
  double log_sum = 0.0;
  for (double ref : fppi_reference_points()) {
    // FPPI is non-decreasing along the curve; take the last point within ref.
    double miss = 1.0;
    for (const auto& p : curve) {
      if (p.fppi <= ref) miss = p.miss_rate;
      else break;
    }
    log_sum += std::log(std::max(kMissRateFloor, miss));
  }
  return std::exp(log_sum / kFppiPoints);
}

MatchResult match_detections(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                             const MatchCriteria& criteria, int iou_resolution) {
  return DetectionEvaluator(dets, gts, iou_resolution).match(criteria);
}

double average_precision(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                         const MatchCriteria& criteria, int iou_resolution) {
  return DetectionEvaluator(dets, gts, iou_resolution).average_precision(criteria);
}

double log_avg_miss_rate(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                         const MatchCriteria& criteria, int iou_resolution) {
  return DetectionEvaluator(dets, gts, iou_resolution).log_avg_miss_rate(criteria);
}

EvalConfig EvalConfig::preset(std::string_view name) {
  EvalConfig cfg;
  if (name == "soe") {
    cfg.iou_thresholds = threshold_range(0.75, 0.95, 0.05);
    cfg.ap_angle_thresholds = threshold_range(10, 2, -2);
    cfg.mr_angle_thresholds = threshold_range(5, 1, -1);
    cfg.default_iou = 0.75;
  } else if (name == "sof" || name == "rof") {
    cfg.iou_thresholds = threshold_range(0.70, 0.90, 0.05);
    cfg.ap_angle_thresholds = threshold_range(45, 5, -10);
    cfg.mr_angle_thresholds = cfg.ap_angle_thresholds;
    cfg.default_iou = 0.70;
  } else if (name == "default") {
    cfg.iou_thresholds = threshold_range(0.75, 0.95, 0.05);
    cfg.ap_angle_thresholds = threshold_range(45, 5, -10);
    cfg.mr_angle_thresholds = cfg.ap_angle_thresholds;
    cfg.default_iou = 0.75;
  } else {
    throw InvalidArgument("unknown evaluation preset '" + std::string(name) + "'");
  }
  return cfg;
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) throw InvalidArgument("at least one IoU threshold is required");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("IoU thresholds must lie in (0, 1)");
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw InvalidArgument("IoU thresholds must be strictly increasing");
    }
  }
  if (!(default_iou > 0.0 && default_iou < 1.0)) {
    throw InvalidArgument("default IoU must lie in (0, 1)");
  }
  for (const auto* list : {&ap_angle_thresholds, &mr_angle_thresholds}) {
    for (double a : *list) {
      if (!(a > 0.0 && a <= 90.0)) throw InvalidArgument("angle thresholds must lie in (0, 90]");
    }
  }
  if (iou_resolution < 64) throw InvalidArgument("IoU resolution must be at least 64");
}

EvalReport evaluate(std::span<const DetectionRecord> dets, std::span<const GtRecord> gts,
                    const EvalConfig& config) {
  config.validate();
  if (gts.empty()) throw UndefinedMetric("evaluation requires at least one ground-truth object");
  const DetectionEvaluator evaluator(dets, gts, config.iou_resolution, config.threads);
  EvalReport report;
  report.iou_thresholds = config.iou_thresholds;
  report.ap_angle_thresholds = config.ap_angle_thresholds;
  report.mr_angle_thresholds = config.mr_angle_thresholds;

  auto criteria_for = [&](double iou, std::optional<double> angle) {
    MatchCriteria c;
    c.iou_threshold = iou;
    c.angle_threshold_deg = angle;
    c.circular_angle_exempt = config.circular_angle_exempt;
    c.circular_ratio = config.circular_ratio;
    return c;
  };
  for (double t : config.iou_thresholds) {
    report.ap.push_back(evaluator.average_precision(criteria_for(t, std::nullopt)));
    report.mr.push_back(evaluator.log_avg_miss_rate(criteria_for(t, std::nullopt)));
  }
  for (double a : config.ap_angle_thresholds) {
    report.ap_theta.push_back(evaluator.average_precision(criteria_for(config.default_iou, a)));
  }
  for (double a : config.mr_angle_thresholds) {
    report.mr_theta.push_back(evaluator.log_avg_miss_rate(criteria_for(config.default_iou, a)));
  }
  report.ap_star = mean_of(report.ap);
  report.mr_star = mean_of(report.mr);
  report.ap_theta_star = mean_of(report.ap_theta);
  report.mr_theta_star = mean_of(report.mr_theta);
  return report;
}

namespace {

std::string sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%#.4g", v);
  return buf;
}

// The geometric mean of floored values can land a rounding error above the floor.
bool at_floor(double mr) { return mr <= kMissRateFloor * (1.0 + 1e-9); }

std::string display_mr(double v) { return sig4(at_floor(v) ? 0.0 : v); }

std::string label(double v, double scale) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", std::round(v * scale * 1000.0) / 1000.0);
  return buf;
}

}  // namespace

std::string report_csv(const EvalReport& r) {
  std::vector<std::string> header;
  std::vector<std::string> row;
  header.push_back("AP_star");
  row.push_back(sig4(r.ap_star));
  for (std::size_t i = 0; i < r.ap.size(); ++i) {
    header.push_back("AP_" + label(r.iou_thresholds[i], 100));
    row.push_back(sig4(r.ap[i]));
  }
  header.push_back("MR_star");
  row.push_back(display_mr(r.mr_star));
  for (std::size_t i = 0; i < r.mr.size(); ++i) {
    header.push_back("MR_" + label(r.iou_thresholds[i], 100));
    row.push_back(display_mr(r.mr[i]));
  }
  header.push_back("AP_theta_star");
  row.push_back(sig4(r.ap_theta_star));
  for (std::size_t i = 0; i < r.ap_theta.size(); ++i) {
    header.push_back("AP_theta_" + label(r.ap_angle_thresholds[i], 1));
    row.push_back(sig4(r.ap_theta[i]));
  }
  header.push_back("MR_theta_star");
  row.push_back(display_mr(r.mr_theta_star));
  for (std::size_t i = 0; i < r.mr_theta.size(); ++i) {
    header.push_back("MR_theta_" + label(r.mr_angle_thresholds[i], 1));
    row.push_back(display_mr(r.mr_theta[i]));
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
  os << '\n';
  return os.str();
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[64];
  auto line = [&](const std::string& name, double v, bool miss) {
    std::snprintf(buf, sizeof(buf), "  %-16s %6.1f\n", name.c_str(),
                  100.0 * (miss && at_floor(v) ? 0.0 : v));
    os << buf;
  };
  os << "Ellipse IoU metrics (percent)\n";
  line("AP*", r.ap_star, false);
  for (std::size_t i = 0; i < r.ap.size(); ++i) {
    line("AP" + label(r.iou_thresholds[i], 100), r.ap[i], false);
  }
  line("MR*", r.mr_star, true);
  for (std::size_t i = 0; i < r.mr.size(); ++i) {
    line("MR" + label(r.iou_thresholds[i], 100), r.mr[i], true);
  }
  os << "Angle metrics (percent)\n";
  line("AP^theta*", r.ap_theta_star, false);
  for (std::size_t i = 0; i < r.ap_theta.size(); ++i) {
    line("AP^theta" + label(r.ap_angle_thresholds[i], 1), r.ap_theta[i], false);
  }
  line("MR^theta*", r.mr_theta_star, true);
  for (std::size_t i = 0; i < r.mr_theta.size(); ++i) {
    line("MR^theta" + label(r.mr_angle_thresholds[i], 1), r.mr_theta[i], true);
  }
  return os.str();
}

}  // namespace ellipsekit
