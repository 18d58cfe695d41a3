#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ellipsekit/geometry.hpp"
#include "ellipsekit/metrics.hpp"
#include "ellipsekit/quadric.hpp"

namespace ellipsekit {

/// Small deterministic generator (splitmix64). Streams are identical across
/// platforms and standard libraries, which keeps generated datasets
/// byte-identical for a given seed.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

 private:
  std::uint64_t state_;
};

/// Seed of scene `index` derived from the dataset seed.
std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SceneConfig {
  int width = 128;
  int height = 128;
  IntRange objects{3, 6};
  Range size_scale{10.0, 24.0};         // semi-major axis, pixels
  Range center_translation{0.0, 22.0};  // distance of each center from the cluster anchor
  Range axes_ratio{0.5, 1.0};           // b / a
  Range visibility{0.3, 0.6};           // accepted area visibility
  IntRange triangles{1, 3};
  int max_retries = 200;
  std::uint64_t seed = 0;
  int num_images = 1;
  bool raster = false;

  void validate() const;
};

struct Triangle {
  std::array<Eigen::Vector2d, 3> v;

  bool contains(double px, double py) const;
};

/// Per-pixel owner map: 0 background, k for the k-th annotated object
/// (1-based), 255 for occluders.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;
};

inline constexpr std::uint8_t kOccluderLabel = 255;

struct AnnotatedScene {
  std::string image_id;
  std::vector<GtRecord> gt;
  std::vector<Triangle> occluders;
  std::optional<LabelMap> raster;
};

/// Ellipse drawn from the configured priors. Without an anchor the center
/// is uniform over the image; with one it is offset from the anchor by the
/// center translation prior and kept inside the image.
Ellipse sample_ellipse(SceneRng& rng, const SceneConfig& config,
                       std::optional<Eigen::Vector2d> anchor = std::nullopt);

/// Occlusion bookkeeping for ellipses painted far to near, then triangles.
struct LayeredScene {
  LabelMap owner;                 // 0 background, i+1 for ellipse i, 255 occluder
  std::vector<std::int64_t> whole_cells;
  std::vector<std::int64_t> visible_cells;
  std::vector<double> visibility;
  std::vector<std::optional<BoxRegion>> visible_box;
};

/// Rasterizes at one cell per pixel. Whole-cell counts include the parts of
/// an ellipse outside the image.
LayeredScene render_layers(int width, int height, std::span<const Ellipse> far_to_near,
                           std::span<const Triangle> occluders);

/// One synthetic scene: a cluster of ellipses in random depth order plus
/// triangle occluders. Objects whose visibility falls outside the configured
/// range are removed until the rest all comply; the whole scene is redrawn
/// when nothing survives. Throws SceneGenerationFailed after max_retries.
AnnotatedScene compose_scene(SceneRng& rng, const SceneConfig& config,
                             const std::string& image_id);

/// config.num_images scenes with ids "scene_000000", ... and per-scene
/// derived seeds. Output order is independent of the thread count.
std::vector<AnnotatedScene> generate_dataset(const SceneConfig& config, int threads = 1);

/// Image ellipse of the ellipsoid in every camera.
std::vector<View> project_multiview(const DualQuadric& ellipsoid,
                                    std::span<const CameraMatrix> cameras);

}  // namespace ellipsekit
