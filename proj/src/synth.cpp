#include "ellipsekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ellipsekit/errors.hpp"
#include "ellipsekit/parallel.hpp"

namespace ellipsekit {
namespace {

void check_range(const Range& r, const char* name, double min_lo, double max_hi) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || r.lo < min_lo ||
      r.hi > max_hi) {
    std::ostringstream os;
    os << "invalid " << name << " range [" << r.lo << ", " << r.hi << "]";
    throw InvalidArgument(os.str());
  }
}

void check_range(const IntRange& r, const char* name, int min_lo) {
  if (r.lo > r.hi || r.lo < min_lo) {
    std::ostringstream os;
    os << "invalid " << name << " range [" << r.lo << ", " << r.hi << "]";
    throw InvalidArgument(os.str());
  }
}

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

Triangle sample_triangle(SceneRng& rng, const Ellipse& near) {
  const double reach = near.a();
  const double angle = rng.uniform(-kPi, kPi);
  const double offset = rng.uniform(0.3, 1.0) * reach;
  const Eigen::Vector2d centroid(near.x() + offset * std::cos(angle),
                                 near.y() + offset * std::sin(angle));
  Triangle t;
  double phi = rng.uniform(-kPi, kPi);
  for (auto& v : t.v) {
    const double r = rng.uniform(0.4, 1.0) * reach;
    v = centroid + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    phi += rng.uniform(kPi / 3.0, 5.0 * kPi / 6.0);
  }
  return t;
}

}  // namespace

std::uint64_t SceneRng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SceneRng::uniform(double lo, double hi) {
  const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

int SceneRng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

std::uint64_t scene_seed(std::uint64_t seed, std::uint64_t index) {
  SceneRng mix(seed ^ (index * 0xD1B54A32D192ED03ull));
  return mix.next();
}

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0 || width > 8192 || height > 8192) {
    throw InvalidArgument("image size must be in [1, 8192]");
  }
  check_range(objects, "object count", 1);
  if (objects.hi > 254) throw InvalidArgument("at most 254 objects per scene");
  check_range(size_scale, "size scale", 1e-6, 1e9);
  if (!(size_scale.lo > 0.0)) throw InvalidArgument("size scale must be positive");
  check_range(center_translation, "center translation", 0.0, 1e9);
  check_range(axes_ratio, "axes ratio", 1e-6, 1.0);
  if (!(axes_ratio.lo > 0.0)) throw InvalidArgument("axes ratio must be positive");
  check_range(visibility, "visibility", 0.0, 1.0);
  if (!(visibility.hi > 0.0)) throw InvalidArgument("visibility range must include values > 0");
  check_range(triangles, "triangle count", 0);
  if (max_retries < 1) throw InvalidArgument("max_retries must be at least 1");
  if (num_images < 0) throw InvalidArgument("num_images must be non-negative");
}

bool Triangle::contains(double px, double py) const {
  const double e0 = edge(v[0], v[1], px, py);
  const double e1 = edge(v[1], v[2], px, py);
  const double e2 = edge(v[2], v[0], px, py);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

Ellipse sample_ellipse(SceneRng& rng, const SceneConfig& config,
                       std::optional<Eigen::Vector2d> anchor) {
  config.validate();
  const double a = rng.uniform(config.size_scale.lo, config.size_scale.hi);
  const double ratio = rng.uniform(config.axes_ratio.lo, config.axes_ratio.hi);
  const double theta = rng.uniform(-kPi / 2.0, kPi / 2.0);
  double x = 0.0;
  double y = 0.0;
  if (anchor) {
    const double r = rng.uniform(config.center_translation.lo, config.center_translation.hi);
    const double dir = rng.uniform(-kPi, kPi);
    x = std::clamp(anchor->x() + r * std::cos(dir), 0.0, static_cast<double>(config.width));
    y = std::clamp(anchor->y() + r * std::sin(dir), 0.0, static_cast<double>(config.height));
  } else {
    x = rng.uniform(0.0, config.width);
    y = rng.uniform(0.0, config.height);
  }
  return {x, y, a, std::max(a * ratio, 1e-9), theta};
}

LayeredScene render_layers(int width, int height, std::span<const Ellipse> far_to_near,
                           std::span<const Triangle> occluders) {
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (far_to_near.size() > 254) throw InvalidArgument("at most 254 layered objects");
  const GridSpec image{0.0, 0.0, 1.0, width, height};
  LayeredScene out;
  out.owner = {width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  const std::size_t n = far_to_near.size();
  out.whole_cells.assign(n, 0);
  out.visible_cells.assign(n, 0);
  out.visibility.assign(n, 0.0);
  out.visible_box.assign(n, std::nullopt);

  for (std::size_t i = 0; i < n; ++i) {
    const Ellipse& e = far_to_near[i];
    const Mask m = rasterize(e, image);
    for (std::size_t c = 0; c < m.cells().size(); ++c) {
      if (m.cells()[c]) out.owner.labels[c] = static_cast<std::uint8_t>(i + 1);
    }
    // Whole-object area on the same pixel lattice, unclipped by the image.
    const AaExtent ext = aa_extent(e);
    GridSpec full;
    full.origin_x = std::floor(e.x() - ext.dx / 2.0) - 1.0;
    full.origin_y = std::floor(e.y() - ext.dy / 2.0) - 1.0;
    full.cols = static_cast<int>(std::ceil(e.x() + ext.dx / 2.0) - full.origin_x) + 1;
    full.rows = static_cast<int>(std::ceil(e.y() + ext.dy / 2.0) - full.origin_y) + 1;
    out.whole_cells[i] = rasterize(e, full).count();
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (const auto& t : occluders) {
        if (t.contains(c + 0.5, r + 0.5)) {
          out.owner.labels[static_cast<std::size_t>(r) * width + c] = kOccluderLabel;
          break;
        }
      }
    }
  }

  std::vector<std::array<int, 4>> extent(n, {width, height, -1, -1});
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::uint8_t label = out.owner.labels[static_cast<std::size_t>(r) * width + c];
      if (label == 0 || label == kOccluderLabel) continue;
      const std::size_t i = label - 1u;
      ++out.visible_cells[i];
      auto& b = extent[i];
      b = {std::min(b[0], c), std::min(b[1], r), std::max(b[2], c), std::max(b[3], r)};
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.whole_cells[i] > 0) {
      out.visibility[i] = static_cast<double>(out.visible_cells[i]) /
                          static_cast<double>(out.whole_cells[i]);
    }
    if (out.visible_cells[i] == 0) continue;
    // Tight pixel box of the visible cells, clipped to the object's own box.
    const BoxRegion whole = aa_box(far_to_near[i]);
    const auto& b = extent[i];
    const double x0 = std::max<double>(b[0], whole.x() - whole.w() / 2.0);
    const double y0 = std::max<double>(b[1], whole.y() - whole.h() / 2.0);
    const double x1 = std::min<double>(b[2] + 1.0, whole.x() + whole.w() / 2.0);
    const double y1 = std::min<double>(b[3] + 1.0, whole.y() + whole.h() / 2.0);
    if (x1 > x0 && y1 > y0) {
      out.visible_box[i] = BoxRegion((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0);
    }
  }
  return out;
}

AnnotatedScene compose_scene(SceneRng& rng, const SceneConfig& config,
                             const std::string& image_id) {
  config.validate();
  const auto in_range = [&](double v) {
    return v > 0.0 && v >= config.visibility.lo && v <= config.visibility.hi;
  };
  std::ostringstream diag;
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    const int count = rng.uniform_int(config.objects.lo, config.objects.hi);
    const double margin = 0.2;
    const Eigen::Vector2d anchor(rng.uniform(margin * config.width, (1 - margin) * config.width),
                                 rng.uniform(margin * config.height, (1 - margin) * config.height));
    std::vector<Ellipse> objects;
    for (int i = 0; i < count; ++i) objects.push_back(sample_ellipse(rng, config, anchor));

    // Random depth order (Fisher-Yates), far to near.
    std::vector<std::size_t> depth(objects.size());
    std::iota(depth.begin(), depth.end(), 0);
    for (std::size_t i = depth.size(); i > 1; --i) {
      std::swap(depth[i - 1], depth[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    }

    std::vector<Triangle> occluders;
    const int n_tri = rng.uniform_int(config.triangles.lo, config.triangles.hi);
    for (int t = 0; t < n_tri; ++t) {
      occluders.push_back(sample_triangle(rng, objects[static_cast<std::size_t>(rng.uniform_int(0, count - 1))]));
    }

    std::vector<std::size_t> kept = depth;
    LayeredScene layers;
    for (;;) {
      std::vector<Ellipse> layered;
      for (std::size_t idx : kept) layered.push_back(objects[idx]);
      layers = render_layers(config.width, config.height, layered, occluders);
      std::vector<std::size_t> next;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        if (in_range(layers.visibility[k]) && layers.visible_box[k]) next.push_back(kept[k]);
      }
      if (next.size() == kept.size()) break;
      kept = std::move(next);
      if (kept.empty()) break;
    }
    if (kept.empty()) {
      diag << " attempt " << attempt << ": none of " << count << " objects in range;";
      continue;
    }

    // Annotate in sampling order; labels follow annotation order.
    std::vector<std::size_t> layer_of(objects.size(), objects.size());
    for (std::size_t k = 0; k < kept.size(); ++k) layer_of[kept[k]] = k;
    AnnotatedScene scene;
    scene.image_id = image_id;
    scene.occluders = occluders;
    std::vector<std::uint8_t> relabel(256, 0);
    relabel[kOccluderLabel] = kOccluderLabel;
    for (std::size_t obj = 0; obj < objects.size(); ++obj) {
      const std::size_t k = layer_of[obj];
      if (k == objects.size()) continue;
      scene.gt.push_back({image_id, objects[obj], layers.visible_box[k], layers.visibility[k]});
      relabel[k + 1] = static_cast<std::uint8_t>(scene.gt.size());
    }
    if (config.raster) {
      LabelMap map = layers.owner;
      for (auto& l : map.labels) l = relabel[l];
      scene.raster = std::move(map);
    }
    return scene;
  }
  throw SceneGenerationFailed("could not satisfy the visibility range for " + image_id +
                              " after " + std::to_string(config.max_retries) + " attempts;" +
                              diag.str().substr(0, 400));
}

std::vector<AnnotatedScene> generate_dataset(const SceneConfig& config, int threads) {
  config.validate();
  std::vector<std::optional<AnnotatedScene>> slots(static_cast<std::size_t>(config.num_images));
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    SceneRng rng(scene_seed(config.seed, i));
    char id[32];
    std::snprintf(id, sizeof(id), "scene_%06zu", i);
    slots[i] = compose_scene(rng, config, id);
  });
  std::vector<AnnotatedScene> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<View> project_multiview(const DualQuadric& ellipsoid,
                                    std::span<const CameraMatrix> cameras) {
  std::vector<View> out;
  out.reserve(cameras.size());
  for (const auto& cam : cameras) out.push_back({cam, project(ellipsoid, cam)});
  return out;
}

}  // namespace ellipsekit
