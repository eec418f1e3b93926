#include "roomlayout/layout_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>

namespace roomlayout {

namespace {

void check_labels(const SegmentationMap& seg, std::size_t n, const char* what) {
  for (auto label : seg.values()) {
    if (label != kUnassigned && (label < 0 || static_cast<std::size_t>(label) >= n)) {
      fail(ErrorCode::InvalidArgument, std::string(what) + ": label " + std::to_string(label) +
                                           " has no instance");
    }
  }
}

// Instances with positive inverse depth at one pixel, nearest first.
std::vector<std::int32_t> depth_layers(std::span<const SurfaceParams> instances, double u,
                                       double v) {
  std::vector<std::pair<double, std::int32_t>> order;
  for (std::size_t c = 0; c < instances.size(); ++c) {
    const double inv = instances[c].inverse_depth(u, v);
    if (inv > 0.0) order.push_back({-inv, static_cast<std::int32_t>(c)});
  }
  std::sort(order.begin(), order.end());
  std::vector<std::int32_t> out;
  out.reserve(order.size());
  for (const auto& [neg, c] : order) out.push_back(c);
  return out;
}

// 4-connected components of pixels with equal keys; pixels with key < 0 are skipped.
std::vector<std::vector<std::size_t>> components(const Grid<std::int64_t>& key) {
  std::vector<std::vector<std::size_t>> out;
  Grid<std::uint8_t> seen(key.width(), key.height(), 0);
  for (std::size_t start = 0; start < key.size(); ++start) {
    if (key[start] < 0 || seen[start]) continue;
    std::vector<std::size_t> comp;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    seen[start] = 1;
    while (!frontier.empty()) {
      const auto i = frontier.front();
      frontier.pop();
      comp.push_back(i);
      const int col = key.col_of(i);
      const int row = key.row_of(i);
      constexpr std::array<std::array<int, 2>, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
      for (const auto& [dc, dr] : kSteps) {
        if (!key.contains(col + dc, row + dr)) continue;
        const auto j = key.index(col + dc, row + dr);
        if (!seen[j] && key[j] == key[start]) {
          seen[j] = 1;
          frontier.push(j);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

bool labels_near(const SegmentationMap& seg, double col, double row, double radius,
                 std::span<const std::int32_t> labels) {
  const int c0 = std::max(0, static_cast<int>(std::floor(col - radius)));
  const int c1 = std::min(seg.width() - 1, static_cast<int>(std::ceil(col + radius)));
  const int r0 = std::max(0, static_cast<int>(std::floor(row - radius)));
  const int r1 = std::min(seg.height() - 1, static_cast<int>(std::ceil(row + radius)));
  for (auto label : labels) {
    bool found = false;
    for (int r = r0; r <= r1 && !found; ++r) {
      for (int c = c0; c <= c1 && !found; ++c) found = seg.at(c, r) == label;
    }
    if (!found) return false;
  }
  return true;
}

std::array<double, 3> raw_vec(const SurfaceParams& p) {
  const auto raw = p.raw();
  return {raw.p_hat, raw.q_hat, raw.r_hat};
}

std::array<double, 3> diff(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

// Whether labels a and b meet between consecutive pixels along a border.
bool border_transition(const SegmentationMap& seg, BorderEdge edge, std::int32_t a,
                       std::int32_t b) {
  const bool vertical = edge == BorderEdge::Left || edge == BorderEdge::Right;
  const int fixed = edge == BorderEdge::Left || edge == BorderEdge::Top
                        ? 0
                        : (vertical ? seg.width() - 1 : seg.height() - 1);
  const int len = vertical ? seg.height() : seg.width();
  for (int k = 0; k + 1 < len; ++k) {
    const auto x = vertical ? seg.at(fixed, k) : seg.at(k, fixed);
    const auto y = vertical ? seg.at(fixed, k + 1) : seg.at(k + 1, fixed);
    if ((x == a && y == b) || (x == b && y == a)) return true;
  }
  return false;
}

}  // namespace

StitchResult stitch_min_depth(std::span<const SurfaceParams> instances, int width, int height,
                              PixelFrame frame) {
  if (instances.empty()) fail(ErrorCode::InvalidArgument, "stitching needs at least one instance");
  StitchResult out{SegmentationMap(width, height, kUnassigned), DepthMap(width, height, 0.0, false)};
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const double u = frame.u(col);
      const double v = frame.v(row);
      std::int32_t best = kUnassigned;
      double best_inv = 0.0;
      for (std::size_t c = 0; c < instances.size(); ++c) {
        const double inv = instances[c].inverse_depth(u, v);
        if (inv > best_inv) {
          best_inv = inv;
          best = static_cast<std::int32_t>(c);
        }
      }
      if (best == kUnassigned) continue;
      const auto i = out.seg.index(col, row);
      out.seg[i] = best;
      out.depth[i] = depth_at(instances[best], u, v);
      out.depth.set_valid(i, std::isfinite(out.depth[i]));
    }
  }
  return out;
}

DepthMap depth_from_labels(std::span<const SurfaceParams> instances, const SegmentationMap& seg,
                           PixelFrame frame) {
  check_labels(seg, instances.size(), "depth_from_labels");
  DepthMap out(seg.width(), seg.height(), 0.0, false);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] == kUnassigned) continue;
    const double z = depth_at(instances[seg[i]], frame.u(seg.col_of(i)), frame.v(seg.row_of(i)));
    if (z > 0.0 && std::isfinite(z)) {
      out[i] = z;
      out.set_valid(i, true);
    }
  }
  return out;
}

ResolveResult resolve_layers(std::span<const SurfaceParams> instances,
                             const SegmentationMap& clustered_seg, PixelFrame frame,
                             const ResolveConfig& config) {
  if (instances.empty()) fail(ErrorCode::InvalidArgument, "resolving needs at least one instance");
  check_labels(clustered_seg, instances.size(), "resolve_layers");
  const int w = clustered_seg.width();
  const int h = clustered_seg.height();
  const std::size_t n = clustered_seg.size();
  const auto min_region = static_cast<std::size_t>(
      std::max(1.0, std::ceil(config.min_region_fraction * static_cast<double>(n))));

  std::vector<std::vector<std::int32_t>> layers(n);
  for (std::size_t i = 0; i < n; ++i) {
    layers[i] = depth_layers(instances, frame.u(clustered_seg.col_of(i)),
                             frame.v(clustered_seg.row_of(i)));
  }
  std::vector<std::size_t> depth_index(n, 0);
  ResolveResult out;
  out.seg = SegmentationMap(w, h, kUnassigned);
  auto refresh = [&](std::size_t i) {
    out.seg[i] = layers[i].empty() ? kUnassigned : layers[i][depth_index[i]];
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  const auto k = static_cast<std::int64_t>(instances.size()) + 1;
  auto disagreeing = [&]() {
    Grid<std::int64_t> key(w, h, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto target = clustered_seg[i];
      if (target == kUnassigned || out.seg[i] == target) continue;
      key[i] = (static_cast<std::int64_t>(out.seg[i]) + 1) * k + target;
    }
    auto comps = components(key);
    std::erase_if(comps, [&](const auto& c) { return c.size() < min_region; });
    return comps;
  };

  const int cap = static_cast<int>(instances.size());
  while (out.iterations < cap) {
    bool changed = false;
    for (const auto& region : disagreeing()) {
      for (auto i : region) {
        if (depth_index[i] + 1 < layers[i].size()) {
          ++depth_index[i];
          refresh(i);
          changed = true;
        }
      }
    }
    if (!changed) break;
    ++out.iterations;
  }
  for (const auto& region : disagreeing()) {
    out.fallback = true;
    for (auto i : region) {
      depth_index[i] = 0;
      refresh(i);
    }
  }
  return out;
}

std::vector<std::array<std::int32_t, 2>> adjacent_pairs(const SegmentationMap& seg) {
  std::set<std::array<std::int32_t, 2>> pairs;
  constexpr std::array<std::array<int, 2>, 4> kForward{{{1, 0}, {0, 1}, {1, 1}, {-1, 1}}};
  for (int row = 0; row < seg.height(); ++row) {
    for (int col = 0; col < seg.width(); ++col) {
      const auto a = seg.at(col, row);
      if (a == kUnassigned) continue;
      for (const auto& [dc, dr] : kForward) {
        if (!seg.contains(col + dc, row + dr)) continue;
        const auto b = seg.at(col + dc, row + dr);
        if (b == kUnassigned || b == a) continue;
        pairs.insert({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return {pairs.begin(), pairs.end()};
}

CornerSet extract_corners(std::span<const SurfaceParams> instances, const SegmentationMap& seg,
                          PixelFrame frame, const CornerConfig& config) {
  check_labels(seg, instances.size(), "extract_corners");
  const int w = seg.width();
  const int h = seg.height();
  const double umax = w - 1.0;
  const double vmax = h - 1.0;
  constexpr double kInsideTol = 1e-9;
  const std::size_t n = instances.size();

  const auto pairs = adjacent_pairs(seg);
  std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : pairs) adjacent[a][b] = adjacent[b][a] = true;

  CornerSet out;
  // Parallel 3D planes have proportional raw vectors; their lines meet only
  // at the horizon.
  std::vector<std::vector<bool>> parallel(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : pairs) {
    const auto x = instances[a];
    const auto y = instances[b];
    const std::array<double, 3> cr{x.q * y.r - x.r * y.q, x.r * y.p - x.p * y.r,
                                   x.p * y.q - x.q * y.p};
    const double norm = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
    if (norm < config.min_determinant) {
      parallel[a][b] = parallel[b][a] = true;
      out.ill_conditioned.push_back({{a, b}, norm});
    }
  }

  auto accept = [&](std::int32_t label, double uf, double vf, double& z) {
    const double inv = instances[label].inverse_depth(uf, vf);
    if (!(inv > config.min_inverse_depth)) return false;
    z = depth_at(instances[label], uf, vf);
    return std::isfinite(z);
  };

  for (std::int32_t a = 0; a < static_cast<std::int32_t>(n); ++a) {
    for (std::int32_t b = a + 1; b < static_cast<std::int32_t>(n); ++b) {
      if (!adjacent[a][b]) continue;
      for (std::int32_t c = b + 1; c < static_cast<std::int32_t>(n); ++c) {
        if (!adjacent[a][c] || !adjacent[b][c]) continue;
        const auto ab = diff(raw_vec(instances[a]), raw_vec(instances[b]));
        const auto ac = diff(raw_vec(instances[a]), raw_vec(instances[c]));
        const double det = ab[0] * ac[1] - ab[1] * ac[0];
        if (std::abs(det) < config.min_determinant) {
          out.ill_conditioned.push_back({{a, b, c}, det});
          continue;
        }
        const double uf = (-ab[2] * ac[1] + ac[2] * ab[1]) / det;
        const double vf = (-ab[0] * ac[2] + ac[0] * ab[2]) / det;
        const double col = uf * frame.unit;
        const double row = vf * frame.unit;
        if (col < -kInsideTol || col > umax + kInsideTol || row < -kInsideTol ||
            row > vmax + kInsideTol) {
          continue;
        }
        double z = 0.0;
        if (!accept(a, uf, vf, z)) continue;
        const std::array<std::int32_t, 3> labels{a, b, c};
        if (!labels_near(seg, col, row, config.junction_radius_px, labels)) continue;
        out.corners.push_back({col, row, z, {a, b, c}, BorderEdge::None});
      }
    }
  }

  for (const auto& [a, b] : pairs) {
    if (parallel[a][b]) continue;
    const auto ab = diff(raw_vec(instances[a]), raw_vec(instances[b]));
    for (auto edge : {BorderEdge::Left, BorderEdge::Right, BorderEdge::Top, BorderEdge::Bottom}) {
      if (!border_transition(seg, edge, a, b)) continue;
      const bool vertical = edge == BorderEdge::Left || edge == BorderEdge::Right;
      const double fixed_px = (edge == BorderEdge::Left || edge == BorderEdge::Top)
                                  ? 0.0
                                  : (vertical ? umax : vmax);
      const double fixed = fixed_px / frame.unit;
      const double slope = vertical ? ab[1] : ab[0];
      if (std::abs(slope) < config.min_determinant) {
        out.ill_conditioned.push_back({{a, b}, slope});
        continue;
      }
      const double free = -((vertical ? ab[0] : ab[1]) * fixed + ab[2]) / slope;
      const double free_px = free * frame.unit;
      const double limit = vertical ? vmax : umax;
      if (free_px < -kInsideTol || free_px > limit + kInsideTol) continue;
      const double uf = vertical ? fixed : free;
      const double vf = vertical ? free : fixed;
      double z = 0.0;
      if (!accept(a, uf, vf, z)) continue;
      const double col = vertical ? fixed_px : free_px;
      const double row = vertical ? free_px : fixed_px;
      const std::array<std::int32_t, 2> labels{a, b};
      // Both labels must appear on the border within the junction radius.
      bool near = true;
      for (auto label : labels) {
        bool found = false;
        const int lo = std::max(0, static_cast<int>(std::floor(free_px - config.junction_radius_px)));
        const int hi = std::min(static_cast<int>(limit),
                                static_cast<int>(std::ceil(free_px + config.junction_radius_px)));
        for (int k = lo; k <= hi && !found; ++k) {
          found = (vertical ? seg.at(static_cast<int>(fixed_px), k)
                            : seg.at(k, static_cast<int>(fixed_px))) == label;
        }
        near = near && found;
      }
      if (!near) continue;
      out.corners.push_back({col, row, z, {a, b}, edge});
    }
  }

  // Clockwise on screen (v points down) about the image center.
  const double cx = 0.5 * umax;
  const double cy = 0.5 * vmax;
  std::sort(out.corners.begin(), out.corners.end(), [&](const Corner& x, const Corner& y) {
    const double ax = std::atan2(x.v - cy, x.u - cx);
    const double ay = std::atan2(y.v - cy, y.u - cx);
    if (ax != ay) return ax < ay;
    return std::hypot(x.u - cx, x.v - cy) < std::hypot(y.u - cx, y.v - cy);
  });

  out.surface_corners.assign(n, {});
  for (std::size_t label = 0; label < n; ++label) {
    auto& list = out.surface_corners[label];
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < out.corners.size(); ++k) {
      const auto& s = out.corners[k].surfaces;
      if (std::find(s.begin(), s.end(), static_cast<std::int32_t>(label)) == s.end()) continue;
      list.push_back(k);
      mx += out.corners[k].u;
      my += out.corners[k].v;
    }
    if (list.empty()) continue;
    mx /= static_cast<double>(list.size());
    my /= static_cast<double>(list.size());
    std::stable_sort(list.begin(), list.end(), [&](std::size_t x, std::size_t y) {
      return std::atan2(out.corners[x].v - my, out.corners[x].u - mx) <
             std::atan2(out.corners[y].v - my, out.corners[y].u - mx);
    });
  }

  for (const auto& [a, b] : pairs) {
    PairBoundary boundary{a, b, {}};
    const auto ab = diff(raw_vec(instances[a]), raw_vec(instances[b]));
    std::vector<std::pair<double, Vertex2>> along;
    for (const auto& corner : out.corners) {
      const auto& s = corner.surfaces;
      if (std::find(s.begin(), s.end(), a) == s.end() ||
          std::find(s.begin(), s.end(), b) == s.end()) {
        continue;
      }
      along.push_back({-ab[1] * corner.u + ab[0] * corner.v, {corner.u, corner.v}});
    }
    std::sort(along.begin(), along.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [t, vertex] : along) boundary.polyline.push_back(vertex);
    out.boundaries.push_back(std::move(boundary));
  }
  return out;
}

std::vector<LabeledPoint> layout_point_cloud(const LayoutResult& result,
                                             const CameraIntrinsics& cam) {
  cam.validate();
  if (!result.depth.same_shape(cam.width, cam.height)) {
    fail(ErrorCode::IntrinsicsMismatch, "intrinsics do not match the layout raster");
  }
  std::vector<LabeledPoint> out;
  for (std::size_t i = 0; i < result.depth.size(); ++i) {
    if (!result.depth.valid(i)) continue;
    out.push_back({backproject_pixel(result.depth.col_of(i), result.depth.row_of(i),
                                     result.depth[i], cam),
                   result.seg[i]});
  }
  return out;
}

LayoutResult assemble_layout(std::vector<SurfaceParams> instances, SegmentationMap clustered_seg,
                             PixelFrame frame, const PipelineConfig& config,
                             const std::optional<CameraIntrinsics>& cam) {
  LayoutResult out;
  out.frame = frame;
  auto resolved = resolve_layers(instances, clustered_seg, frame, config.resolve);
  out.seg = std::move(resolved.seg);
  out.layer_fallback = resolved.fallback;
  out.depth = depth_from_labels(instances, out.seg, frame);
  out.corners = extract_corners(instances, out.seg, frame, config.corners);
  if (cam) {
    cam->validate();
    if (!out.seg.same_shape(cam->width, cam->height)) {
      fail(ErrorCode::IntrinsicsMismatch, "intrinsics do not match the parameter map");
    }
    std::vector<Point3> points;
    for (const auto& c : out.corners.corners) points.push_back(backproject_pixel(c.u, c.v, c.z, *cam));
    out.corners_3d = std::move(points);
  }
  out.instances = std::move(instances);
  out.clustered_seg = std::move(clustered_seg);
  return out;
}

LayoutResult full_pipeline(const ParamMap& pm, const PipelineConfig& config,
                           const std::optional<CameraIntrinsics>& cam) {
  auto clusters = cluster_param_map(pm, config.cluster);
  return assemble_layout(clusters.params(), std::move(clusters.clustered_seg), pm.frame, config,
                         cam);
}

}  // namespace roomlayout
