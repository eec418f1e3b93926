#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library routine that it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "roomlayout/geometry.hpp"
#include "roomlayout/random.hpp"

namespace oracle {

using namespace roomlayout;

// Depth where the viewing ray through pixel (col, row) meets the plane.
inline double ray_plane_depth(const PlaneEq3D& e, const CameraIntrinsics& cam, double col, double row) {
  const double x = (col - cam.u0) / cam.fx;
  const double y = (row - cam.v0) / cam.fy;
  return -e.d / (e.a * x + e.b * y + e.c);
}

inline PlaneEq3D random_plane(Rng& rng) {
  double a, b, c, n;
  do {
    a = rng.normal();
    b = rng.normal();
    c = rng.normal();
    n = std::sqrt(a * a + b * b + c * c);
  } while (n < 1e-3);
  const double mag = rng.uniform(0.1, 10.0);
  const double d = rng.uniform() < 0.5 ? -mag : mag;
  return {a / n, b / n, c / n, d};
}

inline CameraIntrinsics random_intrinsics(Rng& rng) {
  CameraIntrinsics cam;
  cam.width = 32 + static_cast<int>(rng.index(1000));
  cam.height = 24 + static_cast<int>(rng.index(800));
  cam.fx = rng.uniform(0.3, 2.0) * cam.width;
  cam.fy = cam.fx * rng.uniform(0.9, 1.1);
  cam.u0 = rng.uniform(0.3, 0.7) * cam.width;
  cam.v0 = rng.uniform(0.3, 0.7) * cam.height;
  return cam;
}

// Surface through three positive inverse depths at raster corners, redrawn
// until the fourth corner is positive too (so the whole raster is).
inline SurfaceParams random_positive_surface(Rng& rng, int w, int h, PixelFrame frame) {
  for (;;) {
    const double i00 = rng.uniform(0.1, 2.0);
    const double i10 = rng.uniform(0.1, 2.0);
    const double i01 = rng.uniform(0.1, 2.0);
    const double du = frame.u(w - 1);
    const double dv = frame.v(h - 1);
    const double p_hat = (i10 - i00) / du;
    const double q_hat = (i01 - i00) / dv;
    const double r_hat = i00;
    if (p_hat * du + q_hat * dv + r_hat < 0.1) continue;
    const double s = std::sqrt(p_hat * p_hat + q_hat * q_hat + r_hat * r_hat);
    return {p_hat / s, q_hat / s, r_hat / s, s};
  }
}

// Per-pixel label of the largest positive inverse depth; ties go to the
// lower index, no positive candidate gives -1.
inline Grid<std::int32_t> argmax_labels(const std::vector<SurfaceParams>& surfaces, int w, int h,
                                        PixelFrame frame) {
  Grid<std::int32_t> out(w, h, -1);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      double best = 0.0;
      for (std::size_t k = 0; k < surfaces.size(); ++k) {
        const auto& s = surfaces[k];
        const double inv = (s.p * frame.u(col) + s.q * frame.v(row) + s.r) * s.s;
        if (inv > best) {
          best = inv;
          out.at(col, row) = static_cast<std::int32_t>(k);
        }
      }
    }
  }
  return out;
}

// Pixel error in percent after the best label bijection, by enumerating
// every injective map of predicted labels into ground-truth labels.
inline double permutation_pixel_error(const Grid<std::int32_t>& pred, const Grid<std::int32_t>& gt) {
  std::set<std::int32_t> pl;
  std::set<std::int32_t> gl;
  std::size_t total = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0) continue;
    ++total;
    gl.insert(gt[i]);
    if (pred[i] >= 0) pl.insert(pred[i]);
  }
  std::vector<std::int32_t> p(pl.begin(), pl.end());
  std::vector<std::int32_t> g(gl.begin(), gl.end());
  // Pad ground truth with dummies so that every predicted label has a target.
  while (g.size() < p.size()) g.push_back(-100 - static_cast<int>(g.size()));
  std::sort(g.begin(), g.end());
  std::size_t best = 0;
  do {
    std::map<std::int32_t, std::int32_t> m;
    for (std::size_t k = 0; k < p.size(); ++k) m[p[k]] = g[k];
    std::size_t ok = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] < 0 || pred[i] < 0) continue;
      ok += m[pred[i]] == gt[i];
    }
    best = std::max(best, ok);
  } while (std::next_permutation(g.begin(), g.end()));
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(total - best) / static_cast<double>(total);
}

// Central finite difference of f with respect to channel k of pixel i.
inline double central_difference(const std::function<double(const ParamMap&)>& f, ParamMap x,
                                 std::size_t i, int k, double h) {
  auto a = x[i].as_array();
  const double x0 = a[k];
  a[k] = x0 + h;
  x[i] = SurfaceParams::from_array(a);
  const double up = f(x);
  a[k] = x0 - h;
  x[i] = SurfaceParams::from_array(a);
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double max_abs_diff(const SurfaceParams& a, const SurfaceParams& b) {
  return std::max({std::abs(a.p - b.p), std::abs(a.q - b.q), std::abs(a.r - b.r), std::abs(a.s - b.s)});
}

}  // namespace oracle
