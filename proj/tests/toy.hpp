#pragma once

// Small synthetic training problem shared by the optimizer tests.

#include "roomlayout/objectives.hpp"
#include "roomlayout/random.hpp"
#include "roomlayout/scene_synth.hpp"

namespace toy {

using namespace roomlayout;

struct Problem {
  CameraIntrinsics cam;
  SceneSpec spec;
  RenderedScene scene;
  ParamMap init;
  TrainTarget target;
};

inline Problem make(std::uint64_t seed, int width, int height, double sigma) {
  Problem out;
  const double f = 0.75 * width;
  out.cam = {f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
  out.spec = generate_cuboid(seed, out.cam);
  out.scene = render_scene(out.spec);
  Rng rng(seed, 7);
  out.init = out.scene.params;
  for (std::size_t i = 0; i < out.init.size(); ++i) {
    auto a = out.init[i].as_array();
    for (double& x : a) x += rng.normal(0.0, sigma);
    out.init[i] = SurfaceParams::from_array(a);
  }
  out.target = {out.scene.params, out.scene.segmentation, out.scene.layout_depth};
  return out;
}

// Fraction of labelled pixels whose nearest predicted instance center is
// the labelled surface.
inline double ordering_accuracy(const ParamMap& pred, const SegmentationMap& seg) {
  const auto centers = instance_centers(pred, seg);
  std::size_t ok = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] < 0) continue;
    ++total;
    const double u = pred.frame.u(seg.col_of(i));
    const double v = pred.frame.v(seg.row_of(i));
    std::int32_t best = -1;
    double best_inv = -1e300;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const auto& s = centers[c];
      const double inv = (s.p * u + s.q * v + s.r) * s.s;
      if (inv > best_inv) {
        best_inv = inv;
        best = static_cast<std::int32_t>(c);
      }
    }
    ok += best == seg[i];
  }
  return total == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(total);
}

}  // namespace toy
