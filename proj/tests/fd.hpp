#pragma once

// Finite-difference gradient checks over whole parameter maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "roomlayout/objectives.hpp"
#include "roomlayout/random.hpp"

namespace fd {

using namespace roomlayout;

// Norm-wise relative error |analytic - numeric| / max(|analytic|, |numeric|)
// over every valid pixel channel, central differences with step h.
inline double relative_error(const std::function<double(const ParamMap&)>& f, const ParamGrad& grad,
                             const ParamMap& x, double h = 1e-6) {
  double diff2 = 0.0;
  double a2 = 0.0;
  double n2 = 0.0;
  ParamMap probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x.valid(i)) continue;
    for (int k = 0; k < 4; ++k) {
      auto a = x[i].as_array();
      const double x0 = a[k];
      a[k] = x0 + h;
      probe[i] = SurfaceParams::from_array(a);
      const double up = f(probe);
      a[k] = x0 - h;
      probe[i] = SurfaceParams::from_array(a);
      const double down = f(probe);
      probe[i] = x[i];
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad[i][k];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
    }
  }
  const double scale = std::sqrt(std::max(a2, n2));
  return scale == 0.0 ? std::sqrt(diff2) : std::sqrt(diff2) / scale;
}

}  // namespace fd

namespace fd {

struct Point {
  ParamMap pred;
  ParamMap target;
  SegmentationMap seg;
  DepthMap depth;
};

inline double dist4(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// True when every kink of the losses is at least `gap` away: L1 zeros,
// variance and distance hinge margins, and ties of the per-pixel max.
inline bool away_from_kinks(const Point& x, const LossConfig& cfg, double gap) {
  for (std::size_t i = 0; i < x.pred.size(); ++i) {
    const auto a = x.pred[i].as_array();
    const auto b = x.target[i].as_array();
    for (int k = 0; k < 4; ++k) {
      if (std::abs(a[k] - b[k]) < gap) return false;
    }
  }
  int C = 0;
  for (auto l : x.seg.values()) C = std::max(C, l + 1);
  std::vector<std::array<double, 4>> centers(C, {0, 0, 0, 0});
  std::vector<int> counts(C, 0);
  for (std::size_t i = 0; i < x.seg.size(); ++i) {
    const auto a = x.pred[i].as_array();
    for (int k = 0; k < 4; ++k) centers[x.seg[i]][k] += a[k];
    ++counts[x.seg[i]];
  }
  for (int c = 0; c < C; ++c) {
    for (double& v : centers[c]) v /= counts[c];
  }
  for (std::size_t i = 0; i < x.seg.size(); ++i) {
    if (std::abs(dist4(x.pred[i].as_array(), centers[x.seg[i]]) - cfg.delta_v) < gap) return false;
    const double u = x.pred.frame.u(x.seg.col_of(i));
    const double v = x.pred.frame.v(x.seg.row_of(i));
    std::vector<double> inv;
    for (const auto& c : centers) inv.push_back((c[0] * u + c[1] * v + c[2]) * c[3]);
    std::sort(inv.begin(), inv.end());
    if (inv.size() > 1 && inv[inv.size() - 1] - inv[inv.size() - 2] < gap) return false;
    // |labelled - max| and |labelled - gt| away from zero unless exactly equal.
    const auto& c = centers[x.seg[i]];
    const double own = (c[0] * u + c[1] * v + c[2]) * c[3];
    if (std::abs(own - 1.0 / x.depth[i]) < gap) return false;
  }
  for (int a = 0; a < C; ++a) {
    for (int b = 0; b < C; ++b) {
      if (a != b && std::abs(dist4(centers[a], centers[b]) - cfg.delta_d) < gap) return false;
    }
  }
  return true;
}

// Random 8x8 problem with three surfaces; predictions scatter around
// per-surface bases so that every hinge is active on some pixels. Bases
// stay close in inverse depth so the softmax of the stretch term is not
// saturated.
inline Point random_point(Rng& rng, const LossConfig& cfg = {}, int size = 8) {
  for (;;) {
    Point x;
    const PixelFrame frame = PixelFrame::normalized(size, size);
    x.pred = ParamMap(size, size, frame);
    x.target = ParamMap(size, size, frame);
    x.seg = SegmentationMap(size, size, 0);
    x.depth = DepthMap(size, size, 1.0);
    const int split_col = 2 + static_cast<int>(rng.index(size - 3));
    const int split_row = 2 + static_cast<int>(rng.index(size - 3));
    std::array<std::array<double, 4>, 3> base;
    for (auto& b : base) {
      b = {rng.normal(0, 0.2), rng.normal(0, 0.2), 1.0, rng.uniform(0.8, 1.2)};
    }
    for (int row = 0; row < size; ++row) {
      for (int col = 0; col < size; ++col) {
        const std::int32_t label = col < split_col ? 0 : (row < split_row ? 1 : 2);
        x.seg.at(col, row) = label;
        std::array<double, 4> p;
        std::array<double, 4> t;
        for (int k = 0; k < 4; ++k) {
          p[k] = base[label][k] + rng.normal(0, 0.1);
          t[k] = base[label][k] + rng.normal(0, 0.1);
        }
        x.pred.at(col, row) = SurfaceParams::from_array(p);
        x.target.at(col, row) = SurfaceParams::from_array(t);
        x.depth.at(col, row) = rng.uniform(0.3, 3.0);
      }
    }
    if (away_from_kinks(x, cfg, 1e-4)) return x;
  }
}

}  // namespace fd
