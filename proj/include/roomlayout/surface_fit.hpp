#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roomlayout/annotation.hpp"
#include "roomlayout/geometry.hpp"

namespace roomlayout {

// Depth observation at frame coordinates (u, v).
struct DepthSample {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

struct FitResult {
  SurfaceParams params;
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
  double rms_residual = 0.0;  // inverse depth (1/m) over the consensus set
};

struct RansacConfig {
  int iterations = 500;
  double inlier_tol = 1e-3;  // 1/m
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Closed-form least squares of p_hat*u + q_hat*v + r_hat = 1/Z. The 3x3 normal
// matrix is built on centered, scaled coordinates; its condition number must
// stay below 1e10.
RawSurfaceParams lsq_fit_raw(std::span<const DepthSample> samples);
SurfaceParams lsq_fit(std::span<const DepthSample> samples);

// |p_hat*u + q_hat*v + r_hat - 1/Z|
double inverse_depth_residual(const RawSurfaceParams& raw, const DepthSample& sample) noexcept;
double rms_residual(const SurfaceParams& params, std::span<const DepthSample> samples);

FitResult ransac_fit(std::span<const DepthSample> samples, const RansacConfig& config = {});

// Samples of every valid pixel whose center lies inside the polygon.
std::vector<DepthSample> region_samples(const DepthMap& depth, const RegionAnnotation& region,
                                        PixelFrame frame = PixelFrame::raw());

// One result per region, ordered by region id.
std::vector<FitResult> fit_annotated(const DepthMap& depth,
                                     const std::vector<RegionAnnotation>& regions,
                                     const RansacConfig& config = {},
                                     PixelFrame frame = PixelFrame::raw());

}  // namespace roomlayout
