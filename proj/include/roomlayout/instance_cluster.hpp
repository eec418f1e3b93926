#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roomlayout/geometry.hpp"

namespace roomlayout {

using Point4 = std::array<double, 4>;

struct MeanShiftConfig {
  double bandwidth = 0.3;
  double tolerance = 1e-5;  // shift norm at convergence
  int max_iterations = 100;
};

struct MeanShiftCluster {
  Point4 mode{};
  std::vector<std::size_t> members;  // indices into the input, ascending
};

// Flat-kernel mean shift. Every point is shifted to convergence, converged
// positions closer than bandwidth/2 are merged (single linkage), and each
// input point is assigned to its nearest surviving mode. Clusters are ordered
// lexicographically by mode; the result does not depend on input order.
std::vector<MeanShiftCluster> mean_shift(std::span<const Point4> points,
                                         const MeanShiftConfig& config);
std::vector<MeanShiftCluster> mean_shift(std::span<const Point4> points, double bandwidth);

struct ClusterConfig {
  double bandwidth = 0.3;
  double min_fraction = 0.01;
  std::size_t max_seeds = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Instance {
  std::int32_t id = 0;
  SurfaceParams params;  // renormalized mean of member pixels
  std::size_t pixel_count = 0;
};

struct ClusterSet {
  std::vector<Instance> instances;  // id == position
  SegmentationMap clustered_seg;    // kUnassigned for invalid and dropped pixels
  std::size_t dropped_pixels = 0;   // valid pixels in rejected clusters

  std::vector<SurfaceParams> params() const;
};

// Mean shift over (a seeded subsample of) the valid pixels, then assignment of
// every valid pixel to the nearest mode. Instance ids follow the raster order
// of each instance's first pixel. Throws NoInstances when nothing survives.
ClusterSet cluster_param_map(const ParamMap& pm, const ClusterConfig& config = {});

// Mean of the pixel parameters carrying `label`, rescaled so |(p, q, r)| = 1.
SurfaceParams instance_mean(const ParamMap& pm, const SegmentationMap& seg, std::int32_t label);

}  // namespace roomlayout
