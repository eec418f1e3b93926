#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "roomlayout/annotation.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/instance_cluster.hpp"

namespace roomlayout {

struct StitchResult {
  SegmentationMap seg;  // kUnassigned where no instance has positive inverse depth
  DepthMap depth;
};

// Per-pixel argmax of inverse depth over instances; ties keep the lowest id.
StitchResult stitch_min_depth(std::span<const SurfaceParams> instances, int width, int height,
                              PixelFrame frame = PixelFrame::raw());

// Depth of the labeled instance at every assigned pixel.
DepthMap depth_from_labels(std::span<const SurfaceParams> instances, const SegmentationMap& seg,
                           PixelFrame frame = PixelFrame::raw());

struct ResolveConfig {
  // Disagreeing regions smaller than this fraction of the raster keep their
  // current label. Zero trusts every clustered pixel.
  double min_region_fraction = 0.0;
};

struct ResolveResult {
  SegmentationMap seg;
  int iterations = 0;
  bool fallback = false;  // some region matched no layer and kept layer 1
};

// Layer-wise consistency with the clustered segmentation. Each pixel carries
// its instances sorted by depth (positive depth only). Starting from the
// nearest layer, every 4-connected region sharing a (current, clustered)
// label pair that disagrees moves to its next layer; this repeats until
// nothing changes or the instance count is reached. Pixels whose clustered
// label is sentinel count as agreeing.
ResolveResult resolve_layers(std::span<const SurfaceParams> instances,
                             const SegmentationMap& clustered_seg,
                             PixelFrame frame = PixelFrame::raw(),
                             const ResolveConfig& config = {});

struct CornerConfig {
  double junction_radius_px = 2.0;
  double min_determinant = 1e-12;
  double min_inverse_depth = 1e-6;  // corners at the horizon are dropped
};

struct IllConditioned {
  std::vector<std::int32_t> surfaces;
  double determinant = 0.0;
};

struct PairBoundary {
  std::int32_t a = 0;
  std::int32_t b = 0;
  std::vector<Vertex2> polyline;  // shared corners ordered along the boundary
};

struct CornerSet {
  std::vector<Corner> corners;                            // clockwise about the image center
  std::vector<std::vector<std::size_t>> surface_corners;  // per label, clockwise
  std::vector<PairBoundary> boundaries;
  std::vector<IllConditioned> ill_conditioned;
};

// Pairs of distinct labels that touch under 8-connectivity, as (a < b).
std::vector<std::array<std::int32_t, 2>> adjacent_pairs(const SegmentationMap& seg);

CornerSet extract_corners(std::span<const SurfaceParams> instances, const SegmentationMap& seg,
                          PixelFrame frame = PixelFrame::raw(), const CornerConfig& config = {});

struct LayoutResult {
  PixelFrame frame;
  SegmentationMap seg;
  DepthMap depth;
  std::vector<SurfaceParams> instances;
  SegmentationMap clustered_seg;
  CornerSet corners;
  std::optional<std::vector<Point3>> corners_3d;
  bool layer_fallback = false;
};

struct LabeledPoint {
  Point3 point;
  std::int32_t label = kUnassigned;
};

std::vector<LabeledPoint> layout_point_cloud(const LayoutResult& result,
                                             const CameraIntrinsics& cam);

struct PipelineConfig {
  ClusterConfig cluster;
  ResolveConfig resolve;
  CornerConfig corners;
};

// cluster -> stitch -> resolve layers -> corners. Corners are back-projected
// when intrinsics are supplied.
LayoutResult full_pipeline(const ParamMap& pm, const PipelineConfig& config = {},
                           const std::optional<CameraIntrinsics>& cam = std::nullopt);

// Layout from known instances and a clustered segmentation.
LayoutResult assemble_layout(std::vector<SurfaceParams> instances, SegmentationMap clustered_seg,
                             PixelFrame frame, const PipelineConfig& config = {},
                             const std::optional<CameraIntrinsics>& cam = std::nullopt);

}  // namespace roomlayout
