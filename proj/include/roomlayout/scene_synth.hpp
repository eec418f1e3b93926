#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "roomlayout/annotation.hpp"
#include "roomlayout/geometry.hpp"

namespace roomlayout {

enum class LayoutType { Cuboid, NonCuboid };

// Prism room in a gravity-aligned world frame centered on the camera
// (X right, Y down, Z forward before rotation). Walls follow the footprint
// edges; faces are indexed floor = 0, ceiling = 1, wall i = 2 + i where wall i
// joins footprint[i] and footprint[i + 1].
struct RoomGeometry {
  std::vector<std::array<double, 2>> footprint;  // (x, z) vertices
  double floor_y = 1.5;                          // > 0, floor below the camera
  double ceiling_y = -1.5;                       // < 0
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world -> camera, row-major

  std::size_t face_count() const noexcept { return footprint.size() + 2; }

  bool operator==(const RoomGeometry&) const = default;
};

struct SceneSurface {
  std::int32_t label = 0;  // segmentation id, 0..n-1 over visible surfaces
  int face = 0;            // index into the room faces
  PlaneEq3D plane;         // camera coordinates, normal pointing into the room
  Semantic semantic = Semantic::Wall;

  bool operator==(const SceneSurface&) const = default;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  CameraIntrinsics cam;
  PixelFrame frame;
  LayoutType layout_type = LayoutType::Cuboid;
  RoomGeometry room;
  std::vector<SceneSurface> surfaces;  // visible surfaces only
  std::vector<Corner> gt_corners;
  double noise_sigma = 0.0;       // meters, original depth only
  double clutter_fraction = 0.0;  // fraction of pixels covered by occluders

  // Instance-level parameters of every visible surface, indexed by label.
  std::vector<SurfaceParams> surface_params() const;

  bool operator==(const SceneSpec&) const = default;
};

struct SynthOptions {
  double tilt_deg = 0.0;  // camera pitch/roll range, at most 10 degrees
  double noise_sigma = 0.0;
  double clutter_fraction = 0.0;
  double min_surface_fraction = 0.02;
  double min_param_distance = 0.5;  // between visible surfaces, in the scene frame
  double corner_margin_px = 3.0;
  double min_mislabel_fraction = 0.02;  // non-cuboid scenes with a concave vertex
  int max_attempts = 5000;
};

struct RenderedScene {
  DepthMap layout_depth;      // depth of the visible dominant plane
  SegmentationMap segmentation;
  ParamMap params;
  DepthMap original_depth;    // layout depth with occluders and sensor noise
  Grid<std::uint8_t> clutter_mask;
};

// Random axis-aligned box room with the camera inside. Deterministic per seed.
SceneSpec generate_cuboid(std::uint64_t seed, const CameraIntrinsics& cam,
                          const SynthOptions& options = {});

// Prism room over a star-shaped footprint. Three or four walls give a convex
// footprint; five or more carry one concave vertex in view, so the nearest
// plane rule mislabels part of the image.
SceneSpec generate_noncuboid(std::uint64_t seed, const CameraIntrinsics& cam, int n_walls,
                             const SynthOptions& options = {});

// Builds a scene from explicit geometry. Throws InvalidFootprint when the
// footprint self-intersects or does not contain the camera.
SceneSpec make_scene(const RoomGeometry& room, const CameraIntrinsics& cam, LayoutType type,
                     const SynthOptions& options = {}, std::uint64_t seed = 0);

// Box of the given size, camera at (x, height above floor, z) measured from
// the left-back-floor corner, looking along +Z rotated by yaw (degrees).
RoomGeometry box_room(double width, double height, double depth, double cam_x,
                      double cam_height, double cam_z, double yaw_deg = 0.0,
                      double pitch_deg = 0.0, double roll_deg = 0.0);

// Exact per-pixel visibility by ray casting against the finite room faces.
// Returns room face indices (not surface labels).
Grid<std::int32_t> visible_faces(const RoomGeometry& room, const CameraIntrinsics& cam);

RenderedScene render_scene(const SceneSpec& spec);

// One polygon per visible surface, traced from the rendered segmentation.
std::vector<RegionAnnotation> region_annotations(const SceneSpec& spec,
                                                 const SegmentationMap& seg);

// Per-pixel unit normal (camera coordinates) of the visible surface.
Grid<std::array<double, 3>> surface_normals(const SceneSpec& spec, const SegmentationMap& seg);

}  // namespace roomlayout
