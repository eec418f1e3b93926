#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "roomlayout/raster.hpp"

namespace roomlayout {

// Inverse-depth plane 1/Z = p_hat*u + q_hat*v + r_hat, before scale normalization.
struct RawSurfaceParams {
  double p_hat = 0.0;
  double q_hat = 0.0;
  double r_hat = 0.0;

  bool operator==(const RawSurfaceParams&) const = default;
};

// Scale-normalized surface: Z = 1 / ((p*u + q*v + r) * s), |(p, q, r)| = 1, s > 0.
//
// Parameter maps produced by a regressor need not satisfy the unit-norm
// invariant; normalize() and renormalized() restore it.
struct SurfaceParams {
  double p = 0.0;
  double q = 0.0;
  double r = 1.0;
  double s = 1.0;

  double inverse_depth(double u, double v) const noexcept { return (p * u + q * v + r) * s; }
  RawSurfaceParams raw() const noexcept { return {p * s, q * s, r * s}; }
  std::array<double, 4> as_array() const noexcept { return {p, q, r, s}; }
  static SurfaceParams from_array(const std::array<double, 4>& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }

  bool operator==(const SurfaceParams&) const = default;
};

// aX + bY + cZ + d = 0 in camera coordinates (X right, Y down, Z forward), unit normal.
struct PlaneEq3D {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double d = -1.0;

  // Scales to a unit normal; rejects planes through the camera center.
  static PlaneEq3D make(double a, double b, double c, double d);

  // Sign convention used by surface_to_plane: d < 0.
  PlaneEq3D canonical() const noexcept;
  double signed_distance(double x, double y, double z) const noexcept {
    return a * x + b * y + c * z + d;
  }

  bool operator==(const PlaneEq3D&) const = default;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;

  bool operator==(const CameraIntrinsics&) const = default;
};

// Maps pixel indices to the coordinates (u, v) that surface parameters are
// expressed in: u = col / unit, v = row / unit.
//
// raw() keeps pixel units. normalized() divides by the longer raster side,
// which keeps the slope terms of (p, q, r) commensurate with the offset term
// so that distances between parameter vectors separate distinct planes.
struct PixelFrame {
  double unit = 1.0;

  static PixelFrame raw() noexcept { return {1.0}; }
  static PixelFrame normalized(int width, int height) noexcept;

  double u(double col) const noexcept { return col / unit; }
  double v(double row) const noexcept { return row / unit; }

  bool operator==(const PixelFrame&) const = default;
};

using DepthMap = MaskedGrid<double>;

class ParamMap : public MaskedGrid<SurfaceParams> {
 public:
  ParamMap() = default;
  ParamMap(int width, int height, PixelFrame frame_ = PixelFrame::raw(),
           SurfaceParams fill = SurfaceParams{}, bool valid = true)
      : MaskedGrid<SurfaceParams>(width, height, fill, valid), frame(frame_) {}

  PixelFrame frame;

  bool operator==(const ParamMap&) const = default;
};

using SegmentationMap = Grid<std::int32_t>;
inline constexpr std::int32_t kUnassigned = -1;

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Point3&) const = default;
};

enum class BorderEdge { None, Left, Right, Top, Bottom };

// Layout corner in pixel coordinates with its depth. Interior corners join
// three surfaces; border corners join two surfaces and one image edge.
struct Corner {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
  std::vector<std::int32_t> surfaces;
  BorderEdge edge = BorderEdge::None;

  bool operator==(const Corner&) const = default;
};

// Validates finiteness and rejects the all-zero surface.
RawSurfaceParams make_raw(double p_hat, double q_hat, double r_hat);

// s = |raw|, (p, q, r) = raw / s. Throws DegenerateSurface if |raw| < 1e-12.
SurfaceParams normalize(const RawSurfaceParams& raw);

// Restores |(p, q, r)| = 1 while preserving the raw product (p*s, q*s, r*s).
SurfaceParams renormalized(const SurfaceParams& params);

bool is_normalized(const SurfaceParams& params, double tol = 1e-9) noexcept;

// 1 / ((p*u + q*v + r) * s). Signed; +infinity when the denominator is zero.
double depth_at(const SurfaceParams& params, double u, double v) noexcept;

// Depth over all pixel centers; non-positive inverse depth is masked invalid.
DepthMap render_depth(const SurfaceParams& params, int width, int height,
                      PixelFrame frame = PixelFrame::raw());

// Per-pixel target parameters from spatial derivatives of 1/Z (central
// differences inside, one-sided at borders and next to invalid pixels).
ParamMap params_from_depth(const DepthMap& gt, PixelFrame frame = PixelFrame::raw());

SurfaceParams plane_to_surface(const PlaneEq3D& plane, const CameraIntrinsics& cam,
                               PixelFrame frame = PixelFrame::raw());

// Inverse of plane_to_surface; returns the canonical plane (d < 0, whose
// visible side has Z > 0).
PlaneEq3D surface_to_plane(const SurfaceParams& params, const CameraIntrinsics& cam,
                           PixelFrame frame = PixelFrame::raw());

Point3 backproject_pixel(double col, double row, double z, const CameraIntrinsics& cam) noexcept;

// One point per valid pixel in raster order.
std::vector<Point3> backproject(const DepthMap& depth, const CameraIntrinsics& cam);

}  // namespace roomlayout
