#include "roomlayout/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace roomlayout {

namespace {

constexpr double kDegenerateNorm = 1e-12;

}  // namespace

PlaneEq3D PlaneEq3D::make(double a, double b, double c, double d) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d)) {
    fail(ErrorCode::DegeneratePlane, "non-finite plane coefficients");
  }
  const double n = std::sqrt(a * a + b * b + c * c);
  if (n < kDegenerateNorm) fail(ErrorCode::DegeneratePlane, "plane normal vanishes");
  if (std::abs(d / n) < kDegenerateNorm) {
    fail(ErrorCode::DegeneratePlane, "plane passes through the camera center");
  }
  return {a / n, b / n, c / n, d / n};
}

PlaneEq3D PlaneEq3D::canonical() const noexcept {
  if (d > 0.0) return {-a, -b, -c, -d};
  return *this;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    fail(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "raster size must be positive");
  if (!(u0 >= 0.0 && u0 < width && v0 >= 0.0 && v0 < height)) {
    fail(ErrorCode::InvalidArgument, "principal point outside the raster");
  }
}

PixelFrame PixelFrame::normalized(int width, int height) noexcept {
  return {static_cast<double>(std::max(1, std::max(width, height)))};
}

RawSurfaceParams make_raw(double p_hat, double q_hat, double r_hat) {
  if (!std::isfinite(p_hat) || !std::isfinite(q_hat) || !std::isfinite(r_hat)) {
    fail(ErrorCode::DegenerateSurface, "non-finite surface parameters");
  }
  if (p_hat == 0.0 && q_hat == 0.0 && r_hat == 0.0) {
    fail(ErrorCode::DegenerateSurface, "all-zero surface parameters");
  }
  return {p_hat, q_hat, r_hat};
}

SurfaceParams normalize(const RawSurfaceParams& raw) {
  if (!std::isfinite(raw.p_hat) || !std::isfinite(raw.q_hat) || !std::isfinite(raw.r_hat)) {
    fail(ErrorCode::DegenerateSurface, "non-finite surface parameters");
  }
  const double s = std::sqrt(raw.p_hat * raw.p_hat + raw.q_hat * raw.q_hat + raw.r_hat * raw.r_hat);
  if (!(s >= kDegenerateNorm)) {
    fail(ErrorCode::DegenerateSurface, "|raw| = " + std::to_string(s) + " below 1e-12");
  }
  return {raw.p_hat / s, raw.q_hat / s, raw.r_hat / s, s};
}

SurfaceParams renormalized(const SurfaceParams& params) {
  const double n = std::sqrt(params.p * params.p + params.q * params.q + params.r * params.r);
  if (!(n >= kDegenerateNorm) || !std::isfinite(params.s)) {
    fail(ErrorCode::DegenerateSurface, "cannot renormalize vanishing (p, q, r)");
  }
  SurfaceParams out{params.p / n, params.q / n, params.r / n, params.s * n};
  if (out.s < 0.0) out = {-out.p, -out.q, -out.r, -out.s};
  if (!(out.s >= kDegenerateNorm)) fail(ErrorCode::DegenerateSurface, "vanishing scale factor");
  return out;
}

bool is_normalized(const SurfaceParams& params, double tol) noexcept {
  const double n2 = params.p * params.p + params.q * params.q + params.r * params.r;
  return std::abs(n2 - 1.0) <= tol && params.s > 0.0 && std::isfinite(params.s);
}

double depth_at(const SurfaceParams& params, double u, double v) noexcept {
  const double inv = params.inverse_depth(u, v);
  if (inv == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / inv;
}

DepthMap render_depth(const SurfaceParams& params, int width, int height, PixelFrame frame) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "raster size must be positive");
  DepthMap out(width, height, 0.0, false);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const auto i = out.index(col, row);
      const double inv = params.inverse_depth(frame.u(col), frame.v(row));
      out[i] = depth_at(params, frame.u(col), frame.v(row));
      out.set_valid(i, inv > 0.0 && std::isfinite(out[i]));
    }
  }
  return out;
}

ParamMap params_from_depth(const DepthMap& gt, PixelFrame frame) {
  const int w = gt.width();
  const int h = gt.height();
  ParamMap out(w, h, frame, SurfaceParams{}, false);
  if (gt.empty()) return out;

  Grid<double> inv(w, h, 0.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.valid(i) && std::isfinite(gt[i]) && gt[i] > 0.0) inv[i] = 1.0 / gt[i];
  }
  auto usable = [&](int col, int row) {
    return gt.contains(col, row) && gt.valid(col, row) && std::isfinite(gt.at(col, row)) &&
           gt.at(col, row) > 0.0;
  };
  const double step = 1.0 / frame.unit;

  // Derivative of inverse depth along one axis; false when no neighbor is usable.
  auto derivative = [&](int col, int row, int dc, int dr, double& out_d) {
    const bool prev = usable(col - dc, row - dr);
    const bool next = usable(col + dc, row + dr);
    const double here = inv.at(col, row);
    if (prev && next) {
      out_d = (inv.at(col + dc, row + dr) - inv.at(col - dc, row - dr)) / (2.0 * step);
    } else if (next) {
      out_d = (inv.at(col + dc, row + dr) - here) / step;
    } else if (prev) {
      out_d = (here - inv.at(col - dc, row - dr)) / step;
    } else {
      return false;
    }
    return true;
  };

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!usable(col, row)) continue;
      double p_hat = 0.0;
      double q_hat = 0.0;
      if (!derivative(col, row, 1, 0, p_hat) || !derivative(col, row, 0, 1, q_hat)) continue;
      const double r_hat = inv.at(col, row) - p_hat * frame.u(col) - q_hat * frame.v(row);
      const double n = std::sqrt(p_hat * p_hat + q_hat * q_hat + r_hat * r_hat);
      if (!(n >= kDegenerateNorm) || !std::isfinite(n)) continue;
      const auto i = out.index(col, row);
      out[i] = normalize({p_hat, q_hat, r_hat});
      out.set_valid(i, true);
    }
  }
  return out;
}

SurfaceParams plane_to_surface(const PlaneEq3D& plane, const CameraIntrinsics& cam,
                               PixelFrame frame) {
  cam.validate();
  if (plane.d == 0.0) fail(ErrorCode::DegenerateSurface, "plane passes through camera center");
  const double fx = cam.fx / frame.unit;
  const double fy = cam.fy / frame.unit;
  const double u0 = cam.u0 / frame.unit;
  const double v0 = cam.v0 / frame.unit;
  const double p_hat = -plane.a / (fx * plane.d);
  const double q_hat = -plane.b / (fy * plane.d);
  const double r_hat = (plane.a * u0 / fx + plane.b * v0 / fy - plane.c) / plane.d;
  return normalize({p_hat, q_hat, r_hat});
}

PlaneEq3D surface_to_plane(const SurfaceParams& params, const CameraIntrinsics& cam,
                           PixelFrame frame) {
  cam.validate();
  const auto raw = params.raw();
  const double fx = cam.fx / frame.unit;
  const double fy = cam.fy / frame.unit;
  const double u0 = cam.u0 / frame.unit;
  const double v0 = cam.v0 / frame.unit;
  // 1/Z = p_hat*u + q_hat*v + r_hat with u = fx*X/Z + u0 gives
  // p_hat*fx*X + q_hat*fy*Y + (p_hat*u0 + q_hat*v0 + r_hat)*Z - 1 = 0.
  const double nx = raw.p_hat * fx;
  const double ny = raw.q_hat * fy;
  const double nz = raw.p_hat * u0 + raw.q_hat * v0 + raw.r_hat;
  const double n = std::sqrt(nx * nx + ny * ny + nz * nz);
  if (!(n >= kDegenerateNorm) || !std::isfinite(n)) {
    fail(ErrorCode::DegeneratePlane, "recovered normal vanishes");
  }
  return {nx / n, ny / n, nz / n, -1.0 / n};
}

Point3 backproject_pixel(double col, double row, double z, const CameraIntrinsics& cam) noexcept {
  return {(col - cam.u0) * z / cam.fx, (row - cam.v0) * z / cam.fy, z};
}

std::vector<Point3> backproject(const DepthMap& depth, const CameraIntrinsics& cam) {
  cam.validate();
  std::vector<Point3> points;
  points.reserve(depth.valid_count());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.valid(i)) continue;
    points.push_back(backproject_pixel(depth.col_of(i), depth.row_of(i), depth[i], cam));
  }
  return points;
}

}  // namespace roomlayout
