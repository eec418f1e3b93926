#include "roomlayout/scene_synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "roomlayout/random.hpp"

namespace roomlayout {

namespace {

constexpr int kFloor = 0;
constexpr int kCeiling = 1;
constexpr double kEdgeTol = 1e-9;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

Eigen::Matrix3d to_matrix(const std::array<double, 9>& r) {
  Eigen::Matrix3d m;
  m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return m;
}

std::array<double, 9> from_matrix(const Eigen::Matrix3d& m) {
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
}

double signed_area(const std::vector<std::array<double, 2>>& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    area += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * area;
}

struct Face {
  Eigen::Vector3d normal;  // world frame, into the room
  double d = 0.0;
  Semantic semantic = Semantic::Wall;
  Eigen::Vector2d a{0, 0};  // wall endpoints (x, z)
  Eigen::Vector2d b{0, 0};
};

// Finite faces of a prism room, ray cast from the camera center.
class RoomModel {
 public:
  RoomModel(const RoomGeometry& room) : room_(room), world_to_cam_(to_matrix(room.rotation)) {
    const auto& fp = room.footprint;
    faces_.push_back({Eigen::Vector3d(0, -1, 0), room.floor_y, Semantic::Floor});
    faces_.push_back({Eigen::Vector3d(0, 1, 0), -room.ceiling_y, Semantic::Ceiling});
    const bool ccw = signed_area(fp) > 0.0;
    for (std::size_t i = 0; i < fp.size(); ++i) {
      const Eigen::Vector2d a(fp[i][0], fp[i][1]);
      const Eigen::Vector2d b(fp[(i + 1) % fp.size()][0], fp[(i + 1) % fp.size()][1]);
      const Eigen::Vector2d e = b - a;
      Eigen::Vector2d n = ccw ? Eigen::Vector2d(-e.y(), e.x()) : Eigen::Vector2d(e.y(), -e.x());
      n.normalize();
      Face f;
      f.normal = Eigen::Vector3d(n.x(), 0.0, n.y());
      f.d = -n.dot(a);
      f.semantic = Semantic::Wall;
      f.a = a;
      f.b = b;
      faces_.push_back(f);
    }
    for (const auto& v : fp) footprint_.push_back({v[0], v[1]});
  }

  std::size_t size() const { return faces_.size(); }
  const Face& face(std::size_t i) const { return faces_[i]; }
  const Eigen::Matrix3d& world_to_cam() const { return world_to_cam_; }

  PlaneEq3D camera_plane(std::size_t i) const {
    const Eigen::Vector3d n = world_to_cam_ * faces_[i].normal;
    return {n.x(), n.y(), n.z(), faces_[i].d};
  }

  // Ray through camera-frame direction with unit z; returns (face, depth).
  std::pair<int, double> raycast(const Eigen::Vector3d& dir_cam) const {
    const Eigen::Vector3d dir = world_to_cam_.transpose() * dir_cam;
    int best = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const Face& f = faces_[i];
      const double denom = f.normal.dot(dir);
      if (!(denom < 0.0)) continue;
      const double t = -f.d / denom;
      if (!(t > 0.0) || t > best_t * (1.0 + 1e-12)) continue;
      const Eigen::Vector3d hit = t * dir;
      if (!on_face(i, hit)) continue;
      if (best >= 0 && t >= best_t * (1.0 - 1e-12)) continue;  // tie keeps lower face
      best = static_cast<int>(i);
      best_t = t;
    }
    return {best, best_t};
  }

  // Nearest plane regardless of face extent (the argmax inverse-depth rule).
  std::pair<int, double> nearest_plane(const Eigen::Vector3d& dir_cam) const {
    const Eigen::Vector3d dir = world_to_cam_.transpose() * dir_cam;
    int best = -1;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const double denom = faces_[i].normal.dot(dir);
      if (!(denom < 0.0)) continue;
      const double t = -faces_[i].d / denom;
      if (t > 0.0 && t < best_t) {
        best = static_cast<int>(i);
        best_t = t;
      }
    }
    return {best, best_t};
  }

 private:
  bool on_face(std::size_t i, const Eigen::Vector3d& p) const {
    const Face& f = faces_[i];
    const double scale = 1.0 + p.norm();
    if (i == kFloor || i == kCeiling) {
      if (point_in_polygon(footprint_, p.x(), p.z())) return true;
      // Accept hits on the footprint boundary.
      for (std::size_t k = 0; k < footprint_.size(); ++k) {
        const auto& a = footprint_[k];
        const auto& b = footprint_[(k + 1) % footprint_.size()];
        const Eigen::Vector2d ab(b.u - a.u, b.v - a.v);
        const Eigen::Vector2d ap(p.x() - a.u, p.z() - a.v);
        const double s = std::clamp(ap.dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        if ((ap - s * ab).norm() <= kEdgeTol * scale) return true;
      }
      return false;
    }
    const Eigen::Vector2d ab = f.b - f.a;
    const Eigen::Vector2d ap(p.x() - f.a.x(), p.z() - f.a.y());
    const double s = ap.dot(ab) / ab.squaredNorm();
    const double tol = kEdgeTol * scale / ab.norm();
    if (s < -tol || s > 1.0 + tol) return false;
    return p.y() >= room_.ceiling_y - kEdgeTol * scale && p.y() <= room_.floor_y + kEdgeTol * scale;
  }

  RoomGeometry room_;
  Eigen::Matrix3d world_to_cam_;
  std::vector<Face> faces_;
  std::vector<Vertex2> footprint_;
};

Eigen::Vector3d pixel_ray(const CameraIntrinsics& cam, double col, double row) {
  return {(col - cam.u0) / cam.fx, (row - cam.v0) / cam.fy, 1.0};
}

void validate_room(const RoomGeometry& room) {
  if (room.footprint.size() < 3) {
    fail(ErrorCode::InvalidFootprint, "footprint needs at least 3 vertices");
  }
  std::vector<Vertex2> poly;
  for (const auto& v : room.footprint) poly.push_back({v[0], v[1]});
  if (!is_simple_polygon(poly)) fail(ErrorCode::InvalidFootprint, "footprint self-intersects");
  if (std::abs(signed_area(room.footprint)) < 1e-9) {
    fail(ErrorCode::InvalidFootprint, "footprint has no area");
  }
  if (!point_in_polygon(poly, 0.0, 0.0)) {
    fail(ErrorCode::InvalidFootprint, "camera lies outside the footprint");
  }
  if (!(room.floor_y > 0.0) || !(room.ceiling_y < 0.0)) {
    fail(ErrorCode::InvalidFootprint, "camera must lie between floor and ceiling");
  }
}

// Room vertex or edge expressed as the faces meeting there.
struct RoomVertex {
  Eigen::Vector3d world;
  std::array<int, 3> faces;
};
struct RoomEdge {
  Eigen::Vector3d p0;
  Eigen::Vector3d p1;
  std::array<int, 2> faces;
};

std::vector<RoomVertex> room_vertices(const RoomGeometry& room) {
  std::vector<RoomVertex> out;
  const int n = static_cast<int>(room.footprint.size());
  for (int i = 0; i < n; ++i) {
    const int prev_wall = 2 + (i + n - 1) % n;
    const int wall = 2 + i;
    const auto& v = room.footprint[i];
    out.push_back({Eigen::Vector3d(v[0], room.floor_y, v[1]), {kFloor, prev_wall, wall}});
    out.push_back({Eigen::Vector3d(v[0], room.ceiling_y, v[1]), {kCeiling, prev_wall, wall}});
  }
  return out;
}

std::vector<RoomEdge> room_edges(const RoomGeometry& room) {
  std::vector<RoomEdge> out;
  const int n = static_cast<int>(room.footprint.size());
  for (int i = 0; i < n; ++i) {
    const auto& a = room.footprint[i];
    const auto& b = room.footprint[(i + 1) % n];
    const int prev_wall = 2 + (i + n - 1) % n;
    const int wall = 2 + i;
    out.push_back({Eigen::Vector3d(a[0], room.floor_y, a[1]),
                   Eigen::Vector3d(a[0], room.ceiling_y, a[1]), {prev_wall, wall}});
    out.push_back({Eigen::Vector3d(a[0], room.floor_y, a[1]),
                   Eigen::Vector3d(b[0], room.floor_y, b[1]), {kFloor, wall}});
    out.push_back({Eigen::Vector3d(a[0], room.ceiling_y, a[1]),
                   Eigen::Vector3d(b[0], room.ceiling_y, b[1]), {kCeiling, wall}});
  }
  return out;
}

bool visible_at(const RoomModel& model, const CameraIntrinsics& cam, double u, double v,
                double z) {
  const auto [face, t] = model.raycast(pixel_ray(cam, u, v));
  return face >= 0 && std::abs(t - z) <= 1e-7 * z;
}

// Analytic layout corners: projected room vertices joining three visible
// faces, and room edges crossing the raster border.
std::vector<Corner> analytic_corners(const RoomGeometry& room, const RoomModel& model,
                                     const CameraIntrinsics& cam,
                                     const std::vector<std::int32_t>& face_to_label) {
  std::vector<Corner> corners;
  const double umax = cam.width - 1.0;
  const double vmax = cam.height - 1.0;
  auto label_of = [&](int face) { return face_to_label[face]; };

  for (const auto& vert : room_vertices(room)) {
    if (label_of(vert.faces[0]) < 0 || label_of(vert.faces[1]) < 0 ||
        label_of(vert.faces[2]) < 0) {
      continue;
    }
    const Eigen::Vector3d p = model.world_to_cam() * vert.world;
    if (p.z() <= 1e-9) continue;
    const double u = cam.fx * p.x() / p.z() + cam.u0;
    const double v = cam.fy * p.y() / p.z() + cam.v0;
    if (u < 0.0 || u > umax || v < 0.0 || v > vmax) continue;
    if (!visible_at(model, cam, u, v, p.z())) continue;
    Corner c{u, v, p.z(), {label_of(vert.faces[0]), label_of(vert.faces[1]),
                           label_of(vert.faces[2])}, BorderEdge::None};
    std::sort(c.surfaces.begin(), c.surfaces.end());
    corners.push_back(std::move(c));
  }

  for (const auto& edge : room_edges(room)) {
    const int la = label_of(edge.faces[0]);
    const int lb = label_of(edge.faces[1]);
    if (la < 0 || lb < 0) continue;
    const Eigen::Vector3d p0 = model.world_to_cam() * edge.p0;
    const Eigen::Vector3d p1 = model.world_to_cam() * edge.p1;
    struct Border {
      BorderEdge edge;
      bool vertical;
      double value;
    };
    const std::array<Border, 4> borders{{{BorderEdge::Left, true, 0.0},
                                         {BorderEdge::Right, true, umax},
                                         {BorderEdge::Top, false, 0.0},
                                         {BorderEdge::Bottom, false, vmax}}};
    for (const auto& border : borders) {
      // Plane through the camera center containing the border line.
      auto g = [&](const Eigen::Vector3d& p) {
        return border.vertical ? cam.fx * p.x() - (border.value - cam.u0) * p.z()
                               : cam.fy * p.y() - (border.value - cam.v0) * p.z();
      };
      const double g0 = g(p0);
      const double g1 = g(p1);
      if (g0 == g1) continue;
      const double s = g0 / (g0 - g1);
      if (s < 0.0 || s > 1.0) continue;
      const Eigen::Vector3d p = p0 + s * (p1 - p0);
      if (p.z() <= 1e-9) continue;
      double u = cam.fx * p.x() / p.z() + cam.u0;
      double v = cam.fy * p.y() / p.z() + cam.v0;
      if (border.vertical) {
        u = border.value;
        if (v < 0.0 || v > vmax) continue;
      } else {
        v = border.value;
        if (u < 0.0 || u > umax) continue;
      }
      if (!visible_at(model, cam, u, v, p.z())) continue;
      Corner c{u, v, p.z(), {std::min(la, lb), std::max(la, lb)}, border.edge};
      corners.push_back(std::move(c));
    }
  }
  return corners;
}

Eigen::Matrix3d camera_rotation(double yaw_deg, double pitch_deg, double roll_deg) {
  const Eigen::Matrix3d cam_to_world =
      (Eigen::AngleAxisd(deg2rad(yaw_deg), Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(deg2rad(pitch_deg), Eigen::Vector3d::UnitX()) *
       Eigen::AngleAxisd(deg2rad(roll_deg), Eigen::Vector3d::UnitZ()))
          .toRotationMatrix();
  return cam_to_world.transpose();
}

struct SceneStats {
  std::vector<std::size_t> label_pixels;
  std::size_t mislabeled = 0;  // nearest-plane rule vs true visibility
};

SceneStats scene_stats(const SceneSpec& spec) {
  SceneStats stats;
  stats.label_pixels.assign(spec.surfaces.size(), 0);
  const auto faces = visible_faces(spec.room, spec.cam);
  const auto params = spec.surface_params();
  std::vector<std::int32_t> face_to_label(spec.room.face_count(), -1);
  for (const auto& s : spec.surfaces) face_to_label[s.face] = s.label;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const int label = face_to_label[faces[i]];
    ++stats.label_pixels[label];
    const double u = spec.frame.u(faces.col_of(i));
    const double v = spec.frame.v(faces.row_of(i));
    int nearest = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double inv = params[k].inverse_depth(u, v);
      if (inv > best) {
        best = inv;
        nearest = static_cast<int>(k);
      }
    }
    stats.mislabeled += nearest != label;
  }
  return stats;
}

double param_distance(const SurfaceParams& a, const SurfaceParams& b) {
  const auto x = a.as_array();
  const auto y = b.as_array();
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

// Rejection criteria shared by the generators: well-sized, well-separated
// surfaces and corners that sit clear of the raster border and of each other.
bool acceptable(const SceneSpec& spec, const SynthOptions& options, const SceneStats& stats) {
  const double total = static_cast<double>(spec.cam.width) * spec.cam.height;
  if (spec.surfaces.size() < 2) return false;
  for (auto count : stats.label_pixels) {
    if (count < options.min_surface_fraction * total) return false;
  }
  const auto params = spec.surface_params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      if (param_distance(params[i], params[j]) < options.min_param_distance) return false;
    }
  }

  const double m = options.corner_margin_px;
  const double umax = spec.cam.width - 1.0;
  const double vmax = spec.cam.height - 1.0;
  // Room vertices whose faces are all visible must not hug the border.
  const RoomModel model(spec.room);
  std::vector<bool> visible(spec.room.face_count(), false);
  for (const auto& s : spec.surfaces) visible[s.face] = true;
  for (const auto& vert : room_vertices(spec.room)) {
    if (!visible[vert.faces[0]] || !visible[vert.faces[1]] || !visible[vert.faces[2]]) continue;
    const Eigen::Vector3d p = model.world_to_cam() * vert.world;
    if (p.z() <= 1e-9) continue;
    const double u = spec.cam.fx * p.x() / p.z() + spec.cam.u0;
    const double v = spec.cam.fy * p.y() / p.z() + spec.cam.v0;
    const bool near_outer = u > -m && u < umax + m && v > -m && v < vmax + m;
    const bool deep_inside = u >= m && u <= umax - m && v >= m && v <= vmax - m;
    if (near_outer && !deep_inside) return false;
  }
  const std::array<Vertex2, 4> image_corners{{{0, 0}, {umax, 0}, {0, vmax}, {umax, vmax}}};
  for (std::size_t i = 0; i < spec.gt_corners.size(); ++i) {
    const auto& a = spec.gt_corners[i];
    for (const auto& ic : image_corners) {
      if (std::hypot(a.u - ic.u, a.v - ic.v) < m) return false;
    }
    for (std::size_t j = i + 1; j < spec.gt_corners.size(); ++j) {
      const auto& b = spec.gt_corners[j];
      if (std::hypot(a.u - b.u, a.v - b.v) < m) return false;
    }
  }
  return true;
}

bool is_convex(const std::vector<std::array<double, 2>>& poly) {
  const std::size_t n = poly.size();
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    const auto& c = poly[(i + 2) % n];
    const double cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
    const int s = cr > 0 ? 1 : (cr < 0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

void check_options(const SynthOptions& options) {
  if (options.tilt_deg < 0.0 || options.tilt_deg > 10.0) {
    fail(ErrorCode::InvalidArgument, "tilt must lie in [0, 10] degrees");
  }
  if (options.noise_sigma < 0.0) fail(ErrorCode::InvalidArgument, "negative depth noise");
  if (options.clutter_fraction < 0.0 || options.clutter_fraction >= 1.0) {
    fail(ErrorCode::InvalidArgument, "clutter fraction must lie in [0, 1)");
  }
}

}  // namespace

std::vector<SurfaceParams> SceneSpec::surface_params() const {
  std::vector<SurfaceParams> out(surfaces.size());
  for (const auto& s : surfaces) out[s.label] = plane_to_surface(s.plane, cam, frame);
  return out;
}

RoomGeometry box_room(double width, double height, double depth, double cam_x,
                      double cam_height, double cam_z, double yaw_deg, double pitch_deg,
                      double roll_deg) {
  RoomGeometry room;
  const double x0 = -cam_x;
  const double x1 = width - cam_x;
  const double z0 = -cam_z;
  const double z1 = depth - cam_z;
  room.footprint = {{x0, z0}, {x1, z0}, {x1, z1}, {x0, z1}};
  room.floor_y = cam_height;
  room.ceiling_y = cam_height - height;
  room.rotation = from_matrix(camera_rotation(yaw_deg, pitch_deg, roll_deg));
  return room;
}

Grid<std::int32_t> visible_faces(const RoomGeometry& room, const CameraIntrinsics& cam) {
  cam.validate();
  const RoomModel model(room);
  Grid<std::int32_t> out(cam.width, cam.height, -1);
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const auto ray = pixel_ray(cam, col, row);
      auto [face, t] = model.raycast(ray);
      if (face < 0) face = model.nearest_plane(ray).first;
      out.at(col, row) = face;
    }
  }
  return out;
}

SceneSpec make_scene(const RoomGeometry& room, const CameraIntrinsics& cam, LayoutType type,
                     const SynthOptions& options, std::uint64_t seed) {
  cam.validate();
  check_options(options);
  validate_room(room);

  SceneSpec spec;
  spec.seed = seed;
  spec.cam = cam;
  spec.frame = PixelFrame::normalized(cam.width, cam.height);
  spec.layout_type = type;
  spec.room = room;
  spec.noise_sigma = options.noise_sigma;
  spec.clutter_fraction = options.clutter_fraction;

  const RoomModel model(room);
  const auto faces = visible_faces(room, cam);
  std::vector<std::size_t> counts(room.face_count(), 0);
  for (auto f : faces.values()) {
    if (f >= 0) ++counts[f];
  }
  std::vector<std::int32_t> face_to_label(room.face_count(), -1);
  for (std::size_t f = 0; f < room.face_count(); ++f) {
    if (counts[f] == 0) continue;
    const auto label = static_cast<std::int32_t>(spec.surfaces.size());
    face_to_label[f] = label;
    spec.surfaces.push_back({label, static_cast<int>(f), model.camera_plane(f),
                             model.face(f).semantic});
  }
  spec.gt_corners = analytic_corners(room, model, cam, face_to_label);
  return spec;
}

SceneSpec generate_cuboid(std::uint64_t seed, const CameraIntrinsics& cam,
                          const SynthOptions& options) {
  check_options(options);
  Rng rng(seed, 1);
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const double width = rng.uniform(3.0, 6.0);
    const double height = rng.uniform(2.4, 3.4);
    const double depth = rng.uniform(3.0, 7.0);
    const double cam_x = rng.uniform(0.3, 0.7) * width;
    const double cam_z = rng.uniform(0.05, 0.45) * depth;
    const double cam_h = rng.uniform(1.0, std::min(1.8, height - 0.4));
    const double yaw = rng.uniform(-40.0, 40.0);
    const double pitch = rng.uniform(-options.tilt_deg, options.tilt_deg);
    const double roll = rng.uniform(-options.tilt_deg, options.tilt_deg);
    const auto room = box_room(width, height, depth, cam_x, cam_h, cam_z, yaw, pitch, roll);
    auto spec = make_scene(room, cam, LayoutType::Cuboid, options, seed);
    if (acceptable(spec, options, scene_stats(spec))) return spec;
  }
  fail(ErrorCode::InvalidArgument,
       "no acceptable cuboid scene for seed " + std::to_string(seed) + "; check intrinsics");
}

SceneSpec generate_noncuboid(std::uint64_t seed, const CameraIntrinsics& cam, int n_walls,
                             const SynthOptions& options) {
  if (n_walls < 3) fail(ErrorCode::InvalidArgument, "non-cuboid rooms need at least 3 walls");
  check_options(options);
  Rng rng(seed, 2);
  const double step = 2.0 * std::numbers::pi / n_walls;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    const double offset = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<double> angles(n_walls);
    std::vector<double> radii(n_walls);
    for (int i = 0; i < n_walls; ++i) {
      angles[i] = offset + step * i + rng.uniform(-0.25, 0.25) * step;
      radii[i] = rng.uniform(3.5, 6.0);
    }
    double view = rng.uniform(0.0, 2.0 * std::numbers::pi);
    int notch = -1;
    if (n_walls >= 5) {
      notch = static_cast<int>(rng.index(n_walls));
      // Pull the notch vertex inside the chord joining its neighbors, which
      // makes it a concave vertex of the footprint.
      const int prev = (notch + n_walls - 1) % n_walls;
      const int next = (notch + 1) % n_walls;
      const Eigen::Vector2d a = radii[prev] * Eigen::Vector2d(std::sin(angles[prev]), std::cos(angles[prev]));
      const Eigen::Vector2d b = radii[next] * Eigen::Vector2d(std::sin(angles[next]), std::cos(angles[next]));
      const Eigen::Vector2d dir(std::sin(angles[notch]), std::cos(angles[notch]));
      const Eigen::Vector2d n(b.y() - a.y(), a.x() - b.x());
      const double chord = n.dot(a) / n.dot(dir);
      radii[notch] = rng.uniform(0.6, 0.9) * chord;
      view = angles[notch] + rng.uniform(-0.2, 0.2);
    }
    RoomGeometry room;
    for (int i = 0; i < n_walls; ++i) {
      room.footprint.push_back({radii[i] * std::sin(angles[i]), radii[i] * std::cos(angles[i])});
    }
    const double height = rng.uniform(2.4, 3.4);
    const double cam_h = rng.uniform(1.0, std::min(1.8, height - 0.4));
    room.floor_y = cam_h;
    room.ceiling_y = cam_h - height;
    const double pitch = rng.uniform(-options.tilt_deg, options.tilt_deg);
    const double roll = rng.uniform(-options.tilt_deg, options.tilt_deg);
    room.rotation = from_matrix(camera_rotation(view * 180.0 / std::numbers::pi, pitch, roll));

    if (n_walls < 5 && !is_convex(room.footprint)) continue;
    auto spec = make_scene(room, cam, LayoutType::NonCuboid, options, seed);
    const auto stats = scene_stats(spec);
    if (!acceptable(spec, options, stats)) continue;
    if (n_walls >= 5) {
      const double total = static_cast<double>(cam.width) * cam.height;
      if (is_convex(room.footprint) || spec.surfaces.size() < 4) continue;
      if (stats.mislabeled < options.min_mislabel_fraction * total) continue;
    }
    return spec;
  }
  fail(ErrorCode::InvalidArgument,
       "no acceptable non-cuboid scene for seed " + std::to_string(seed));
}

RenderedScene render_scene(const SceneSpec& spec) {
  const int w = spec.cam.width;
  const int h = spec.cam.height;
  const auto faces = visible_faces(spec.room, spec.cam);
  const auto params = spec.surface_params();
  std::vector<std::int32_t> face_to_label(spec.room.face_count(), -1);
  for (const auto& s : spec.surfaces) face_to_label[s.face] = s.label;

  RenderedScene out;
  out.segmentation = SegmentationMap(w, h, kUnassigned);
  out.params = ParamMap(w, h, spec.frame);
  out.layout_depth = DepthMap(w, h, 0.0);
  out.clutter_mask = Grid<std::uint8_t>(w, h, 0);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto label = face_to_label[faces[i]];
    if (label < 0) fail(ErrorCode::InvalidArgument, "scene surfaces do not cover the image");
    out.segmentation[i] = label;
    out.params[i] = params[label];
    const double z =
        depth_at(params[label], spec.frame.u(faces.col_of(i)), spec.frame.v(faces.row_of(i)));
    out.layout_depth[i] = z;
    out.layout_depth.set_valid(i, z > 0.0 && std::isfinite(z));
  }

  out.original_depth = out.layout_depth;
  if (spec.clutter_fraction > 0.0) {
    // Fronto-parallel rectangles in front of the layout.
    Rng rng(spec.seed, 3);
    const std::size_t target =
        static_cast<std::size_t>(std::ceil(spec.clutter_fraction * static_cast<double>(w * h)));
    std::size_t covered = 0;
    while (covered < target) {
      const int rw = std::max(1, static_cast<int>(rng.uniform(0.08, 0.3) * w));
      const int rh = std::max(1, static_cast<int>(rng.uniform(0.08, 0.3) * h));
      const int c0 = static_cast<int>(rng.index(static_cast<std::size_t>(w - rw + 1)));
      const int r0 = static_cast<int>(rng.index(static_cast<std::size_t>(h - rh + 1)));
      double nearest = std::numeric_limits<double>::infinity();
      for (int r = r0; r < r0 + rh; ++r) {
        for (int c = c0; c < c0 + rw; ++c) nearest = std::min(nearest, out.original_depth.at(c, r));
      }
      const double z = rng.uniform(0.5, 0.85) * nearest;
      for (int r = r0; r < r0 + rh; ++r) {
        for (int c = c0; c < c0 + rw; ++c) {
          const auto i = out.original_depth.index(c, r);
          if (!out.clutter_mask[i]) ++covered;
          out.clutter_mask[i] = 1;
          out.original_depth[i] = std::min(out.original_depth[i], z);
        }
      }
    }
  }
  if (spec.noise_sigma > 0.0) {
    Rng rng(spec.seed, 4);
    for (std::size_t i = 0; i < out.original_depth.size(); ++i) {
      if (!out.original_depth.valid(i)) continue;
      out.original_depth[i] = std::max(1e-3, out.original_depth[i] + rng.normal(0.0, spec.noise_sigma));
    }
  }
  return out;
}

std::vector<RegionAnnotation> region_annotations(const SceneSpec& spec,
                                                 const SegmentationMap& seg) {
  std::vector<RegionAnnotation> out;
  for (const auto& s : spec.surfaces) {
    auto polygon = trace_region(seg, s.label);
    if (polygon.empty()) continue;
    out.push_back({s.label, s.semantic, std::move(polygon)});
  }
  return out;
}

Grid<std::array<double, 3>> surface_normals(const SceneSpec& spec, const SegmentationMap& seg) {
  Grid<std::array<double, 3>> out(seg.width(), seg.height(), {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const auto label = seg[i];
    if (label < 0 || label >= static_cast<std::int32_t>(spec.surfaces.size())) continue;
    const auto& plane = spec.surfaces[label].plane;
    out[i] = {plane.a, plane.b, plane.c};
  }
  return out;
}

}  // namespace roomlayout
