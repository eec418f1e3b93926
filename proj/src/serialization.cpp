#include "roomlayout/serialization.hpp"

#include <string>

namespace roomlayout {

std::string_view to_string(BorderEdge edge) {
  switch (edge) {
    case BorderEdge::None: return "none";
    case BorderEdge::Left: return "left";
    case BorderEdge::Right: return "right";
    case BorderEdge::Top: return "top";
    case BorderEdge::Bottom: return "bottom";
  }
  return "none";
}

BorderEdge border_edge_from_string(std::string_view name) {
  for (auto e : {BorderEdge::None, BorderEdge::Left, BorderEdge::Right, BorderEdge::Top,
                 BorderEdge::Bottom}) {
    if (to_string(e) == name) return e;
  }
  fail(ErrorCode::InvalidArgument, "unknown image edge '" + std::string(name) + "'");
}

const Json& require(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorCode::MissingField, std::string(key) + " (in " + context + ")");
  }
  return j.at(key);
}

namespace {

double number(const Json& j, const char* key, const std::string& context) {
  const auto& v = require(j, key, context);
  if (!v.is_number()) fail(ErrorCode::InvalidArgument, std::string(key) + " in " + context + " is not a number");
  return v.get<double>();
}

}  // namespace

Json to_json(const SurfaceParams& p) { return {{"p", p.p}, {"q", p.q}, {"r", p.r}, {"s", p.s}}; }

Json to_json(const CameraIntrinsics& cam) {
  return {{"fx", cam.fx}, {"fy", cam.fy}, {"u0", cam.u0},
          {"v0", cam.v0}, {"width", cam.width}, {"height", cam.height}};
}

Json to_json(const Corner& c) {
  return {{"u", c.u}, {"v", c.v}, {"z", c.z}, {"surfaces", c.surfaces}, {"edge", to_string(c.edge)}};
}

Json to_json(const RegionAnnotation& r) {
  Json polygon = Json::array();
  for (const auto& v : r.polygon) polygon.push_back({v.u, v.v});
  return {{"id", r.id}, {"semantic", to_string(r.semantic)}, {"polygon", polygon}};
}

Json to_json(const FitResult& f) {
  return {{"params", to_json(f.params)},
          {"inlier_count", f.inlier_count},
          {"inlier_ratio", f.inlier_ratio},
          {"rms_residual", f.rms_residual}};
}

Json to_json(const ClusterSet& c) {
  Json instances = Json::array();
  for (const auto& inst : c.instances) {
    instances.push_back({{"id", inst.id}, {"params", to_json(inst.params)}, {"pixel_count", inst.pixel_count}});
  }
  std::size_t unassigned = 0;
  for (auto label : c.clustered_seg.values()) unassigned += label == kUnassigned;
  return {{"instances", instances}, {"dropped_pixels", c.dropped_pixels}, {"unassigned_pixels", unassigned}};
}

Json to_json(const LayoutResult& r) {
  Json instances = Json::array();
  for (const auto& p : r.instances) instances.push_back(to_json(p));
  Json corners = Json::array();
  for (const auto& c : r.corners.corners) corners.push_back(to_json(c));
  Json per_surface = Json::array();
  for (const auto& list : r.corners.surface_corners) per_surface.push_back(list);
  Json boundaries = Json::array();
  for (const auto& b : r.corners.boundaries) {
    Json line = Json::array();
    for (const auto& v : b.polyline) line.push_back({v.u, v.v});
    boundaries.push_back({{"surfaces", {b.a, b.b}}, {"polyline", line}});
  }
  Json ill = Json::array();
  for (const auto& c : r.corners.ill_conditioned) {
    ill.push_back({{"surfaces", c.surfaces}, {"determinant", c.determinant}});
  }
  Json out = {{"width", r.seg.width()},
              {"height", r.seg.height()},
              {"param_unit_px", r.frame.unit},
              {"instances", instances},
              {"corners", corners},
              {"surface_corners", per_surface},
              {"boundaries", boundaries},
              {"ill_conditioned_corners", ill},
              {"layer_fallback", r.layer_fallback}};
  if (r.corners_3d) {
    Json pts = Json::array();
    for (const auto& p : *r.corners_3d) pts.push_back({p.x, p.y, p.z});
    out["corners_3d"] = pts;
  }
  return out;
}

Json to_json(const DepthReport& d) {
  return {{"rms", d.rms},       {"rel", d.rel},       {"log10", d.log10}, {"delta1", d.delta1},
          {"delta2", d.delta2}, {"delta3", d.delta3}, {"pixels", d.pixels}};
}

Json to_json(const MetricReport& m) {
  return {{"e_pix", m.e_pix},
          {"e_cor", m.e_cor},
          {"e_3d_cor", m.e_3d_cor.mean},
          {"corners_matched", m.e_3d_cor.matched},
          {"corners_unmatched", m.e_3d_cor.unmatched},
          {"depth", to_json(m.depth)}};
}

Json to_json(const MetricSummary& s) {
  return {{"images", s.images},
          {"e_pix", s.e_pix},
          {"e_cor", s.e_cor},
          {"e_3d_cor_per_image", s.e_3d_cor_per_image},
          {"e_3d_cor_per_corner", s.e_3d_cor_per_corner},
          {"depth", to_json(s.depth)}};
}

Json to_json(const LossBreakdown& b) {
  return {{"total", b.total}, {"l_p", b.l_p}, {"l_var", b.l_var},
          {"l_dist", b.l_dist}, {"l_z", b.l_z}, {"l_s", b.l_s}};
}

SurfaceParams surface_params_from_json(const Json& j, const std::string& context) {
  return {number(j, "p", context), number(j, "q", context), number(j, "r", context),
          number(j, "s", context)};
}

CameraIntrinsics intrinsics_from_json(const Json& j, const std::string& context) {
  CameraIntrinsics cam;
  cam.fx = number(j, "fx", context);
  cam.fy = number(j, "fy", context);
  cam.u0 = number(j, "u0", context);
  cam.v0 = number(j, "v0", context);
  cam.width = static_cast<int>(number(j, "width", context));
  cam.height = static_cast<int>(number(j, "height", context));
  return cam;
}

Corner corner_from_json(const Json& j, const std::string& context) {
  Corner c;
  c.u = number(j, "u", context);
  c.v = number(j, "v", context);
  c.z = number(j, "z", context);
  c.surfaces = require(j, "surfaces", context).get<std::vector<std::int32_t>>();
  if (j.contains("edge")) c.edge = border_edge_from_string(j.at("edge").get<std::string>());
  return c;
}

RegionAnnotation annotation_from_json(const Json& j, const std::string& context) {
  RegionAnnotation r;
  r.id = static_cast<std::int32_t>(number(j, "id", context));
  r.semantic = semantic_from_string(require(j, "semantic", context).get<std::string>());
  for (const auto& v : require(j, "polygon", context)) {
    if (!v.is_array() || v.size() != 2) {
      fail(ErrorCode::InvalidArgument, "polygon vertices in " + context + " must be [u, v] pairs");
    }
    r.polygon.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return r;
}

std::vector<RegionAnnotation> annotations_from_json(const Json& j, const std::string& context) {
  const Json& list = j.is_object() ? require(j, "regions", context) : j;
  if (!list.is_array()) fail(ErrorCode::InvalidArgument, context + ": expected a list of regions");
  std::vector<RegionAnnotation> out;
  for (const auto& r : list) out.push_back(annotation_from_json(r, context));
  return out;
}

}  // namespace roomlayout
