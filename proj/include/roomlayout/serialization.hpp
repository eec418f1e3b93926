#pragma once

#include <json.hpp>

#include "roomlayout/annotation.hpp"
#include "roomlayout/eval_metrics.hpp"
#include "roomlayout/geometry.hpp"
#include "roomlayout/instance_cluster.hpp"
#include "roomlayout/layout_engine.hpp"
#include "roomlayout/objectives.hpp"
#include "roomlayout/surface_fit.hpp"

namespace roomlayout {

using Json = nlohmann::json;

std::string_view to_string(BorderEdge edge);
BorderEdge border_edge_from_string(std::string_view name);

Json to_json(const SurfaceParams& p);
Json to_json(const CameraIntrinsics& cam);
Json to_json(const Corner& c);
Json to_json(const RegionAnnotation& r);
Json to_json(const FitResult& f);
Json to_json(const ClusterSet& c);
Json to_json(const LayoutResult& r);
Json to_json(const DepthReport& d);
Json to_json(const MetricReport& m);
Json to_json(const MetricSummary& s);
Json to_json(const LossBreakdown& b);

// Readers throw MissingField naming `context` when a key is absent.
SurfaceParams surface_params_from_json(const Json& j, const std::string& context);
CameraIntrinsics intrinsics_from_json(const Json& j, const std::string& context);
Corner corner_from_json(const Json& j, const std::string& context);
RegionAnnotation annotation_from_json(const Json& j, const std::string& context);
std::vector<RegionAnnotation> annotations_from_json(const Json& j, const std::string& context);

// Value of a required key.
const Json& require(const Json& j, const char* key, const std::string& context);

}  // namespace roomlayout
