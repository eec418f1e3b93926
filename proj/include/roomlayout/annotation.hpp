#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "roomlayout/geometry.hpp"

namespace roomlayout {

enum class Semantic { Floor, Ceiling, Wall };

std::string_view to_string(Semantic semantic);
Semantic semantic_from_string(std::string_view name);

struct Vertex2 {
  double u = 0.0;
  double v = 0.0;

  bool operator==(const Vertex2&) const = default;
};

// Polygon drawn over the visible part of one surface, in pixel coordinates.
struct RegionAnnotation {
  std::int32_t id = 0;
  Semantic semantic = Semantic::Wall;
  std::vector<Vertex2> polygon;

  bool operator==(const RegionAnnotation&) const = default;
};

// Even-odd rule.
bool point_in_polygon(std::span<const Vertex2> polygon, double u, double v);

// True unless two non-adjacent edges properly cross or overlap.
bool is_simple_polygon(std::span<const Vertex2> polygon);

// Raster indices (row-major) of pixels whose centers fall inside the polygon.
std::vector<std::size_t> rasterize_polygon(std::span<const Vertex2> polygon, int width,
                                           int height);

// Outer boundary of the largest 4-connected component carrying `label`,
// traced along pixel edges. Rasterizing the result reproduces that component
// (plus any enclosed holes). Empty if the label is absent.
std::vector<Vertex2> trace_region(const SegmentationMap& seg, std::int32_t label);

}  // namespace roomlayout
