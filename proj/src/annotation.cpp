#include "roomlayout/annotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <unordered_map>

namespace roomlayout {

std::string_view to_string(Semantic semantic) {
  switch (semantic) {
    case Semantic::Floor: return "floor";
    case Semantic::Ceiling: return "ceiling";
    case Semantic::Wall: return "wall";
  }
  return "wall";
}

Semantic semantic_from_string(std::string_view name) {
  if (name == "floor") return Semantic::Floor;
  if (name == "ceiling") return Semantic::Ceiling;
  if (name == "wall") return Semantic::Wall;
  fail(ErrorCode::InvalidArgument, "unknown semantic '" + std::string(name) + "'");
}

namespace {

// Crossings of the polygon boundary with the horizontal line through v,
// using the half-open rule y1 <= v < y2 so shared vertices count once.
std::vector<double> scanline_crossings(std::span<const Vertex2> polygon, double v) {
  std::vector<double> xs;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex2& a = polygon[i];
    const Vertex2& b = polygon[(i + 1) % n];
    const bool crosses = (a.v <= v && v < b.v) || (b.v <= v && v < a.v);
    if (!crosses) continue;
    xs.push_back(a.u + (v - a.v) * (b.u - a.u) / (b.v - a.v));
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

double cross(const Vertex2& o, const Vertex2& a, const Vertex2& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

bool on_segment(const Vertex2& a, const Vertex2& b, const Vertex2& p) {
  return std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) && std::min(a.v, b.v) <= p.v &&
         p.v <= std::max(a.v, b.v);
}

// Proper crossing, or collinear overlap of positive length. Touching at an
// endpoint is allowed.
bool segments_conflict(const Vertex2& a, const Vertex2& b, const Vertex2& c, const Vertex2& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && d2 == 0 && d3 == 0 && d4 == 0) {
    // Collinear: project on the dominant axis and test overlap length.
    const bool use_u = std::abs(b.u - a.u) + std::abs(d.u - c.u) >=
                       std::abs(b.v - a.v) + std::abs(d.v - c.v);
    auto lo_hi = [&](const Vertex2& p, const Vertex2& q) {
      const double x = use_u ? p.u : p.v;
      const double y = use_u ? q.u : q.v;
      return std::pair{std::min(x, y), std::max(x, y)};
    };
    const auto [a0, a1] = lo_hi(a, b);
    const auto [c0, c1] = lo_hi(c, d);
    return std::min(a1, c1) - std::max(a0, c0) > 0.0;
  }
  // A vertex lying in the interior of the other segment.
  auto interior_touch = [](const Vertex2& s0, const Vertex2& s1, const Vertex2& p, double side) {
    return side == 0 && on_segment(s0, s1, p) && !(p == s0) && !(p == s1);
  };
  return interior_touch(c, d, a, d1) || interior_touch(c, d, b, d2) ||
         interior_touch(a, b, c, d3) || interior_touch(a, b, d, d4);
}

}  // namespace

bool point_in_polygon(std::span<const Vertex2> polygon, double u, double v) {
  if (polygon.size() < 3) return false;
  const auto xs = scanline_crossings(polygon, v);
  const auto right = std::count_if(xs.begin(), xs.end(), [u](double x) { return x > u; });
  return right % 2 == 1;
}

bool is_simple_polygon(std::span<const Vertex2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (const auto& p : polygon) {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex2& a = polygon[i];
    const Vertex2& b = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      const Vertex2& c = polygon[j];
      const Vertex2& d = polygon[(j + 1) % n];
      if (segments_conflict(a, b, c, d)) return false;
    }
  }
  return true;
}

std::vector<std::size_t> rasterize_polygon(std::span<const Vertex2> polygon, int width,
                                           int height) {
  std::vector<std::size_t> pixels;
  if (polygon.size() < 3) return pixels;
  for (int row = 0; row < height; ++row) {
    const auto xs = scanline_crossings(polygon, row);
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Even-odd: inside on [xs[k], xs[k+1]).
      const int first = std::max(0, static_cast<int>(std::ceil(xs[k])));
      for (int col = first; col < width && col < xs[k + 1]; ++col) {
        pixels.push_back(static_cast<std::size_t>(row) * width + col);
      }
    }
  }
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  return pixels;
}

std::vector<Vertex2> trace_region(const SegmentationMap& seg, std::int32_t label) {
  const int w = seg.width();
  const int h = seg.height();

  // Largest 4-connected component of the label.
  Grid<std::int32_t> component(w, h, -1);
  int best = -1;
  std::size_t best_size = 0;
  std::size_t best_first = 0;
  int next_id = 0;
  for (std::size_t start = 0; start < seg.size(); ++start) {
    if (seg[start] != label || component[start] >= 0) continue;
    std::size_t size = 0;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    component[start] = next_id;
    while (!frontier.empty()) {
      const auto i = frontier.front();
      frontier.pop();
      ++size;
      const int col = seg.col_of(i);
      const int row = seg.row_of(i);
      constexpr std::array<std::array<int, 2>, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
      for (const auto& [dc, dr] : kSteps) {
        const int c = col + dc;
        const int r = row + dr;
        if (!seg.contains(c, r)) continue;
        const auto j = seg.index(c, r);
        if (seg[j] == label && component[j] < 0) {
          component[j] = next_id;
          frontier.push(j);
        }
      }
    }
    if (size > best_size) {
      best = next_id;
      best_size = size;
      best_first = start;
    }
    ++next_id;
  }
  if (best < 0) return {};

  auto inside = [&](int col, int row) {
    return seg.contains(col, row) && component.at(col, row) == best;
  };

  // Directed boundary edges on the lattice of pixel corners; corner (x, y)
  // sits at pixel coordinates (x - 0.5, y - 0.5). The region stays on the
  // right-hand side (screen orientation, v down). Directions: 0 east,
  // 1 south, 2 west, 3 north.
  const int lattice_w = w + 1;
  auto vertex_id = [lattice_w](int x, int y) { return y * lattice_w + x; };
  constexpr std::array<std::array<int, 2>, 4> kDir{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  std::unordered_map<int, std::uint8_t> outgoing;  // bitmask of directions per vertex
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!inside(col, row)) continue;
      if (!inside(col, row - 1)) outgoing[vertex_id(col, row)] |= 1u << 0;
      if (!inside(col + 1, row)) outgoing[vertex_id(col + 1, row)] |= 1u << 1;
      if (!inside(col, row + 1)) outgoing[vertex_id(col + 1, row + 1)] |= 1u << 2;
      if (!inside(col - 1, row)) outgoing[vertex_id(col, row + 1)] |= 1u << 3;
    }
  }

  const int start_x = static_cast<int>(best_first % w);
  const int start_y = static_cast<int>(best_first / w);
  int x = start_x;
  int y = start_y;
  int dir = 0;
  std::vector<Vertex2> polygon;
  std::vector<std::array<int, 2>> corners;
  corners.push_back({x, y});
  outgoing[vertex_id(x, y)] &= static_cast<std::uint8_t>(~(1u << 0));
  const std::size_t max_steps = 4 * seg.size() + 8;
  for (std::size_t step = 0; step < max_steps; ++step) {
    x += kDir[dir][0];
    y += kDir[dir][1];
    if (x == start_x && y == start_y) break;
    auto& out = outgoing[vertex_id(x, y)];
    int next = -1;
    for (int turn : {1, 0, 3}) {  // right, straight, left
      const int candidate = (dir + turn) % 4;
      if (out & (1u << candidate)) {
        next = candidate;
        break;
      }
    }
    if (next < 0) break;
    out &= static_cast<std::uint8_t>(~(1u << next));
    if (next != dir) corners.push_back({x, y});
    dir = next;
  }
  polygon.reserve(corners.size());
  for (const auto& [cx, cy] : corners) polygon.push_back({cx - 0.5, cy - 0.5});
  return polygon;
}

}  // namespace roomlayout
