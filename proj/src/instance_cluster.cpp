#include "roomlayout/instance_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "roomlayout/random.hpp"

namespace roomlayout {

namespace {

double distance(const Point4& a, const Point4& b) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

SurfaceParams rescaled(const Point4& mean) {
  const double n = std::sqrt(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]);
  if (!(n > 1e-12)) fail(ErrorCode::DegenerateSurface, "instance mean has vanishing (p, q, r)");
  return {mean[0] / n, mean[1] / n, mean[2] / n, mean[3] * n};
}

}  // namespace

std::vector<MeanShiftCluster> mean_shift(std::span<const Point4> points,
                                         const MeanShiftConfig& config) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "mean shift needs at least one point");
  if (!(config.bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive");
  for (const auto& p : points) {
    for (double x : p) {
      if (!std::isfinite(x)) fail(ErrorCode::InvalidArgument, "non-finite point in mean shift");
    }
  }

  // Canonical weighted set of distinct points.
  std::map<Point4, std::size_t> weights;
  for (const auto& p : points) ++weights[p];
  std::vector<Point4> unique;
  std::vector<double> weight;
  unique.reserve(weights.size());
  for (const auto& [p, w] : weights) {
    unique.push_back(p);
    weight.push_back(static_cast<double>(w));
  }
  const std::size_t m = unique.size();

  std::vector<Point4> converged(m);
  for (std::size_t i = 0; i < m; ++i) {
    Point4 x = unique[i];
    for (int it = 0; it < config.max_iterations; ++it) {
      Point4 sum{0, 0, 0, 0};
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (distance(x, unique[j]) > config.bandwidth) continue;
        for (int k = 0; k < 4; ++k) sum[k] += weight[j] * unique[j][k];
        total += weight[j];
      }
      if (total == 0.0) break;
      Point4 next;
      for (int k = 0; k < 4; ++k) next[k] = sum[k] / total;
      const double shift = distance(next, x);
      x = next;
      if (shift < config.tolerance) break;
    }
    converged[i] = x;
  }

  DisjointSets sets(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (distance(converged[i], converged[j]) < 0.5 * config.bandwidth) sets.unite(i, j);
    }
  }
  std::map<std::size_t, std::pair<Point4, double>> groups;
  for (std::size_t i = 0; i < m; ++i) {
    auto& [sum, total] = groups[sets.find(i)];
    for (int k = 0; k < 4; ++k) sum[k] += weight[i] * converged[i][k];
    total += weight[i];
  }
  std::vector<Point4> modes;
  for (const auto& [root, acc] : groups) {
    Point4 mode;
    for (int k = 0; k < 4; ++k) mode[k] = acc.first[k] / acc.second;
    modes.push_back(mode);
  }
  std::sort(modes.begin(), modes.end());

  std::vector<MeanShiftCluster> clusters(modes.size());
  for (std::size_t c = 0; c < modes.size(); ++c) clusters[c].mode = modes[c];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < modes.size(); ++c) {
      const double d = distance(points[i], modes[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    clusters[best].members.push_back(i);
  }
  std::erase_if(clusters, [](const MeanShiftCluster& c) { return c.members.empty(); });
  return clusters;
}

std::vector<MeanShiftCluster> mean_shift(std::span<const Point4> points, double bandwidth) {
  MeanShiftConfig config;
  config.bandwidth = bandwidth;
  return mean_shift(points, config);
}

void ClusterConfig::validate() const {
  if (!(bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (min_fraction < 0.0 || min_fraction >= 1.0) {
    fail(ErrorCode::InvalidArgument, "min_fraction must lie in [0, 1)");
  }
  if (max_seeds < 1) fail(ErrorCode::InvalidArgument, "max_seeds must be positive");
}

std::vector<SurfaceParams> ClusterSet::params() const {
  std::vector<SurfaceParams> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(inst.params);
  return out;
}

ClusterSet cluster_param_map(const ParamMap& pm, const ClusterConfig& config) {
  config.validate();
  std::vector<std::size_t> pixels;
  std::vector<Point4> values;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    if (!pm.valid(i)) continue;
    const auto a = pm[i].as_array();
    if (!std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); })) continue;
    pixels.push_back(i);
    values.push_back(a);
  }
  if (pixels.empty()) fail(ErrorCode::NoInstances, "parameter map has no valid pixels");

  std::vector<Point4> seeds;
  if (values.size() <= config.max_seeds) {
    seeds = values;
  } else {
    // Partial Fisher-Yates over pixel positions, then raster order.
    Rng rng(config.seed);
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < config.max_seeds; ++k) {
      const std::size_t j = k + rng.index(order.size() - k);
      std::swap(order[k], order[j]);
    }
    order.resize(config.max_seeds);
    std::sort(order.begin(), order.end());
    for (auto k : order) seeds.push_back(values[k]);
  }
  const auto clusters = mean_shift(seeds, config.bandwidth);

  std::vector<std::size_t> nearest(values.size());
  std::vector<std::size_t> counts(clusters.size(), 0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const double d = distance(values[k], clusters[c].mode);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    nearest[k] = best;
    ++counts[best];
  }

  const double floor = config.min_fraction * static_cast<double>(values.size());
  constexpr std::size_t kDropped = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> id_of(clusters.size(), kDropped);
  ClusterSet out;
  out.clustered_seg = SegmentationMap(pm.width(), pm.height(), kUnassigned);
  std::vector<Point4> sums;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto c = nearest[k];
    if (static_cast<double>(counts[c]) < floor) {
      ++out.dropped_pixels;
      continue;
    }
    if (id_of[c] == kDropped) {
      id_of[c] = sums.size();
      sums.push_back({0, 0, 0, 0});
      out.instances.push_back({static_cast<std::int32_t>(id_of[c]), {}, 0});
    }
    const auto id = id_of[c];
    for (int j = 0; j < 4; ++j) sums[id][j] += values[k][j];
    ++out.instances[id].pixel_count;
    out.clustered_seg[pixels[k]] = static_cast<std::int32_t>(id);
  }
  if (out.instances.empty()) {
    fail(ErrorCode::NoInstances, "all " + std::to_string(clusters.size()) +
                                     " clusters fall below min_fraction");
  }
  for (auto& inst : out.instances) {
    Point4 mean;
    const double n = static_cast<double>(inst.pixel_count);
    for (int j = 0; j < 4; ++j) mean[j] = sums[inst.id][j] / n;
    inst.params = rescaled(mean);
  }
  return out;
}

SurfaceParams instance_mean(const ParamMap& pm, const SegmentationMap& seg, std::int32_t label) {
  require_same_shape(pm, seg, "instance_mean");
  Point4 sum{0, 0, 0, 0};
  std::size_t n = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    if (seg[i] != label || !pm.valid(i)) continue;
    const auto a = pm[i].as_array();
    for (int j = 0; j < 4; ++j) sum[j] += a[j];
    ++n;
  }
  if (n == 0) fail(ErrorCode::EmptyRegion, "label " + std::to_string(label) + " has no pixels");
  for (auto& x : sum) x /= static_cast<double>(n);
  return rescaled(sum);
}

}  // namespace roomlayout
