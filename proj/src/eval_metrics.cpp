#include "roomlayout/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "roomlayout/assignment.hpp"

namespace roomlayout {

namespace {

std::map<std::int32_t, int> label_index(const SegmentationMap& seg) {
  std::map<std::int32_t, int> index;
  for (auto label : seg.values()) {
    if (label >= 0) index.emplace(label, 0);
  }
  int k = 0;
  for (auto& [label, id] : index) id = k++;
  return index;
}

// Optimal matching of two corner sets under a distance; returns summed matched
// distance and the matched count.
template <typename Dist>
std::pair<double, std::size_t> match_corners(std::size_t np, std::size_t ng, Dist dist) {
  if (np == 0 || ng == 0) return {0.0, 0};
  std::vector<double> cost(np * ng);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < ng; ++j) cost[i * ng + j] = dist(i, j);
  }
  const auto assign = min_cost_assignment(cost, static_cast<int>(np), static_cast<int>(ng));
  double sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < np; ++i) {
    if (assign[i] < 0) continue;
    sum += cost[i * ng + assign[i]];
    ++matched;
  }
  return {sum, matched};
}

}  // namespace

double pixel_error(const SegmentationMap& pred, const SegmentationMap& gt, LabelMatching matching) {
  require_same_shape(pred, gt, "pixel_error");
  std::size_t total = 0;
  for (auto label : gt.values()) total += label >= 0;
  if (total == 0) fail(ErrorCode::EmptyOverlap, "ground truth has no labeled pixels");

  std::size_t correct = 0;
  if (matching == LabelMatching::Identity) {
    for (std::size_t i = 0; i < gt.size(); ++i) correct += gt[i] >= 0 && pred[i] == gt[i];
  } else {
    const auto pi = label_index(pred);
    const auto gi = label_index(gt);
    const int np = static_cast<int>(pi.size());
    const int ng = static_cast<int>(gi.size());
    std::vector<double> counts(static_cast<std::size_t>(np) * ng, 0.0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i] < 0 || pred[i] < 0) continue;
      counts[static_cast<std::size_t>(pi.at(pred[i])) * ng + gi.at(gt[i])] += 1.0;
    }
    std::vector<double> cost(counts.size());
    std::transform(counts.begin(), counts.end(), cost.begin(), [](double c) { return -c; });
    const auto assign = min_cost_assignment(cost, np, ng);
    for (int p = 0; p < np; ++p) {
      if (assign[p] >= 0) correct += static_cast<std::size_t>(counts[static_cast<std::size_t>(p) * ng + assign[p]]);
    }
  }
  return 100.0 * static_cast<double>(total - correct) / static_cast<double>(total);
}

double corner_error_2d(std::span<const Corner> pred, std::span<const Corner> gt, int width,
                       int height) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "image size must be positive");
  const double diagonal = std::hypot(static_cast<double>(width), static_cast<double>(height));
  const auto [sum, matched] = match_corners(pred.size(), gt.size(), [&](std::size_t i, std::size_t j) {
    return std::hypot(pred[i].u - gt[j].u, pred[i].v - gt[j].v);
  });
  const double unmatched = static_cast<double>(std::max(pred.size(), gt.size()) - matched);
  const double denom = static_cast<double>(std::max<std::size_t>(gt.size(), 1));
  return (sum + diagonal * unmatched) / denom / diagonal * 100.0;
}

Corner3DError corner_error_3d(std::span<const Corner> pred, std::span<const Corner> gt,
                              const CameraIntrinsics& cam) {
  cam.validate();
  auto lift = [&](const Corner& c) { return backproject_pixel(c.u, c.v, c.z, cam); };
  const auto [sum, matched] = match_corners(pred.size(), gt.size(), [&](std::size_t i, std::size_t j) {
    const auto a = lift(pred[i]);
    const auto b = lift(gt[j]);
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
  });
  Corner3DError out;
  out.sum = sum;
  out.matched = matched;
  out.unmatched = std::max(pred.size(), gt.size()) - matched;
  out.mean = matched > 0 ? sum / static_cast<double>(matched) : 0.0;
  return out;
}

DepthReport depth_metrics(const DepthMap& pred, const DepthMap& gt) {
  require_same_shape(pred, gt, "depth_metrics");
  DepthReport out;
  double sq = 0.0;
  double rel = 0.0;
  double lg = 0.0;
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t d3 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pred.valid(i) || !gt.valid(i)) continue;
    const double z = pred[i];
    const double t = gt[i];
    if (!(z > 0.0) || !(t > 0.0) || !std::isfinite(z) || !std::isfinite(t)) continue;
    ++out.pixels;
    sq += (z - t) * (z - t);
    rel += std::abs(z - t) / t;
    lg += std::abs(std::log10(z) - std::log10(t));
    const double ratio = std::max(z / t, t / z);
    d1 += ratio < 1.25;
    d2 += ratio < 1.25 * 1.25;
    d3 += ratio < 1.25 * 1.25 * 1.25;
  }
  if (out.pixels == 0) fail(ErrorCode::EmptyOverlap, "no pixel is valid in both depth maps");
  const double n = static_cast<double>(out.pixels);
  out.rms = std::sqrt(sq / n);
  out.rel = rel / n;
  out.log10 = lg / n;
  out.delta1 = static_cast<double>(d1) / n;
  out.delta2 = static_cast<double>(d2) / n;
  out.delta3 = static_cast<double>(d3) / n;
  return out;
}

MetricReport evaluate_layout(const LayoutPrediction& pred, const LayoutPrediction& gt,
                             const CameraIntrinsics& cam, LabelMatching matching) {
  MetricReport out;
  out.e_pix = pixel_error(pred.seg, gt.seg, matching);
  out.e_cor = corner_error_2d(pred.corners, gt.corners, gt.seg.width(), gt.seg.height());
  out.e_3d_cor = corner_error_3d(pred.corners, gt.corners, cam);
  out.depth = depth_metrics(pred.depth, gt.depth);
  return out;
}

MetricSummary aggregate(std::span<const MetricReport> reports) {
  MetricSummary out;
  out.images = reports.size();
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  double corner_sum = 0.0;
  std::size_t corners = 0;
  std::size_t images_with_match = 0;
  out.depth = DepthReport{0, 0, 0, 0, 0, 0, 0};
  for (const auto& r : reports) {
    out.e_pix += r.e_pix / n;
    out.e_cor += r.e_cor / n;
    if (r.e_3d_cor.matched > 0) {
      out.e_3d_cor_per_image += r.e_3d_cor.mean;
      ++images_with_match;
    }
    corner_sum += r.e_3d_cor.sum;
    corners += r.e_3d_cor.matched;
    out.depth.rms += r.depth.rms / n;
    out.depth.rel += r.depth.rel / n;
    out.depth.log10 += r.depth.log10 / n;
    out.depth.delta1 += r.depth.delta1 / n;
    out.depth.delta2 += r.depth.delta2 / n;
    out.depth.delta3 += r.depth.delta3 / n;
    out.depth.pixels += r.depth.pixels;
  }
  if (images_with_match > 0) out.e_3d_cor_per_image /= static_cast<double>(images_with_match);
  if (corners > 0) out.e_3d_cor_per_corner = corner_sum / static_cast<double>(corners);
  return out;
}

}  // namespace roomlayout
