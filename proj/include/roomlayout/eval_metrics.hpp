#pragma once

#include <span>
#include <vector>

#include "roomlayout/geometry.hpp"

namespace roomlayout {

enum class LabelMatching {
  Optimal,   // best bijection between predicted and ground-truth labels
  Identity,  // labels carry fixed meaning (LSUN style)
};

// Percentage of ground-truth-labeled pixels whose prediction disagrees under
// the chosen matching. Unassigned predictions always count as errors.
double pixel_error(const SegmentationMap& pred, const SegmentationMap& gt,
                   LabelMatching matching = LabelMatching::Optimal);

// Optimal one-to-one matching by pixel distance; every unmatched corner costs
// the image diagonal. (sum + penalty) / max(|gt|, 1) / diagonal * 100.
double corner_error_2d(std::span<const Corner> pred, std::span<const Corner> gt, int width,
                       int height);

struct Corner3DError {
  double mean = 0.0;  // meters over matched corners, 0 when none match
  double sum = 0.0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
};

Corner3DError corner_error_3d(std::span<const Corner> pred, std::span<const Corner> gt,
                              const CameraIntrinsics& cam);

struct DepthReport {
  double rms = 0.0;
  double rel = 0.0;
  double log10 = 0.0;
  double delta1 = 1.0;
  double delta2 = 1.0;
  double delta3 = 1.0;
  std::size_t pixels = 0;
};

// Over pixels valid and positive in both maps; delta_j counts
// max(Z / Z*, Z* / Z) < 1.25^j strictly.
DepthReport depth_metrics(const DepthMap& pred, const DepthMap& gt);

struct MetricReport {
  double e_pix = 0.0;
  double e_cor = 0.0;
  Corner3DError e_3d_cor;
  DepthReport depth;
};

struct LayoutPrediction {
  SegmentationMap seg;
  DepthMap depth;
  std::vector<Corner> corners;
};

MetricReport evaluate_layout(const LayoutPrediction& pred, const LayoutPrediction& gt,
                             const CameraIntrinsics& cam,
                             LabelMatching matching = LabelMatching::Optimal);

struct MetricSummary {
  std::size_t images = 0;
  double e_pix = 0.0;
  double e_cor = 0.0;
  double e_3d_cor_per_image = 0.0;   // mean of per-image means (images with a match)
  double e_3d_cor_per_corner = 0.0;  // pooled over all matched corners
  DepthReport depth;                 // per-image means
};

MetricSummary aggregate(std::span<const MetricReport> reports);

}  // namespace roomlayout
