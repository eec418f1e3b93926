#pragma once

#include <array>
#include <span>
#include <vector>

#include "roomlayout/geometry.hpp"

namespace roomlayout {

struct LossConfig {
  double delta_v = 0.1;
  double delta_d = 1.0;
  double k = 20.0;
  double alpha = 0.5;
  double beta = 1.0;
  double eta = 10.0;
  double theta = 0.03;

  void validate() const;
};

using ParamGrad = Grid<std::array<double, 4>>;  // d loss / d (p, q, r, s) per pixel

struct LossValue {
  double value = 0.0;
  ParamGrad grad;
};

struct DiscriminativeLoss {
  double l_var = 0.0;
  double l_dist = 0.0;
  ParamGrad grad_var;
  ParamGrad grad_dist;
};

// Loss over instance parameters with its gradient per instance.
struct InstanceLoss {
  double value = 0.0;
  std::vector<std::array<double, 4>> grad;
};

struct LossBreakdown {
  double total = 0.0;
  double l_p = 0.0;
  double l_var = 0.0;
  double l_dist = 0.0;
  double l_z = 0.0;
  double l_s = 0.0;
  ParamGrad grad;
};

// Mean over the pixels valid in both maps of the summed absolute channel
// differences. Throws EmptyOverlap when no pixel is shared.
LossValue loss_param_l1(const ParamMap& pred, const ParamMap& target);

// Per-label means of the predicted channels, as-is (no renormalization).
// Labels must be dense 0..C-1, each present on at least one valid pixel.
std::vector<SurfaceParams> instance_centers(const ParamMap& pred, const SegmentationMap& gt_seg);

// Variance and distance hinges with Euclidean norms. Gradients include the
// dependence of each center on its member pixels.
DiscriminativeLoss loss_discriminative(const ParamMap& pred, const SegmentationMap& gt_seg,
                                       const LossConfig& config = {});

// Mean |1/Z^{l*} - 1/Z*| using the ground-truth label's instance.
InstanceLoss depth_supervised_instances(std::span<const SurfaceParams> instances,
                                        const SegmentationMap& gt_seg, const DepthMap& gt_depth,
                                        PixelFrame frame);

// Mean |1/Z^{l*} - max_c 1/Z^c|.
InstanceLoss depth_2d_instances(std::span<const SurfaceParams> instances,
                                const SegmentationMap& gt_seg, PixelFrame frame);

// -mean softmax weight of the labeled instance over k * (1/Z^c).
InstanceLoss stretch_instances(std::span<const SurfaceParams> instances,
                               const SegmentationMap& gt_seg, double k, PixelFrame frame);

// Pixel-level versions: instances are the centers of `pred` over gt_seg, and
// gradients flow through those means into every member pixel.
LossValue loss_depth_supervised(const ParamMap& pred, const SegmentationMap& gt_seg,
                                const DepthMap& gt_depth);
LossValue loss_depth_2d(const ParamMap& pred, const SegmentationMap& gt_seg);
LossValue loss_stretch(const ParamMap& pred, const SegmentationMap& gt_seg, double k);

// L_p + alpha * L_var + beta * L_z
LossBreakdown loss_total_3d(const ParamMap& pred, const ParamMap& target,
                            const SegmentationMap& gt_seg, const DepthMap& gt_depth,
                            const LossConfig& config = {});

// L_var + L_dist + eta * L_z + theta * L_s
LossBreakdown loss_total_2d(const ParamMap& pred, const SegmentationMap& gt_seg,
                            const LossConfig& config = {});

enum class TrainMode { Supervised3D, Weak2D };

struct TrainTarget {
  ParamMap params;          // 3D mode only
  SegmentationMap seg;
  DepthMap depth;           // 3D mode only
};

struct OptimizeConfig {
  int steps = 300;
  double learning_rate = 1.0;
  double grow = 1.2;
  double shrink = 0.5;
  int max_backtracks = 40;
};

struct OptimizeResult {
  ParamMap params;
  std::vector<double> trace;  // loss before the first step and after each step
  int accepted_steps = 0;
};

class NonFiniteLossError : public Error {
 public:
  NonFiniteLossError(const std::string& message, std::vector<double> trace);
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

// Gradient descent with backtracking: a step is accepted only when the loss
// does not increase, so the trace is non-increasing.
OptimizeResult optimize_param_map(const ParamMap& init, const TrainTarget& target, TrainMode mode,
                                  const LossConfig& loss = {}, const OptimizeConfig& config = {});

double train_loss(const ParamMap& pred, const TrainTarget& target, TrainMode mode,
                  const LossConfig& loss = {});

}  // namespace roomlayout
