#include "roomlayout/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace roomlayout {

namespace {

using Vec4 = std::array<double, 4>;

double norm(const Vec4& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]); }

Vec4 minus(const Vec4& a, const Vec4& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }

void add_scaled(Vec4& acc, const Vec4& x, double w) {
  for (int k = 0; k < 4; ++k) acc[k] += w * x[k];
}

// d(1/Z)/d(p, q, r, s) at (u, v).
Vec4 inverse_depth_grad(const SurfaceParams& c, double u, double v) {
  return {u * c.s, v * c.s, c.s, c.p * u + c.q * v + c.r};
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Pixels that carry a label and a valid prediction, with per-label counts.
struct Membership {
  std::vector<std::size_t> counts;
};

Membership membership(const ParamMap& pred, const SegmentationMap& gt_seg) {
  require_same_shape(pred, gt_seg, "prediction vs segmentation");
  std::int32_t max_label = -1;
  for (auto label : gt_seg.values()) {
    if (label < kUnassigned) fail(ErrorCode::InvalidArgument, "negative segmentation label");
    max_label = std::max(max_label, label);
  }
  Membership m;
  m.counts.assign(static_cast<std::size_t>(max_label + 1), 0);
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    if (gt_seg[i] >= 0 && pred.valid(i)) ++m.counts[gt_seg[i]];
  }
  if (m.counts.empty()) fail(ErrorCode::EmptyOverlap, "segmentation has no labeled pixels");
  for (std::size_t c = 0; c < m.counts.size(); ++c) {
    if (m.counts[c] == 0) {
      fail(ErrorCode::InvalidArgument,
           "label " + std::to_string(c) + " has no valid pixels; labels must be dense");
    }
  }
  return m;
}

void check_instance_labels(std::span<const SurfaceParams> instances, const SegmentationMap& seg) {
  if (instances.empty()) fail(ErrorCode::InvalidArgument, "no instances");
  for (auto label : seg.values()) {
    if (label != kUnassigned &&
        (label < 0 || static_cast<std::size_t>(label) >= instances.size())) {
      fail(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " has no instance");
    }
  }
}

// Spreads instance gradients onto member pixels: each center is the mean of
// its pixels, so d center / d pixel = 1 / n_c.
ParamGrad chain_to_pixels(const InstanceLoss& loss, const ParamMap& pred,
                          const SegmentationMap& gt_seg, const Membership& m) {
  ParamGrad grad(pred.width(), pred.height(), Vec4{0, 0, 0, 0});
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0 || !pred.valid(i)) continue;
    const double w = 1.0 / static_cast<double>(m.counts[label]);
    add_scaled(grad[i], loss.grad[label], w);
  }
  return grad;
}

void add_grad(ParamGrad& acc, const ParamGrad& g, double w) {
  for (std::size_t i = 0; i < acc.size(); ++i) add_scaled(acc[i], g[i], w);
}

}  // namespace

void LossConfig::validate() const {
  for (double x : {delta_v, delta_d, k, alpha, beta, eta, theta}) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      fail(ErrorCode::InvalidArgument, "loss hyperparameters must be positive and finite");
    }
  }
}

LossValue loss_param_l1(const ParamMap& pred, const ParamMap& target) {
  require_same_shape(pred, target, "prediction vs target");
  LossValue out{0.0, ParamGrad(pred.width(), pred.height(), Vec4{0, 0, 0, 0})};
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += pred.valid(i) && target.valid(i);
  if (n == 0) fail(ErrorCode::EmptyOverlap, "prediction and target share no valid pixels");
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.valid(i) || !target.valid(i)) continue;
    const auto d = minus(pred[i].as_array(), target[i].as_array());
    for (int k = 0; k < 4; ++k) {
      out.value += std::abs(d[k]);
      out.grad[i][k] = w * sign(d[k]);
    }
  }
  out.value *= w;
  return out;
}

std::vector<SurfaceParams> instance_centers(const ParamMap& pred, const SegmentationMap& gt_seg) {
  const auto m = membership(pred, gt_seg);
  std::vector<Vec4> sums(m.counts.size(), Vec4{0, 0, 0, 0});
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    if (gt_seg[i] >= 0 && pred.valid(i)) add_scaled(sums[gt_seg[i]], pred[i].as_array(), 1.0);
  }
  std::vector<SurfaceParams> out;
  for (std::size_t c = 0; c < sums.size(); ++c) {
    for (auto& x : sums[c]) x /= static_cast<double>(m.counts[c]);
    out.push_back(SurfaceParams::from_array(sums[c]));
  }
  return out;
}

DiscriminativeLoss loss_discriminative(const ParamMap& pred, const SegmentationMap& gt_seg,
                                       const LossConfig& config) {
  config.validate();
  const auto m = membership(pred, gt_seg);
  const auto centers = instance_centers(pred, gt_seg);
  const std::size_t C = centers.size();
  DiscriminativeLoss out;
  out.grad_var = ParamGrad(pred.width(), pred.height(), Vec4{0, 0, 0, 0});
  out.grad_dist = ParamGrad(pred.width(), pred.height(), Vec4{0, 0, 0, 0});

  // Variance term. For an active pixel i with unit direction e_i away from
  // its center, pixel j of the same surface receives w * (e_i [i == j] - e_i / n_c).
  std::vector<Vec4> pulled(C, Vec4{0, 0, 0, 0});
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0 || !pred.valid(i)) continue;
    const auto d = minus(pred[i].as_array(), centers[label].as_array());
    const double dist = norm(d);
    if (!(dist > config.delta_v)) continue;
    const double w = 1.0 / (static_cast<double>(C) * static_cast<double>(m.counts[label]));
    out.l_var += w * (dist - config.delta_v);
    add_scaled(out.grad_var[i], d, w / dist);
    add_scaled(pulled[label], d, w / dist);
  }
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0 || !pred.valid(i)) continue;
    add_scaled(out.grad_var[i], pulled[label], -1.0 / static_cast<double>(m.counts[label]));
  }

  // Distance term over ordered pairs.
  if (C >= 2) {
    const double w = 1.0 / (static_cast<double>(C) * static_cast<double>(C - 1));
    std::vector<Vec4> center_grad(C, Vec4{0, 0, 0, 0});
    for (std::size_t a = 0; a < C; ++a) {
      for (std::size_t b = 0; b < C; ++b) {
        if (a == b) continue;
        const auto d = minus(centers[a].as_array(), centers[b].as_array());
        const double dist = norm(d);
        if (!(dist < config.delta_d)) continue;
        out.l_dist += w * (config.delta_d - dist);
        if (dist > 0.0) {
          add_scaled(center_grad[a], d, -w / dist);
          add_scaled(center_grad[b], d, w / dist);
        }
      }
    }
    for (std::size_t i = 0; i < gt_seg.size(); ++i) {
      const auto label = gt_seg[i];
      if (label < 0 || !pred.valid(i)) continue;
      add_scaled(out.grad_dist[i], center_grad[label], 1.0 / static_cast<double>(m.counts[label]));
    }
  }
  return out;
}

InstanceLoss depth_supervised_instances(std::span<const SurfaceParams> instances,
                                        const SegmentationMap& gt_seg, const DepthMap& gt_depth,
                                        PixelFrame frame) {
  require_same_shape(gt_seg, gt_depth, "segmentation vs depth");
  check_instance_labels(instances, gt_seg);
  InstanceLoss out{0.0, std::vector<Vec4>(instances.size(), Vec4{0, 0, 0, 0})};
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    n += gt_seg[i] >= 0 && gt_depth.valid(i) && gt_depth[i] > 0.0;
  }
  if (n == 0) fail(ErrorCode::EmptyOverlap, "no labeled pixel with valid ground-truth depth");
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0 || !gt_depth.valid(i) || !(gt_depth[i] > 0.0)) continue;
    const double u = frame.u(gt_seg.col_of(i));
    const double v = frame.v(gt_seg.row_of(i));
    const auto& c = instances[label];
    const double d = c.inverse_depth(u, v) - 1.0 / gt_depth[i];
    out.value += w * std::abs(d);
    add_scaled(out.grad[label], inverse_depth_grad(c, u, v), w * sign(d));
  }
  return out;
}

InstanceLoss depth_2d_instances(std::span<const SurfaceParams> instances,
                                const SegmentationMap& gt_seg, PixelFrame frame) {
  check_instance_labels(instances, gt_seg);
  InstanceLoss out{0.0, std::vector<Vec4>(instances.size(), Vec4{0, 0, 0, 0})};
  std::size_t n = 0;
  for (auto label : gt_seg.values()) n += label >= 0;
  if (n == 0) fail(ErrorCode::EmptyOverlap, "segmentation has no labeled pixels");
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0) continue;
    const double u = frame.u(gt_seg.col_of(i));
    const double v = frame.v(gt_seg.row_of(i));
    std::size_t best = 0;
    double best_inv = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < instances.size(); ++c) {
      const double inv = instances[c].inverse_depth(u, v);
      if (inv > best_inv) {
        best_inv = inv;
        best = c;
      }
    }
    // The gap max - labeled is never negative.
    const double gap = best_inv - instances[label].inverse_depth(u, v);
    if (!(gap > 0.0)) continue;
    out.value += w * gap;
    add_scaled(out.grad[best], inverse_depth_grad(instances[best], u, v), w);
    add_scaled(out.grad[label], inverse_depth_grad(instances[label], u, v), -w);
  }
  return out;
}

InstanceLoss stretch_instances(std::span<const SurfaceParams> instances,
                               const SegmentationMap& gt_seg, double k, PixelFrame frame) {
  check_instance_labels(instances, gt_seg);
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "stretch scale must be positive");
  const std::size_t C = instances.size();
  InstanceLoss out{0.0, std::vector<Vec4>(C, Vec4{0, 0, 0, 0})};
  std::size_t n = 0;
  for (auto label : gt_seg.values()) n += label >= 0;
  if (n == 0) fail(ErrorCode::EmptyOverlap, "segmentation has no labeled pixels");
  const double w = 1.0 / static_cast<double>(n);
  std::vector<double> logits(C);
  std::vector<double> soft(C);
  // Mean as the first weight plus the mean deviation from it, so C identical
  // instances give exactly -1/C.
  double first = 0.0;
  double deviation = 0.0;
  bool seen = false;
  for (std::size_t i = 0; i < gt_seg.size(); ++i) {
    const auto label = gt_seg[i];
    if (label < 0) continue;
    const double u = frame.u(gt_seg.col_of(i));
    const double v = frame.v(gt_seg.row_of(i));
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) {
      logits[c] = k * instances[c].inverse_depth(u, v);
      top = std::max(top, logits[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      soft[c] = std::exp(logits[c] - top);
      total += soft[c];
    }
    for (auto& x : soft) x /= total;
    const double wl = soft[label];
    if (!seen) {
      first = wl;
      seen = true;
    }
    deviation += wl - first;
    // d(-w_l)/d inv_c = -k w_l ([c == l] - w_c)
    for (std::size_t c = 0; c < C; ++c) {
      const double dinv = -k * wl * ((c == static_cast<std::size_t>(label) ? 1.0 : 0.0) - soft[c]);
      add_scaled(out.grad[c], inverse_depth_grad(instances[c], u, v), w * dinv);
    }
  }
  out.value = -(first + deviation / static_cast<double>(n));
  return out;
}

LossValue loss_depth_supervised(const ParamMap& pred, const SegmentationMap& gt_seg,
                                const DepthMap& gt_depth) {
  const auto m = membership(pred, gt_seg);
  const auto loss =
      depth_supervised_instances(instance_centers(pred, gt_seg), gt_seg, gt_depth, pred.frame);
  return {loss.value, chain_to_pixels(loss, pred, gt_seg, m)};
}

LossValue loss_depth_2d(const ParamMap& pred, const SegmentationMap& gt_seg) {
  const auto m = membership(pred, gt_seg);
  const auto loss = depth_2d_instances(instance_centers(pred, gt_seg), gt_seg, pred.frame);
  return {loss.value, chain_to_pixels(loss, pred, gt_seg, m)};
}

LossValue loss_stretch(const ParamMap& pred, const SegmentationMap& gt_seg, double k) {
  const auto m = membership(pred, gt_seg);
  const auto loss = stretch_instances(instance_centers(pred, gt_seg), gt_seg, k, pred.frame);
  return {loss.value, chain_to_pixels(loss, pred, gt_seg, m)};
}

LossBreakdown loss_total_3d(const ParamMap& pred, const ParamMap& target,
                            const SegmentationMap& gt_seg, const DepthMap& gt_depth,
                            const LossConfig& config) {
  config.validate();
  const auto lp = loss_param_l1(pred, target);
  const auto ld = loss_discriminative(pred, gt_seg, config);
  const auto lz = loss_depth_supervised(pred, gt_seg, gt_depth);
  LossBreakdown out;
  out.l_p = lp.value;
  out.l_var = ld.l_var;
  out.l_z = lz.value;
  out.total = out.l_p + config.alpha * out.l_var + config.beta * out.l_z;
  out.grad = lp.grad;
  add_grad(out.grad, ld.grad_var, config.alpha);
  add_grad(out.grad, lz.grad, config.beta);
  return out;
}

LossBreakdown loss_total_2d(const ParamMap& pred, const SegmentationMap& gt_seg,
                            const LossConfig& config) {
  config.validate();
  const auto ld = loss_discriminative(pred, gt_seg, config);
  const auto lz = loss_depth_2d(pred, gt_seg);
  const auto ls = loss_stretch(pred, gt_seg, config.k);
  LossBreakdown out;
  out.l_var = ld.l_var;
  out.l_dist = ld.l_dist;
  out.l_z = lz.value;
  out.l_s = ls.value;
  out.total = out.l_var + out.l_dist + config.eta * out.l_z + config.theta * out.l_s;
  out.grad = ld.grad_var;
  add_grad(out.grad, ld.grad_dist, 1.0);
  add_grad(out.grad, lz.grad, config.eta);
  add_grad(out.grad, ls.grad, config.theta);
  return out;
}

NonFiniteLossError::NonFiniteLossError(const std::string& message, std::vector<double> trace)
    : Error(ErrorCode::NonFiniteLoss, message), trace_(std::move(trace)) {}

namespace {

LossBreakdown evaluate(const ParamMap& pred, const TrainTarget& target, TrainMode mode,
                       const LossConfig& loss) {
  return mode == TrainMode::Supervised3D
             ? loss_total_3d(pred, target.params, target.seg, target.depth, loss)
             : loss_total_2d(pred, target.seg, loss);
}

bool finite_grad(const ParamGrad& g) {
  for (const auto& x : g.values()) {
    for (double y : x) {
      if (!std::isfinite(y)) return false;
    }
  }
  return true;
}

}  // namespace

double train_loss(const ParamMap& pred, const TrainTarget& target, TrainMode mode,
                  const LossConfig& loss) {
  return evaluate(pred, target, mode, loss).total;
}

OptimizeResult optimize_param_map(const ParamMap& init, const TrainTarget& target, TrainMode mode,
                                  const LossConfig& loss, const OptimizeConfig& config) {
  if (config.steps < 0) fail(ErrorCode::InvalidArgument, "negative step count");
  if (!(config.learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  OptimizeResult out{init, {}, 0};
  auto current = evaluate(out.params, target, mode, loss);
  out.trace.push_back(current.total);
  if (!std::isfinite(current.total) || !finite_grad(current.grad)) {
    throw NonFiniteLossError("initial loss is not finite", out.trace);
  }
  double lr = config.learning_rate;
  for (int step = 0; step < config.steps; ++step) {
    bool accepted = false;
    for (int attempt = 0; attempt <= config.max_backtracks; ++attempt) {
      ParamMap candidate = out.params;
      for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (!candidate.valid(i)) continue;
        auto a = candidate[i].as_array();
        add_scaled(a, current.grad[i], -lr);
        candidate[i] = SurfaceParams::from_array(a);
      }
      auto next = evaluate(candidate, target, mode, loss);
      if (std::isfinite(next.total) && finite_grad(next.grad) && next.total <= current.total) {
        out.params = std::move(candidate);
        current = std::move(next);
        lr *= config.grow;
        accepted = true;
        break;
      }
      lr *= config.shrink;
    }
    out.accepted_steps += accepted;
    out.trace.push_back(current.total);
    if (!std::isfinite(current.total)) {
      throw NonFiniteLossError("loss became non-finite at step " + std::to_string(step), out.trace);
    }
  }
  return out;
}

}  // namespace roomlayout
