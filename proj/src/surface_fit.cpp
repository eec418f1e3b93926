#include "roomlayout/surface_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "roomlayout/random.hpp"

namespace roomlayout {

namespace {

constexpr double kMaxCondition = 1e10;

}  // namespace

void RansacConfig::validate() const {
  if (iterations < 1) fail(ErrorCode::InvalidArgument, "RANSAC needs at least one iteration");
  if (!(inlier_tol > 0.0)) fail(ErrorCode::InvalidArgument, "inlier tolerance must be positive");
  if (min_inlier_ratio < 0.0 || min_inlier_ratio > 1.0) {
    fail(ErrorCode::InvalidArgument, "consensus floor must lie in [0, 1]");
  }
}

RawSurfaceParams lsq_fit_raw(std::span<const DepthSample> samples) {
  if (samples.size() < 3) {
    fail(ErrorCode::DegenerateConfiguration, "need at least 3 samples, got " +
                                                 std::to_string(samples.size()));
  }
  const double n = static_cast<double>(samples.size());
  double mu = 0.0;
  double mv = 0.0;
  for (const auto& s : samples) {
    if (!(s.z > 0.0) || !std::isfinite(s.z) || !std::isfinite(s.u) || !std::isfinite(s.v)) {
      fail(ErrorCode::InvalidArgument, "samples need finite coordinates and positive depth");
    }
    mu += s.u;
    mv += s.v;
  }
  mu /= n;
  mv /= n;
  double su = 0.0;
  double sv = 0.0;
  for (const auto& s : samples) {
    su += (s.u - mu) * (s.u - mu);
    sv += (s.v - mv) * (s.v - mv);
  }
  su = std::sqrt(su / n);
  sv = std::sqrt(sv / n);
  if (!(su > 0.0) || !(sv > 0.0)) {
    fail(ErrorCode::DegenerateConfiguration, "samples are collinear");
  }

  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const auto& s : samples) {
    const Eigen::Vector3d x((s.u - mu) / su, (s.v - mv) / sv, 1.0);
    normal += x * x.transpose();
    rhs += x / s.z;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    fail(ErrorCode::DegenerateConfiguration, "normal equations are singular (collinear samples)");
  }
  const Eigen::Vector3d x = normal.ldlt().solve(rhs);
  const double p_hat = x(0) / su;
  const double q_hat = x(1) / sv;
  return {p_hat, q_hat, x(2) - p_hat * mu - q_hat * mv};
}

SurfaceParams lsq_fit(std::span<const DepthSample> samples) {
  return normalize(lsq_fit_raw(samples));
}

double inverse_depth_residual(const RawSurfaceParams& raw, const DepthSample& sample) noexcept {
  return std::abs(raw.p_hat * sample.u + raw.q_hat * sample.v + raw.r_hat - 1.0 / sample.z);
}

double rms_residual(const SurfaceParams& params, std::span<const DepthSample> samples) {
  if (samples.empty()) return 0.0;
  const auto raw = params.raw();
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = inverse_depth_residual(raw, s);
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

FitResult ransac_fit(std::span<const DepthSample> samples, const RansacConfig& config) {
  config.validate();
  if (samples.size() < 3) {
    fail(ErrorCode::DegenerateConfiguration, "need at least 3 samples, got " +
                                                 std::to_string(samples.size()));
  }
  Rng rng(config.seed);
  const std::size_t n = samples.size();
  std::size_t best_count = 0;
  RawSurfaceParams best{};
  for (int it = 0; it < config.iterations; ++it) {
    const std::size_t i = rng.index(n);
    std::size_t j = rng.index(n - 1);
    if (j >= i) ++j;
    std::size_t k = rng.index(n - 2);
    if (k >= std::min(i, j)) ++k;
    if (k >= std::max(i, j)) ++k;
    const std::array<DepthSample, 3> minimal{samples[i], samples[j], samples[k]};
    RawSurfaceParams hypothesis;
    try {
      hypothesis = lsq_fit_raw(minimal);
    } catch (const Error&) {
      continue;
    }
    std::size_t count = 0;
    for (const auto& s : samples) count += inverse_depth_residual(hypothesis, s) <= config.inlier_tol;
    if (count > best_count) {
      best_count = count;
      best = hypothesis;
      if (count == n) break;
    }
  }
  const double ratio = static_cast<double>(best_count) / static_cast<double>(n);
  if (best_count < 3 || ratio < config.min_inlier_ratio) {
    fail(ErrorCode::NoConsensus, "best inlier ratio " + std::to_string(ratio) + " below floor " +
                                     std::to_string(config.min_inlier_ratio));
  }

  std::vector<DepthSample> consensus;
  consensus.reserve(best_count);
  for (const auto& s : samples) {
    if (inverse_depth_residual(best, s) <= config.inlier_tol) consensus.push_back(s);
  }
  const auto refit = lsq_fit_raw(consensus);

  FitResult result;
  result.params = normalize(refit);
  std::vector<DepthSample> inliers;
  for (const auto& s : samples) {
    if (inverse_depth_residual(refit, s) <= config.inlier_tol) inliers.push_back(s);
  }
  // The refit can shed a borderline sample; report the larger consensus.
  const auto& final_set = inliers.size() >= consensus.size() ? inliers : consensus;
  result.inlier_count = final_set.size();
  result.inlier_ratio = static_cast<double>(final_set.size()) / static_cast<double>(n);
  result.rms_residual = rms_residual(result.params, final_set);
  return result;
}

std::vector<DepthSample> region_samples(const DepthMap& depth, const RegionAnnotation& region,
                                        PixelFrame frame) {
  if (region.polygon.size() < 3 || !is_simple_polygon(region.polygon)) {
    fail(ErrorCode::InvalidArgument,
         "region " + std::to_string(region.id) + " is not a simple polygon");
  }
  std::vector<DepthSample> out;
  for (auto i : rasterize_polygon(region.polygon, depth.width(), depth.height())) {
    if (!depth.valid(i)) continue;
    const double z = depth[i];
    if (!(z > 0.0) || !std::isfinite(z)) continue;
    out.push_back({frame.u(depth.col_of(i)), frame.v(depth.row_of(i)), z});
  }
  return out;
}

std::vector<FitResult> fit_annotated(const DepthMap& depth,
                                     const std::vector<RegionAnnotation>& regions,
                                     const RansacConfig& config, PixelFrame frame) {
  std::vector<const RegionAnnotation*> ordered;
  for (const auto& r : regions) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });
  std::vector<FitResult> out;
  out.reserve(ordered.size());
  for (const auto* region : ordered) {
    const auto samples = region_samples(depth, *region, frame);
    if (samples.size() < 3) {
      fail(ErrorCode::EmptyRegion, "region " + std::to_string(region->id) + " covers " +
                                       std::to_string(samples.size()) + " valid pixels");
    }
    out.push_back(ransac_fit(samples, config));
  }
  return out;
}

}  // namespace roomlayout
