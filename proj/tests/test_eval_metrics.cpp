#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "roomlayout/assignment.hpp"
#include "roomlayout/eval_metrics.hpp"

using namespace roomlayout;

namespace {

// Exhaustive minimum over injective maps of the smaller side into the larger.
double brute_force_assignment(const std::vector<double>& cost, int rows, int cols) {
  const bool by_row = rows <= cols;
  const int small = by_row ? rows : cols;
  const int large = by_row ? cols : rows;
  std::vector<int> pick(large);
  std::iota(pick.begin(), pick.end(), 0);
  double best = 1e300;
  do {
    double sum = 0;
    for (int k = 0; k < small; ++k) {
      sum += by_row ? cost[k * cols + pick[k]] : cost[pick[k] * cols + k];
    }
    best = std::min(best, sum);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

Corner corner(double u, double v, double z = 1.0) { return {u, v, z, {}, BorderEdge::None}; }

}  // namespace

TEST_CASE("assignment matches exhaustive search") {
  Rng rng(61);
  for (int t = 0; t < 300; ++t) {
    const int rows = 1 + static_cast<int>(rng.index(6));
    const int cols = 1 + static_cast<int>(rng.index(6));
    std::vector<double> cost(rows * cols);
    for (auto& c : cost) c = t % 3 == 0 ? static_cast<double>(rng.index(4)) : rng.uniform(0, 10);
    const auto match = min_cost_assignment(cost, rows, cols);
    REQUIRE(match.size() == static_cast<std::size_t>(rows));
    double sum = 0;
    int matched = 0;
    std::vector<bool> used(cols, false);
    for (int r = 0; r < rows; ++r) {
      if (match[r] < 0) continue;
      CHECK_FALSE(used[match[r]]);
      used[match[r]] = true;
      sum += cost[r * cols + match[r]];
      ++matched;
    }
    CHECK(matched == std::min(rows, cols));
    CHECK(sum == doctest::Approx(brute_force_assignment(cost, rows, cols)).epsilon(1e-12));
  }
}

TEST_CASE("pixel error examples") {
  SegmentationMap a(2, 2, 0);
  a.at(1, 0) = 1;
  a.at(1, 1) = 1;
  CHECK(pixel_error(a, a) == 0.0);
  SegmentationMap swapped = a;
  for (auto& l : swapped.values()) l = 1 - l;
  CHECK(pixel_error(swapped, a) == 0.0);
  CHECK(pixel_error(swapped, a, LabelMatching::Identity) == 100.0);
  SegmentationMap one_off = swapped;
  one_off.at(0, 0) = 0;
  CHECK(std::abs(pixel_error(one_off, a) - 25.0) <= 1e-9);
  SegmentationMap unassigned = a;
  unassigned.at(0, 1) = kUnassigned;
  CHECK(pixel_error(unassigned, a) == 25.0);
  CHECK_THROWS_AS(pixel_error(SegmentationMap(3, 2, 0), a), Error);
}

TEST_CASE("pixel error matches exhaustive label matching") {
  Rng rng(62);
  for (int t = 0; t < 200; ++t) {
    const int w = 3 + static_cast<int>(rng.index(8));
    const int h = 3 + static_cast<int>(rng.index(8));
    const int gl = 1 + static_cast<int>(rng.index(4));
    const int pl = 1 + static_cast<int>(rng.index(5));
    SegmentationMap gt(w, h);
    SegmentationMap pred(w, h);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt[i] = static_cast<std::int32_t>(rng.index(gl));
      // Mostly a relabelled copy, with some noise and sentinels.
      pred[i] = rng.uniform() < 0.7 ? (gt[i] * 7 + 3) % pl : static_cast<std::int32_t>(rng.index(pl));
      if (rng.uniform() < 0.05) pred[i] = kUnassigned;
      if (rng.uniform() < 0.05) gt[i] = kUnassigned;
    }
    CHECK(pixel_error(pred, gt) == doctest::Approx(oracle::permutation_pixel_error(pred, gt)).epsilon(1e-12));
  }
}

TEST_CASE("corner error examples") {
  const std::vector<Corner> gt{corner(10, 10), corner(90, 10), corner(90, 90), corner(10, 90)};
  CHECK(corner_error_2d(gt, gt, 100, 100) == 0.0);
  CHECK(corner_error_2d(std::vector<Corner>{}, gt, 100, 100) == doctest::Approx(100.0).epsilon(1e-15));
  const std::vector<Corner> one{corner(50, 50)};
  const std::vector<Corner> moved{corner(53, 54)};
  CHECK(corner_error_2d(moved, one, 100, 100) == doctest::Approx(5.0 / std::sqrt(20000.0) * 100).epsilon(1e-12));
  CHECK(std::abs(corner_error_2d(moved, one, 100, 100) - 3.5355339) <= 1e-6);
  // Order does not matter.
  std::vector<Corner> reversed(gt.rbegin(), gt.rend());
  CHECK(corner_error_2d(reversed, gt, 100, 100) == 0.0);
  // An extra prediction costs one diagonal.
  auto extra = gt;
  extra.push_back(corner(50, 50));
  CHECK(corner_error_2d(extra, gt, 100, 100) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(corner_error_2d(std::vector<Corner>{}, std::vector<Corner>{}, 100, 100) == 0.0);
}

TEST_CASE("3D corner error examples") {
  const CameraIntrinsics cam{50, 50, 49.5, 49.5, 100, 100};
  const std::vector<Corner> gt{corner(49.5, 49.5, 3.0), corner(10, 20, 2.0)};
  const auto self = corner_error_3d(gt, gt, cam);
  CHECK(self.mean == 0.0);
  CHECK(self.matched == 2);
  const std::vector<Corner> deeper{corner(49.5, 49.5, 3.2), corner(10, 20, 2.0)};
  const auto e = corner_error_3d(deeper, gt, cam);
  CHECK(e.sum == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(e.mean == doctest::Approx(0.1).epsilon(1e-12));
  const std::vector<Corner> lone{corner(49.5, 49.5, 3.2)};
  const auto u = corner_error_3d(lone, gt, cam);
  CHECK(u.matched == 1);
  CHECK(u.unmatched == 1);
  CHECK(u.mean == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("depth metric examples") {
  const DepthMap two(4, 3, 2.0);
  const auto self = depth_metrics(two, two);
  CHECK(self.rms == 0.0);
  CHECK(self.rel == 0.0);
  CHECK(self.log10 == 0.0);
  CHECK(self.delta1 == 1.0);

  const DepthMap far(4, 3, 2.5);
  const auto r = depth_metrics(far, two);
  CHECK(std::abs(r.rms - 0.5) <= 1e-9);
  CHECK(std::abs(r.rel - 0.25) <= 1e-9);
  CHECK(std::abs(r.log10 - std::log10(1.25)) <= 1e-9);
  CHECK(std::abs(r.log10 - 0.09691) <= 1e-5);
  CHECK(r.delta1 == 0.0);
  CHECK(r.delta2 == 1.0);
  CHECK(r.delta3 == 1.0);
  CHECK(r.pixels == 12);

  // Swapping keeps rms and the thresholds but not rel.
  const auto s = depth_metrics(two, far);
  CHECK(s.rms == r.rms);
  CHECK(s.delta1 == r.delta1);
  CHECK(s.delta2 == r.delta2);
  CHECK(std::abs(s.rel - 0.2) <= 1e-9);

  const auto t = depth_metrics(DepthMap(2, 2, 1.3), DepthMap(2, 2, 1.0));
  CHECK(std::abs(t.rel - 0.3) <= 1e-9);
  CHECK(t.delta1 == 0.0);
  CHECK(t.delta2 == 1.0);

  DepthMap masked(2, 2, 1.0, false);
  CHECK_THROWS_AS(depth_metrics(masked, DepthMap(2, 2, 1.0)), Error);
  masked.set_valid(0, true);
  CHECK(depth_metrics(masked, DepthMap(2, 2, 1.0)).pixels == 1);
}

TEST_CASE("thresholds are ordered and symmetric") {
  Rng rng(63);
  for (int t = 0; t < 100; ++t) {
    DepthMap a(6, 5);
    DepthMap b(6, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform(0.5, 5);
      b[i] = a[i] * std::exp(rng.normal(0, 0.4));
    }
    const auto x = depth_metrics(a, b);
    const auto y = depth_metrics(b, a);
    CHECK(x.delta1 <= x.delta2);
    CHECK(x.delta2 <= x.delta3);
    CHECK(x.delta1 == y.delta1);
    CHECK(x.delta2 == y.delta2);
    CHECK(x.delta3 == y.delta3);
    CHECK(x.rms == doctest::Approx(y.rms).epsilon(1e-14));
    CHECK(x.log10 == doctest::Approx(y.log10).epsilon(1e-14));
  }
}

TEST_CASE("layout evaluation and aggregation") {
  const CameraIntrinsics cam{8, 8, 3.5, 3.5, 8, 8};
  LayoutPrediction gt{SegmentationMap(8, 8, 0), DepthMap(8, 8, 2.0), {corner(2, 2, 2.0)}};
  for (int col = 4; col < 8; ++col) {
    for (int row = 0; row < 8; ++row) gt.seg.at(col, row) = 1;
  }
  const auto self = evaluate_layout(gt, gt, cam);
  CHECK(self.e_pix == 0.0);
  CHECK(self.e_cor == 0.0);
  CHECK(self.e_3d_cor.mean == 0.0);
  CHECK(self.depth.delta1 == 1.0);

  LayoutPrediction off = gt;
  off.seg.at(0, 0) = 1;
  off.corners[0].z = 2.5;
  const auto r = evaluate_layout(off, gt, cam);
  CHECK(r.e_pix == doctest::Approx(100.0 / 64).epsilon(1e-12));
  CHECK(r.e_3d_cor.mean > 0.0);

  const std::vector<MetricReport> both{self, r};
  const auto sum = aggregate(both);
  CHECK(sum.images == 2);
  CHECK(sum.e_pix == doctest::Approx(50.0 / 64).epsilon(1e-12));
  CHECK(sum.e_3d_cor_per_corner == doctest::Approx(r.e_3d_cor.sum / 2).epsilon(1e-12));
  CHECK(sum.e_3d_cor_per_image == doctest::Approx(r.e_3d_cor.mean / 2).epsilon(1e-12));

  LayoutPrediction small{SegmentationMap(4, 4, 0), DepthMap(4, 4, 2.0), {}};
  CHECK_THROWS_AS(evaluate_layout(small, gt, cam), Error);
}
