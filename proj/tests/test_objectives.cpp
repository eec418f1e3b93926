#include <doctest.h>

#include <cmath>

#include "fd.hpp"
#include "oracles.hpp"
#include "roomlayout/layout_engine.hpp"
#include "toy.hpp"

using namespace roomlayout;

namespace {

constexpr double kFdTol = 1e-5;

ParamMap constant_map(int w, int h, const std::vector<SurfaceParams>& by_label,
                      const SegmentationMap& seg) {
  ParamMap pm(w, h);
  for (std::size_t i = 0; i < pm.size(); ++i) pm[i] = by_label[seg[i]];
  return pm;
}

}  // namespace

TEST_CASE("L1 parameter loss") {
  ParamMap a(1, 1, PixelFrame::raw(), {0, 0, 1, 1});
  ParamMap b(1, 1, PixelFrame::raw(), {0, 0, 1, 1.5});
  const auto l = loss_param_l1(a, b);
  CHECK(l.value == 0.5);
  CHECK(l.grad[0] == std::array<double, 4>{0, 0, 0, -1});
  const auto z = loss_param_l1(a, a);
  CHECK(z.value == 0.0);
  CHECK(z.grad[0] == std::array<double, 4>{0, 0, 0, 0});

  ParamMap masked(1, 1, PixelFrame::raw(), {0, 0, 1, 1}, false);
  CHECK_THROWS_AS(loss_param_l1(a, masked), Error);
  CHECK_THROWS_AS(loss_param_l1(a, ParamMap(2, 1)), Error);
}

TEST_CASE("discriminative loss examples") {
  SegmentationMap seg(4, 2, 0);
  for (int row = 0; row < 2; ++row) seg.at(2, row) = seg.at(3, row) = 1;
  const auto far = loss_discriminative(
      constant_map(4, 2, {{0, 0, 1, 1}, {0, 0, 1, 2.5}}, seg), seg);
  CHECK(far.l_var == 0.0);
  CHECK(far.l_dist == 0.0);
  const auto same = loss_discriminative(
      constant_map(4, 2, {{0, 0, 1, 1}, {0, 0, 1, 1}}, seg), seg);
  CHECK(same.l_var == 0.0);
  CHECK(same.l_dist == doctest::Approx(1.0).epsilon(1e-15));

  // One surface: no distance term.
  const SegmentationMap single(4, 2, 0);
  ParamMap spread(4, 2, PixelFrame::raw(), {0, 0, 0, 0});
  spread[0] = {1, 0, 0, 0};
  const auto one = loss_discriminative(spread, single);
  CHECK(one.l_dist == 0.0);
  // Center (1/8, 0, 0, 0): pixel 0 sits 7/8 away, the others 1/8.
  const double want = ((0.875 - 0.1) + 7 * (0.125 - 0.1)) / 8;
  CHECK(one.l_var == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("depth loss examples") {
  // 10 pixels, label 0 on 40% of them.
  SegmentationMap seg(10, 1, 1);
  for (int col = 0; col < 4; ++col) seg.at(col, 0) = 0;
  DepthMap depth(10, 1, 2.0);
  for (int col = 0; col < 4; ++col) depth.at(col, 0) = 1.0;
  const std::vector<SurfaceParams> exact{{0, 0, 1, 1}, {0, 0, 1, 0.5}};
  CHECK(depth_supervised_instances(exact, seg, depth, PixelFrame::raw()).value == 0.0);
  const std::vector<SurfaceParams> off{{0, 0, 1, 1.1}, {0, 0, 1, 0.5}};
  const auto l = depth_supervised_instances(off, seg, depth, PixelFrame::raw());
  CHECK(l.value == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(loss_depth_supervised(constant_map(10, 1, off, seg), seg, depth).value ==
        doctest::Approx(0.04).epsilon(1e-12));

  // Wall pulled in front of the labelled surface on the right half.
  const SegmentationMap all0(4, 1, 0);
  const std::vector<SurfaceParams> pulled{{0, 0, 1, 1}, normalize({1, 0, -0.5})};
  // Wall inverse depth u - 0.5: gaps 0, 0, 0.5, 1.5.
  CHECK(depth_2d_instances(pulled, all0, PixelFrame::raw()).value ==
        doctest::Approx(0.5).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto spec = generate_cuboid(seed, {40, 40, 31.5, 31.5, 64, 64});
    const auto scene = render_scene(spec);
    CHECK(depth_2d_instances(spec.surface_params(), scene.segmentation, spec.frame).value == 0.0);
    CHECK(depth_supervised_instances(spec.surface_params(), scene.segmentation,
                                     scene.layout_depth, spec.frame)
              .value <= 1e-12);
  }
}

TEST_CASE("stretch loss examples") {
  SegmentationMap seg(6, 1, 0);
  seg[2] = seg[3] = 1;
  seg[4] = seg[5] = 2;
  for (int C : {1, 2, 3}) {
    std::vector<SurfaceParams> same(C, SurfaceParams{0.6, 0, 0.8, 1.3});
    SegmentationMap s(6, 1, 0);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::int32_t>(i) % C;
    CHECK(stretch_instances(same, s, 20, PixelFrame::raw()).value == -1.0 / C);
  }
  // Each labelled surface sits 1.0 above the others in inverse depth.
  const std::vector<SurfaceParams> a{{0, 0, 1, 2}, {0, 0, 1, 1}, {0, 0, 1, 1}};
  const SegmentationMap all0(6, 1, 0);
  CHECK(stretch_instances(a, all0, 20, PixelFrame::raw()).value <= -0.99);
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(51);
  const LossConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto x = fd::random_point(rng, cfg);

    const auto l1 = loss_param_l1(x.pred, x.target);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_param_l1(p, x.target).value; },
                             l1.grad, x.pred) <= kFdTol);

    const auto d = loss_discriminative(x.pred, x.seg, cfg);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_discriminative(p, x.seg, cfg).l_var; },
                             d.grad_var, x.pred) <= kFdTol);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_discriminative(p, x.seg, cfg).l_dist; },
                             d.grad_dist, x.pred) <= kFdTol);

    const auto z = loss_depth_supervised(x.pred, x.seg, x.depth);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_depth_supervised(p, x.seg, x.depth).value; },
                             z.grad, x.pred) <= kFdTol);
    const auto z2 = loss_depth_2d(x.pred, x.seg);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_depth_2d(p, x.seg).value; }, z2.grad,
                             x.pred) <= kFdTol);
    const auto s = loss_stretch(x.pred, x.seg, cfg.k);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_stretch(p, x.seg, cfg.k).value; }, s.grad,
                             x.pred) <= kFdTol);

    const auto t3 = loss_total_3d(x.pred, x.target, x.seg, x.depth, cfg);
    CHECK(fd::relative_error(
              [&](const ParamMap& p) { return loss_total_3d(p, x.target, x.seg, x.depth, cfg).total; },
              t3.grad, x.pred) <= kFdTol);
    const auto t2 = loss_total_2d(x.pred, x.seg, cfg);
    CHECK(fd::relative_error([&](const ParamMap& p) { return loss_total_2d(p, x.seg, cfg).total; }, t2.grad,
                             x.pred) <= kFdTol);
  }
}

TEST_CASE("instance-level gradients match finite differences") {
  Rng rng(52);
  for (int t = 0; t < 20; ++t) {
    const auto x = fd::random_point(rng);
    auto inst = instance_centers(x.pred, x.seg);
    using F = std::function<InstanceLoss(std::span<const SurfaceParams>)>;
    const F fs[] = {
        [&](std::span<const SurfaceParams> s) { return depth_supervised_instances(s, x.seg, x.depth, x.pred.frame); },
        [&](std::span<const SurfaceParams> s) { return depth_2d_instances(s, x.seg, x.pred.frame); },
        [&](std::span<const SurfaceParams> s) { return stretch_instances(s, x.seg, 20, x.pred.frame); }};
    for (const auto& f : fs) {
      const auto l = f(inst);
      double diff2 = 0, scale2 = 0;
      for (std::size_t c = 0; c < inst.size(); ++c) {
        for (int k = 0; k < 4; ++k) {
          auto probe = inst;
          auto a = inst[c].as_array();
          a[k] += 1e-6;
          probe[c] = SurfaceParams::from_array(a);
          const double up = f(probe).value;
          a[k] -= 2e-6;
          probe[c] = SurfaceParams::from_array(a);
          const double numeric = (up - f(probe).value) / 2e-6;
          diff2 += (numeric - l.grad[c][k]) * (numeric - l.grad[c][k]);
          scale2 = std::max(scale2, std::max(numeric * numeric, l.grad[c][k] * l.grad[c][k]));
        }
      }
      CHECK(std::sqrt(diff2 / std::max(scale2, 1e-300)) <= 1e-4);
    }
  }
}

TEST_CASE("loss ranges and additivity") {
  Rng rng(53);
  const LossConfig cfg;
  for (int t = 0; t < 50; ++t) {
    const auto x = fd::random_point(rng, cfg);
    const auto b3 = loss_total_3d(x.pred, x.target, x.seg, x.depth, cfg);
    const auto b2 = loss_total_2d(x.pred, x.seg, cfg);
    CHECK(b3.l_p >= 0);
    CHECK(b3.l_var >= 0);
    CHECK(b3.l_z >= 0);
    CHECK(b2.l_dist >= 0);
    CHECK(b2.l_z >= 0);
    CHECK(b2.l_s > -1.0);
    CHECK(b2.l_s < 0.0);
    CHECK(b3.total == b3.l_p + cfg.alpha * b3.l_var + cfg.beta * b3.l_z);
    CHECK(b2.total == b2.l_var + b2.l_dist + cfg.eta * b2.l_z + cfg.theta * b2.l_s);
  }
}

TEST_CASE("losses ignore the order of surface labels") {
  Rng rng(54);
  const LossConfig cfg;
  for (int t = 0; t < 10; ++t) {
    const auto x = fd::random_point(rng, cfg);
    SegmentationMap relabelled = x.seg;
    const std::array<std::int32_t, 3> perm{2, 0, 1};
    for (auto& l : relabelled.values()) l = perm[l];
    const auto a3 = loss_total_3d(x.pred, x.target, x.seg, x.depth, cfg);
    const auto b3 = loss_total_3d(x.pred, x.target, relabelled, x.depth, cfg);
    CHECK(b3.total == doctest::Approx(a3.total).epsilon(1e-12));
    const auto a2 = loss_total_2d(x.pred, x.seg, cfg);
    const auto b2 = loss_total_2d(x.pred, relabelled, cfg);
    CHECK(b2.l_var == doctest::Approx(a2.l_var).epsilon(1e-12));
    CHECK(b2.l_dist == doctest::Approx(a2.l_dist).epsilon(1e-12));
    CHECK(b2.l_z == doctest::Approx(a2.l_z).epsilon(1e-12));
    CHECK(b2.l_s == doctest::Approx(a2.l_s).epsilon(1e-12));
  }
}

TEST_CASE("perfect predictions have zero loss") {
  const auto p = toy::make(3, 16, 16, 0.0);
  const auto b = loss_total_3d(p.scene.params, p.scene.params, p.scene.segmentation,
                               p.scene.layout_depth);
  CHECK(b.l_p == 0.0);
  CHECK(b.l_var == 0.0);
  CHECK(b.l_z <= 1e-12);
  CHECK(loss_depth_2d(p.scene.params, p.scene.segmentation).value <= 1e-12);
}

TEST_CASE("optimizer") {
  const auto p = toy::make(4, 16, 16, 0.05);
  OptimizeConfig none;
  none.steps = 0;
  const auto same = optimize_param_map(p.init, p.target, TrainMode::Supervised3D, {}, none);
  CHECK(same.params == p.init);
  CHECK(same.trace.size() == 1);

  const auto r3 = optimize_param_map(p.init, p.target, TrainMode::Supervised3D);
  for (std::size_t k = 1; k < r3.trace.size(); ++k) CHECK(r3.trace[k] <= r3.trace[k - 1]);
  CHECK(r3.trace.back() <= 0.1 * r3.trace.front());
  const auto layout = full_pipeline(r3.params, {}, p.cam);
  CHECK(oracle::permutation_pixel_error(layout.seg, p.scene.segmentation) <= 5.0);

  const auto r2 = optimize_param_map(p.init, p.target, TrainMode::Weak2D);
  for (std::size_t k = 1; k < r2.trace.size(); ++k) CHECK(r2.trace[k] <= r2.trace[k - 1]);
  CHECK(toy::ordering_accuracy(r2.params, p.scene.segmentation) >= 0.95);

  ParamMap broken = p.init;
  broken[3].s = std::nan("");
  try {
    optimize_param_map(broken, p.target, TrainMode::Supervised3D);
    FAIL("expected a non-finite loss");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
    CHECK(e.trace().size() == 1);
  }
  OptimizeConfig bad;
  bad.steps = -1;
  CHECK_THROWS_AS(optimize_param_map(p.init, p.target, TrainMode::Weak2D, {}, bad), Error);
}
