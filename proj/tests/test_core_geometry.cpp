#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "roomlayout/geometry.hpp"

using namespace roomlayout;

TEST_CASE("normalize splits magnitude into the scale factor") {
  const auto a = normalize({3, 0, 4});
  CHECK(a.p == 0.6);
  CHECK(a.q == 0.0);
  CHECK(a.r == 0.8);
  CHECK(a.s == 5.0);
  CHECK(normalize({0, 0, 1}) == SurfaceParams{0, 0, 1, 1});

  const auto neg = normalize({0, 0, -2});
  CHECK(neg.s == 2.0);
  CHECK(neg.r == -1.0);
}

TEST_CASE("degenerate raw parameters are rejected") {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of([] { normalize({0, 0, 0}); }) == ErrorCode::DegenerateSurface);
  CHECK(code_of([] { normalize({1e-13, 0, 0}); }) == ErrorCode::DegenerateSurface);
  CHECK(code_of([] { make_raw(0, 0, 0); }) == ErrorCode::DegenerateSurface);
  CHECK(code_of([] { make_raw(std::nan(""), 0, 1); }) == ErrorCode::DegenerateSurface);
  CHECK_NOTHROW(make_raw(0, 0, 1e-30));
}

TEST_CASE("normalize is scale invariant") {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const RawSurfaceParams raw{rng.normal(), rng.normal(), rng.normal()};
    const double lambda = std::exp(rng.uniform(-5, 5));
    const auto a = normalize(raw);
    const auto b = normalize({lambda * raw.p_hat, lambda * raw.q_hat, lambda * raw.r_hat});
    CHECK(std::abs(a.p - b.p) <= 1e-12);
    CHECK(std::abs(a.q - b.q) <= 1e-12);
    CHECK(std::abs(a.r - b.r) <= 1e-12);
    CHECK(std::abs(b.s - lambda * a.s) <= 1e-12 * b.s);
    // The invariants of the normalized form.
    CHECK(is_normalized(a));
    const auto back = a.raw();
    CHECK(std::abs(back.p_hat - raw.p_hat) <= 1e-9 * a.s);
    CHECK(std::abs(back.q_hat - raw.q_hat) <= 1e-9 * a.s);
    CHECK(std::abs(back.r_hat - raw.r_hat) <= 1e-9 * a.s);
  }
}

TEST_CASE("renormalized keeps the raw product and a positive scale") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const SurfaceParams x{rng.normal(), rng.normal(), rng.normal(), rng.uniform(-3, 3)};
    if (std::abs(x.s) < 1e-3) continue;
    const auto y = renormalized(x);
    CHECK(is_normalized(y));
    CHECK(std::abs(y.p * y.s - x.p * x.s) <= 1e-12);
    CHECK(std::abs(y.q * y.s - x.q * x.s) <= 1e-12);
    CHECK(std::abs(y.r * y.s - x.r * x.s) <= 1e-12);
  }
  CHECK_THROWS_AS(renormalized({0, 0, 0, 1}), Error);
}

TEST_CASE("depth_at evaluates the inverse-depth plane") {
  CHECK(depth_at({0, 0, 1, 0.5}, 17, -4) == 2.0);
  CHECK(depth_at({0.6, 0, 0.8, 0.001}, 100, 7) == doctest::Approx(1.0 / 0.0608).epsilon(1e-12));
  CHECK(depth_at({-1, 0, 0, 1}, 0, 3) == std::numeric_limits<double>::infinity());
  CHECK(depth_at({0, 0, -1, 1}, 0, 0) == -1.0);
}

TEST_CASE("render_depth masks non-positive inverse depth") {
  const auto flat = render_depth({0, 0, 1, 1}, 2, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(flat[i] == 1.0);
    CHECK(flat.valid(i));
  }
  const auto ramp = render_depth({-1, 0, 0.5, 1}, 4, 1);
  CHECK(ramp.valid(0));
  for (int c = 1; c < 4; ++c) CHECK_FALSE(ramp.valid(c, 0));
  const auto behind = render_depth({0, 0, -1, 2}, 3, 3);
  CHECK(behind.valid_count() == 0);
  CHECK_THROWS_AS(render_depth({0, 0, 1, 1}, 0, 3), Error);
}

TEST_CASE("inverse depth of a rendered surface is affine in pixel coordinates") {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const auto p = oracle::random_positive_surface(rng, 40, 30, PixelFrame::raw());
    const auto d = render_depth(p, 40, 30);
    const double du = 1.0 / d.at(1, 0) - 1.0 / d.at(0, 0);
    const double dv = 1.0 / d.at(0, 1) - 1.0 / d.at(0, 0);
    for (int row = 0; row + 1 < 30; ++row) {
      for (int col = 0; col + 1 < 40; ++col) {
        CHECK(std::abs((1.0 / d.at(col + 1, row) - 1.0 / d.at(col, row)) - du) <= 1e-9);
        CHECK(std::abs((1.0 / d.at(col, row + 1) - 1.0 / d.at(col, row)) - dv) <= 1e-9);
      }
    }
  }
}

TEST_CASE("params_from_depth on a constant depth") {
  DepthMap d(5, 4, 2.0);
  const auto pm = params_from_depth(d);
  for (std::size_t i = 0; i < pm.size(); ++i) {
    REQUIRE(pm.valid(i));
    CHECK(oracle::max_abs_diff(pm[i], {0, 0, 1, 0.5}) <= 1e-15);
  }
}

TEST_CASE("params_from_depth recovers an analytic inverse-depth ramp") {
  const int w = 30;
  const int h = 20;
  DepthMap d(w, h);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) d.at(col, row) = 1.0 / (0.001 * col + 0.002 * row + 0.5);
  }
  const auto pm = params_from_depth(d);
  for (int row = 1; row + 1 < h; ++row) {
    for (int col = 1; col + 1 < w; ++col) {
      const auto raw = pm.at(col, row).raw();
      CHECK(std::abs(raw.p_hat - 0.001) <= 1e-9);
      CHECK(std::abs(raw.q_hat - 0.002) <= 1e-9);
      CHECK(std::abs(raw.r_hat - 0.5) <= 1e-9);
    }
  }
}

TEST_CASE("params_from_depth inverts render_depth") {
  Rng rng(14);
  for (auto frame_kind : {0, 1}) {
    for (int t = 0; t < 50; ++t) {
      const int w = 8 + static_cast<int>(rng.index(40));
      const int h = 8 + static_cast<int>(rng.index(40));
      const PixelFrame frame = frame_kind == 0 ? PixelFrame::raw() : PixelFrame::normalized(w, h);
      const auto p = oracle::random_positive_surface(rng, w, h, frame);
      const auto pm = params_from_depth(render_depth(p, w, h, frame), frame);
      CHECK(pm.frame == frame);
      for (std::size_t i = 0; i < pm.size(); ++i) {
        REQUIRE(pm.valid(i));
        CHECK(oracle::max_abs_diff(pm[i], p) <= 1e-6);
      }
    }
  }
}

TEST_CASE("params_from_depth masks pixels without a usable neighbor") {
  DepthMap d(3, 3, 2.0);
  // Isolate the center column from its horizontal neighbors.
  d.set_valid(d.index(0, 1), false);
  d.set_valid(d.index(2, 1), false);
  const auto pm = params_from_depth(d);
  CHECK_FALSE(pm.valid(1, 1));
  CHECK_FALSE(pm.valid(0, 1));
  CHECK_FALSE(pm.valid(0, 0));  // no vertical neighbor left
  REQUIRE(pm.valid(1, 0));
  // One-sided differences next to the hole still give the exact plane.
  CHECK(oracle::max_abs_diff(pm.at(1, 0), {0, 0, 1, 0.5}) <= 1e-15);
}

TEST_CASE("plane_to_surface on worked examples") {
  const CameraIntrinsics cam{500, 500, 320, 240, 640, 480};
  const auto front = plane_to_surface({0, 0, 1, -2}, cam);
  CHECK(oracle::max_abs_diff(front, {0, 0, 1, 0.5}) <= 1e-15);

  const auto floor = plane_to_surface({0, -1, 0, 1.5}, cam).raw();
  CHECK(std::abs(floor.p_hat) <= 1e-15);
  CHECK(std::abs(floor.q_hat - 1.0 / 750.0) <= 1e-15);
  CHECK(std::abs(floor.r_hat - (-240.0 / 750.0)) <= 1e-15);

  const auto back = surface_to_plane({0, 0, 1, 0.5}, cam);
  CHECK(std::abs(back.a) <= 1e-15);
  CHECK(std::abs(back.b) <= 1e-15);
  CHECK(std::abs(back.c - 1.0) <= 1e-15);
  CHECK(std::abs(back.d + 2.0) <= 1e-15);
}

TEST_CASE("plane and surface conversions are inverse") {
  Rng rng(15);
  for (int k = 0; k < 5; ++k) {
    const auto cam = oracle::random_intrinsics(rng);
    for (int t = 0; t < 200; ++t) {
      const auto e = oracle::random_plane(rng);
      for (auto frame : {PixelFrame::raw(), PixelFrame::normalized(cam.width, cam.height)}) {
        const auto back = surface_to_plane(plane_to_surface(e, cam, frame), cam, frame);
        const auto want = e.canonical();
        CHECK(std::abs(back.a - want.a) <= 1e-9);
        CHECK(std::abs(back.b - want.b) <= 1e-9);
        CHECK(std::abs(back.c - want.c) <= 1e-9);
        CHECK(std::abs(back.d - want.d) <= 1e-9);
        CHECK(back.d < 0.0);
      }
    }
  }
}

TEST_CASE("surface depth agrees with ray casting against the plane") {
  Rng rng(16);
  for (int t = 0; t < 100; ++t) {
    const auto cam = oracle::random_intrinsics(rng);
    const auto e = oracle::random_plane(rng);
    const auto frame = PixelFrame::normalized(cam.width, cam.height);
    const auto sp = plane_to_surface(e, cam, frame);
    for (int k = 0; k < 10; ++k) {
      const double col = rng.uniform(0, cam.width - 1);
      const double row = rng.uniform(0, cam.height - 1);
      const double want = oracle::ray_plane_depth(e, cam, col, row);
      const double got = depth_at(sp, frame.u(col), frame.v(row));
      if (std::abs(want) > 1e6) continue;
      CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("plane construction rejects degenerate planes") {
  CHECK_THROWS_AS(PlaneEq3D::make(0, 0, 0, 1), Error);
  CHECK_THROWS_AS(PlaneEq3D::make(0, 0, 1, 0), Error);
  const auto e = PlaneEq3D::make(0, 0, 2, -4);
  CHECK(e == PlaneEq3D{0, 0, 1, -2});
  CHECK_THROWS_AS(plane_to_surface({0, 0, 1, -1}, {0, 1, 0, 0, 1, 1}), Error);
}

TEST_CASE("intrinsics validation") {
  CHECK_NOTHROW(CameraIntrinsics{1, 1, 0, 0, 1, 1}.validate());
  CHECK_THROWS_AS(CameraIntrinsics({-1, 1, 0, 0, 4, 4}).validate(), Error);
  CHECK_THROWS_AS(CameraIntrinsics({1, 1, 4, 0, 4, 4}).validate(), Error);
  CHECK_THROWS_AS(CameraIntrinsics({1, 1, 0, 0, 0, 4}).validate(), Error);
}

TEST_CASE("backprojection") {
  const CameraIntrinsics cam{100, 80, 50, 40, 101, 81};
  const auto a = backproject_pixel(50, 40, 3, cam);
  CHECK(a == Point3{0, 0, 3});
  const auto b = backproject_pixel(150, 40, 2, cam);
  CHECK(b == Point3{2, 0, 2});

  DepthMap d(2, 1, 1.0);
  d.set_valid(1, false);
  CHECK(backproject(d, {1, 1, 0, 0, 2, 1}).size() == 1);
}

TEST_CASE("backprojected rendered planes lie on the plane") {
  Rng rng(17);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    CameraIntrinsics cam{60, 60, 31.5, 23.5, 64, 48};
    const auto e = oracle::random_plane(rng);
    const auto d = render_depth(plane_to_surface(e, cam), cam.width, cam.height);
    for (const auto& pt : backproject(d, cam)) {
      if (pt.z > 1e4) continue;
      CHECK(std::abs(e.signed_distance(pt.x, pt.y, pt.z)) <= 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
