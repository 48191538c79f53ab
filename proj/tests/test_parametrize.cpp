#include <gtest/gtest.h>

#include <random>

#include "ccbisect/instances.hpp"
#include "ccbisect/oracle.hpp"
#include "ccbisect/parametrize.hpp"

using namespace ccbisect;

namespace {

MeasureSet random_instance(std::uint64_t seed, int dim = 2) {
  InstanceSpec spec;
  spec.dim = dim;
  return generate_instance(spec, seed);
}

Vec random_direction(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec u(dim);
  for (int i = 0; i < dim; ++i) u[i] = g(rng);
  return normalized(u);
}

double max_abs_sum(const Residual& a, const Residual& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) m = std::max(m, std::abs(a.components[i] + b.components[i]));
  return m;
}

double max_abs_diff(const Residual& a, const Residual& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) m = std::max(m, std::abs(a.components[i] - b.components[i]));
  return m;
}

double pinned_fraction(const Measure& mu0, const CutterSpec& cutter, const Placement& pl) {
  return std::abs(2.0 * mass_in(mu0, cutter, pl) - mu0.total()) / mu0.total();
}

}  // namespace

TEST(HomothetyChart, CentreFormula) {
  const MeasureSet m = random_instance(1);
  const auto disk = CutterSpec::disk(2, 1.0);
  const Placement p0 = homothety_chart(disk, m.pinning(), Vec(0, 0));
  ASSERT_TRUE(p0.is_body());
  EXPECT_EQ(p0.as_body().center, Vec(0, 0));
  const Placement p1 = homothety_chart(disk, m.pinning(), Vec(0.25, 0));
  ASSERT_TRUE(p1.is_body());
  EXPECT_DOUBLE_EQ(p1.as_body().center[0], -0.125);
  EXPECT_DOUBLE_EQ(p1.as_body().center[1], 0.0);
  EXPECT_THROW(homothety_chart(disk, m.pinning(), Vec(1.1, 0)), Error);
}

TEST(HomothetyChart, UnitSphereGivesHalfSpaceFacingBack) {
  const MeasureSet m = random_instance(2);
  const Placement p = homothety_chart(CutterSpec::disk(2, 1.0), m.pinning(), Vec(1, 0));
  ASSERT_TRUE(p.is_half_space());
  EXPECT_EQ(p.as_half_space().normal, Vec(-1, 0));
  EXPECT_LE(pinned_fraction(m.pinning(), CutterSpec::disk(2, 1.0), p), 1e-9);
}

TEST(HomothetyChart, ResidualsConvergeToHalfSpaceLimit) {
  const MeasureSet m = random_instance(3);
  const auto disk = CutterSpec::disk(2, 1.0);
  const Vec u = normalized(Vec(1, 0.3));
  const Residual limit = residual(m, disk, homothety_chart(disk, m.pinning(), u * 0.5));
  double prev = 1e9;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const Placement p = homothety_chart(disk, m.pinning(), u * (0.5 - eps));
    ASSERT_TRUE(p.is_body());
    const double gap = max_abs_diff(residual(m, disk, p), limit);
    EXPECT_LE(gap, prev + 1e-12);
    prev = gap;
  }
  EXPECT_LE(prev, 1e-3);
}

TEST(HomothetyChart, ContinuousAcrossHalfRadius) {
  // Jumps across |v| = 1/2 compared with jumps of equal step deep inside.
  const auto disk = CutterSpec::disk(2, 1.0);
  std::mt19937_64 rng(11);
  double straddle = 0.0, interior = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const MeasureSet m = random_instance(100 + static_cast<std::uint64_t>(inst));
    const ChartFrame frame = ChartFrame::fit(m);
    for (int k = 0; k < 100; ++k) {
      const Vec u = random_direction(rng, 2);
      const double h = 1e-4;
      auto at = [&](double r) { return residual(m, disk, homothety_chart(disk, m.pinning(), u * r, frame)); };
      straddle = std::max(straddle, max_abs_diff(at(0.5 - h), at(0.5 + h)));
      interior = std::max(interior, max_abs_diff(at(0.3 - h), at(0.3 + h)));
    }
  }
  EXPECT_LE(straddle, 10.0 * interior);
}

TEST(Residual, VanishesOnSymmetricInstanceAtOrigin) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MeasureSet m = symmetric_instance(2, seed);
    const auto disk = CutterSpec::disk(2, 1.0);
    const Residual r = residual(m, disk, homothety_chart(disk, m.pinning(), Vec(0, 0)));
    EXPECT_LE(r.max_abs(), 1e-10);
  }
}

TEST(Residual, AntipodalOnTheBoundaryForAllCharts) {
  std::mt19937_64 rng(5);
  const auto disk = CutterSpec::disk(2, 1.0);
  const auto square = CutterSpec::square();
  for (int inst = 0; inst < 5; ++inst) {
    const MeasureSet m = random_instance(200 + static_cast<std::uint64_t>(inst));
    const MeasureSet m3 = random_instance(300 + static_cast<std::uint64_t>(inst), 3);
    const auto cyl = CutterSpec::cylinder(1.0, 1.0);
    for (int k = 0; k < 40; ++k) {
      const Vec u = random_direction(rng, 2);
      const double theta = kTwoPi * (k / 40.0);
      EXPECT_LE(max_abs_sum(residual(m, disk, homothety_chart(disk, m.pinning(), u)),
                            residual(m, disk, homothety_chart(disk, m.pinning(), -u))),
                1e-9);
      const Orientation o{Rotation::planar(theta), k % 2 == 1};
      EXPECT_LE(max_abs_sum(residual(m, square, similarity_chart(square, m.pinning(), o, u, ChartFrame::fit(m))),
                            residual(m, square, similarity_chart(square, m.pinning(), o, -u, ChartFrame::fit(m)))),
                1e-9);
      EXPECT_LE(max_abs_sum(residual(m, square, axis_chart(square, m.pinning(), u, 1.0)),
                            residual(m, square, axis_chart(square, m.pinning(), -u, 1.0))),
                1e-9);
      const Vec w = random_direction(rng, 3);
      EXPECT_LE(max_abs_sum(residual(m3, cyl, axis_chart(cyl, m3.pinning(), w, 1.0)),
                            residual(m3, cyl, axis_chart(cyl, m3.pinning(), -w, 1.0))),
                1e-9);
    }
  }
}

TEST(Residual, MatchesMonteCarloReevaluation) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.45, 0.45);
  const auto square = CutterSpec::square();
  for (int inst = 0; inst < 5; ++inst) {
    const MeasureSet m = random_instance(400 + static_cast<std::uint64_t>(inst));
    const Orientation o{Rotation::planar(u(rng)), false};
    const Placement pl = similarity_chart(square, m.pinning(), o, Vec(u(rng), u(rng)), ChartFrame::fit(m));
    const Residual r = residual(m, square, pl);
    for (std::size_t i = 1; i < m.size(); ++i) {
      const double mc = monte_carlo_mass(m[i], square, pl, 2'000'000, 17 + i);
      const double t = m[i].total();
      EXPECT_NEAR(r.components[i - 1], (2.0 * mc - t) / t, 1e-3);
    }
  }
}

TEST(Charts, PinMuZero) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto disk = CutterSpec::disk(2, 1.0);
  const auto square = CutterSpec::square();
  const auto cyl = CutterSpec::cylinder(1.0, 0.5);
  for (int inst = 0; inst < 5; ++inst) {
    const MeasureSet m = random_instance(500 + static_cast<std::uint64_t>(inst));
    const MeasureSet m3 = random_instance(600 + static_cast<std::uint64_t>(inst), 3);
    for (int k = 0; k < 20; ++k) {
      const Vec u = random_direction(rng, 2);
      const double r = uni(rng);
      EXPECT_LE(pinned_fraction(m.pinning(), disk, homothety_chart(disk, m.pinning(), u * r)), 1e-6);
      EXPECT_LE(pinned_fraction(m.pinning(), square,
                                similarity_chart(square, m.pinning(), {Rotation::planar(kTwoPi * uni(rng)), true},
                                                 u * r, ChartFrame::fit(m))),
                1e-6);
      EXPECT_LE(pinned_fraction(m.pinning(), square, axis_chart(square, m.pinning(), u, r)), 1e-6);
      EXPECT_LE(pinned_fraction(m3.pinning(), cyl, axis_chart(cyl, m3.pinning(), random_direction(rng, 3), r)), 1e-6);
    }
  }
}

TEST(AxisChart, EvenAtZeroAndHalfSpaceAtOne) {
  const MeasureSet m = random_instance(7);
  const auto square = CutterSpec::square();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vec u = random_direction(rng, 2);
    const Placement a = axis_chart(square, m.pinning(), u, 0.0);
    const Placement b = axis_chart(square, m.pinning(), -u, 0.0);
    EXPECT_EQ(a, b);
    EXPECT_EQ(residual(m, square, a).components, residual(m, square, b).components);
  }
  const Placement h = axis_chart(square, m.pinning(), Vec(0, 1), 1.0);
  ASSERT_TRUE(h.is_half_space());
  EXPECT_EQ(h.as_half_space().normal, Vec(0, 1));
  EXPECT_LE(pinned_fraction(m.pinning(), square, h), 1e-9);
}

TEST(AxisChart, HalfwayCentreAndScaleMatchScan) {
  RasterGrid g{Vec(0, 0), 1.0 / 32, {32, 32}, std::vector<double>(32 * 32, 1.0)};
  const Measure mu = Measure::from_raster(g);
  const auto square = CutterSpec::square();
  const Placement p = axis_chart(square, mu, Vec(1, 0), 0.5);
  ASSERT_TRUE(p.is_body());
  EXPECT_EQ(p.as_body().center, Vec(1, 0));
  // Dense scan for the scale: coarse grid, then a fine one around the crossing.
  auto h = [&](double s) {
    return mass_in(mu, square, Placement::body(Vec(1, 0), s, p.as_body().rotation)) - 0.5 * mu.total();
  };
  double lo = 0.0, hi = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const double s = 2.0 * i / 2000.0;
    if (h(s) >= 0.0) {
      lo = s - 1e-3;
      hi = s;
      break;
    }
  }
  for (int i = 0; i < 60; ++i) (h(0.5 * (lo + hi)) < 0.0 ? lo : hi) = 0.5 * (lo + hi);
  EXPECT_NEAR(p.as_body().scale, 0.5 * (lo + hi), 1e-6);
}

TEST(SimilarityChart, IdentityRotationReducesToHomothety) {
  const MeasureSet m = random_instance(8);
  const auto square = CutterSpec::square();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Vec v = random_direction(rng, 2) * uni(rng);
    EXPECT_EQ(similarity_chart(square, m.pinning(), Orientation::identity(2), v, ChartFrame::identity(2)),
              homothety_chart(square, m.pinning(), v));
  }
}

TEST(SimilarityChart, QuarterTurnOfSquareGivesSameCopy) {
  const MeasureSet m = random_instance(9);
  const auto square = CutterSpec::square();
  for (double theta : {0.0, 0.3, 1.0}) {
    const Placement a =
        similarity_chart(square, m.pinning(), {Rotation::planar(theta), false}, Vec(0, 0), ChartFrame::fit(m));
    const Placement b = similarity_chart(square, m.pinning(), {Rotation::planar(theta + kPi / 2), false}, Vec(0, 0),
                                         ChartFrame::fit(m));
    EXPECT_EQ(a.as_body().center, b.as_body().center);
    EXPECT_NEAR(a.as_body().scale, b.as_body().scale, 1e-9 * a.as_body().scale);
    EXPECT_NEAR(max_abs_diff(residual(m, square, a), residual(m, square, b)), 0.0, 1e-9);
  }
}

TEST(CompactifiedScale, EndpointsFixedPointAndRange) {
  const CompactifiedScale phi;
  EXPECT_DOUBLE_EQ(phi.phi(1.0), 0.0);
  EXPECT_DOUBLE_EQ(phi.phi_inverse(0.0), 1.0);
  EXPECT_DOUBLE_EQ(phi.phi(0.0), -1.0 + phi.delta());
  EXPECT_TRUE(std::isinf(phi.phi_inverse(1.0 - phi.delta())));
  for (double s : {1e-3, 0.5, 2.0, 1e3}) EXPECT_NEAR(phi.phi_inverse(phi.phi(s)), s, 1e-9 * s);

  const MeasureSet m = random_instance(10);
  const auto g = compactified_scale(CutterSpec::disk(2, 1.0), m.pinning(), Vec(0.1, 0.2), Orientation::identity(2));
  EXPECT_EQ(g(-1.0), -1.0);
  EXPECT_EQ(g(1.0), 1.0);
  // The interior is scaled by 1 − δ, so g′(0) = (1 − δ)·g(1).
  const double g1 = scale_function(CutterSpec::disk(2, 1.0), m.pinning(), Vec(0.1, 0.2), Orientation::identity(2), 1.0);
  EXPECT_DOUBLE_EQ(g(0.0), (1.0 - phi.delta()) * g1);
  double prev = -1.0;
  for (int i = -200; i <= 200; ++i) {
    const double x = i / 200.0;
    const double v = g(x);
    EXPECT_GE(v, prev);
    if (i > -200 && i < 200) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
    prev = v;
  }
  EXPECT_THROW(g(1.5), Error);
}
