#include <gtest/gtest.h>

#include <random>

#include "ccbisect/instances.hpp"
#include "ccbisect/solve.hpp"

using namespace ccbisect;

namespace {

VectorX vec2(double a, double b) {
  VectorX v(2);
  v << a, b;
  return v;
}

VectorX circle(double t) { return vec2(std::cos(kTwoPi * t), std::sin(kTwoPi * t)); }

MeasureSet random_instance(std::uint64_t seed, int dim = 2) {
  InstanceSpec spec;
  spec.dim = dim;
  return generate_instance(spec, seed);
}

}  // namespace

TEST(Winding, AnalyticMaps) {
  EXPECT_EQ(winding_number(circle, [](const VectorX& x) { return x; }), 1);
  EXPECT_EQ(winding_number(circle, [](const VectorX&) { return vec2(1, 0); }), 0);
  EXPECT_EQ(winding_number(circle, [](const VectorX& x) { return vec2(x[0] * x[0] - x[1] * x[1], 2 * x[0] * x[1]); }),
            2);
  EXPECT_EQ(winding_number(circle, [](const VectorX& x) { return vec2(x[0], -x[1]); }), -1);
}

TEST(Winding, VanishingMapIsAmbiguous) {
  try {
    winding_number(circle, [](const VectorX& x) { return vec2(x[0] > 0.0 ? 0.0 : 1.0, 0.0); });
    FAIL() << "expected AmbiguousWinding";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AmbiguousWinding);
  }
}

TEST(Winding, ChildBoxesAddUp) {
  // z ↦ (z − a)(z − b)(z̄ − c): degrees +1, +1, −1 at three points.
  auto F = [](const VectorX& x) {
    const std::complex<double> z(x[0], x[1]);
    const std::complex<double> w = (z - std::complex<double>(0.3, 0.2)) * (z + std::complex<double>(0.5, 0.4)) *
                                   (std::conj(z) - std::complex<double>(-0.35, 0.61));
    return vec2(w.real(), w.imag());
  };
  CachedMap map(F);
  const Box2 root{-1, -1, 1, 1};
  const int parent = box_winding(root, map);
  EXPECT_EQ(parent, 1);
  int sum = 0;
  for (const Box2& child : root.split()) sum += box_winding(child, map);
  EXPECT_EQ(sum, parent);
}

TEST(Subdivision, IdentityFoundAtShallowDepth) {
  CachedMap F([](const VectorX& x) { return VectorX(x); });
  SubdivisionOptions opt;
  opt.tol = 1e-12;
  const SolveReport r = subdivide_solve(F, Box2{-1, -1, 1, 1}, opt, clamp_to_cube);
  ASSERT_TRUE(r.success);
  EXPECT_LE(r.depth, 2);
  EXPECT_LE(r.point.norm(), 1e-12);
}

TEST(Subdivision, ZeroWindingDomainReportsFailure) {
  CachedMap F([](const VectorX& x) { return vec2(1.0 + 0.1 * x[0], 0.2); });
  const SolveReport r = subdivide_solve(F, Box2{-1, -1, 1, 1}, SubdivisionOptions{}, clamp_to_cube);
  EXPECT_FALSE(r.success);
  EXPECT_FALSE(r.note.empty());
}

TEST(Newton, NeverIncreasesResidualNorm) {
  CachedMap F([](const VectorX& x) { return vec2(std::sin(3 * x[0]) + x[1] * x[1] - 0.2, x[0] * x[1] + 0.1 * x[1] - 0.05); });
  NewtonOptions opt;
  opt.tol = 1e-12;
  const NewtonResult r = damped_newton(F, vec2(0.9, -0.8), opt, clamp_to_cube);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_TRUE(r.converged);
}

TEST(CubeToBall, BoundaryAndAntipodes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 100; ++k) {
    VectorX w = vec2(u(rng), u(rng));
    w[k % 2] = k % 4 < 2 ? 1.0 : -1.0;
    EXPECT_NEAR(norm(cube_to_ball(w)), 1.0, 1e-15);
    const Vec a = cube_to_ball(w), b = cube_to_ball(-w);
    EXPECT_EQ(a, -b);
  }
}

TEST(Boundary, HomothetyWindingIsOdd) {
  // Numerical shadow of Borsuk-Ulam: the ball chart's boundary map is
  // antipodal, hence of odd degree.
  const auto disk = CutterSpec::disk(2, 1.0);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const MeasureSet m = random_instance(seed);
    const ChartFrame frame = ChartFrame::fit(m);
    auto loop = [&](double t) {
      const Residual r = residual(m, disk, homothety_chart(disk, m.pinning(), Vec(std::cos(kTwoPi * t), std::sin(kTwoPi * t)), frame));
      return vec2(r.components[0], r.components[1]);
    };
    try {
      const int w = winding_number(loop);
      EXPECT_NE(w % 2, 0) << "seed " << seed;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::AmbiguousWinding);
    }
  }
}

TEST(Solve, SymmetricInstanceZeroAtOrigin) {
  for (std::uint64_t seed : {1u, 2u}) {
    const MeasureSet m = symmetric_instance(2, seed);
    SolveOptions opt;
    opt.fit_frame = false;
    const BisectionResult r = solve(m, CutterSpec::disk(2, 1.0), opt);
    EXPECT_LE(r.residual.max_abs(), 1e-6);
    ASSERT_TRUE(r.placement.is_body());
    EXPECT_LE(norm(r.placement.as_body().center), 1e-6);
  }
}

TEST(Solve, ResultIsReverifiedIndependently) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MeasureSet m = random_instance(seed);
    const auto disk = CutterSpec::disk(2, 1.0);
    const BisectionResult r = solve(m, disk, {});
    for (std::size_t i = 0; i < m.size(); ++i) {
      // Point-sampling check through the membership test, not mass_in.
      const double t = m[i].total();
      EXPECT_NEAR(2.0 * monte_carlo_mass(m[i], disk, r.placement, 400'000, seed) / t - 1.0, 0.0, 5e-3);
    }
    EXPECT_LE(r.residual.max_abs(), 1e-6);
    EXPECT_TRUE(r.report.success);
    EXPECT_FALSE(r.report.certificates.empty());
  }
}

TEST(Solve, SquareSimilarityAgreesWithOracle) {
  const MeasureSet m = random_instance(31);
  const auto square = CutterSpec::square();
  SolveOptions opt;
  opt.mode = Mode::Similarity;
  const BisectionResult r = solve(m, square, opt);
  EXPECT_LE(r.residual.max_abs(), 1e-4);
  GridSpec g;
  g.n_c = 24;
  g.n_theta = 8;
  const OracleResult o = grid_search(m, square, Mode::Similarity, g);
  EXPECT_LE(r.residual.max_abs(), o.best_residual + 1e-3);
}

TEST(Solve, CylinderAxisModeInSpace) {
  const MeasureSet m = random_instance(1, 3);
  SolveOptions opt;
  opt.mode = Mode::Axis;
  const BisectionResult r = solve(m, CutterSpec::cylinder(1.0, 1.0), opt);
  EXPECT_LE(r.residual.max_abs(), 1e-2);
}

TEST(Solve, RejectsBadOptions) {
  const MeasureSet m = random_instance(1);
  SolveOptions opt;
  opt.tol = 0.5;
  EXPECT_THROW(solve(m, CutterSpec::disk(2, 1.0), opt), Error);
  opt.tol = 1e-6;
  opt.max_depth = 40;
  EXPECT_THROW(solve(m, CutterSpec::disk(2, 1.0), opt), Error);
  opt.max_depth = 12;
  opt.mode = Mode::Axis;
  EXPECT_THROW(solve(m, CutterSpec::disk(2, 1.0), opt), Error);
}

TEST(Solve, ObstructedInstanceFailsHonestly) {
  const MeasureSet m = diagonal_blob_instance();
  try {
    const BisectionResult r = solve(m, CutterSpec::square(), {});
    // Any reported success must be a genuine bisection.
    EXPECT_LE(r.residual.max_abs(), 1e-6);
  } catch (const SolveFailure& f) {
    EXPECT_EQ(f.kind(), ErrorKind::NoZeroFound);
    EXPECT_GT(f.report().residual_norm, 1e-3);
  }
}

TEST(Parity, EvenAtZeroOddAtOne) {
  const auto square = CutterSpec::square();
  int conclusive = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const MeasureSet m = random_instance(seed);
    const ParityReport p = homotopy_parity_check(m, square, ChartFrame::fit(m));
    if (!p.conclusive) continue;
    ++conclusive;
    EXPECT_EQ(p.degree_g0 % 2, 0) << "seed " << seed;
    EXPECT_NE(p.degree_g1 % 2, 0) << "seed " << seed;
    EXPECT_EQ(std::abs(p.degree_g1), 1) << "seed " << seed;
  }
  EXPECT_GE(conclusive, 8);
}

TEST(Parity, ParityChangeIntervalsContainZeros) {
  // A change of winding parity between two α-loops forces a zero of the
  // axis-chart map in the strip between them; locate it there.
  const auto square = CutterSpec::square();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MeasureSet m = random_instance(seed);
    const ChartFrame frame = ChartFrame::fit(m);
    const ParityReport p = homotopy_parity_check(m, square, frame, 16);
    if (!p.conclusive) continue;
    int changes = 0;
    for (std::size_t i = 1; i < p.trace.size(); ++i) {
      const auto& [a0, w0] = p.trace[i - 1];
      const auto& [a1, w1] = p.trace[i];
      if (!w0 || !w1 || (*w1 - *w0) % 2 == 0) continue;
      ++changes;
      CachedMap F([&](const VectorX& x) {
        const double phi = kTwoPi * x[0];
        const Residual r = residual(
            m, square, axis_chart(square, m.pinning(), Vec(std::cos(phi), std::sin(phi)), std::clamp(x[1], 0.0, 1.0), frame));
        return vec2(r.components[0], r.components[1]);
      });
      SubdivisionOptions opt;
      opt.tol = 1e-8;
      const SolveReport r = subdivide_solve(F, Box2{0, a0, 1, a1}, opt, [&](VectorX x) {
        x[0] -= std::floor(x[0]);
        x[1] = std::clamp(x[1], a0, a1);
        return x;
      });
      EXPECT_TRUE(r.success) << "seed " << seed << " strip " << a0 << ".." << a1 << ": " << r.note << " best "
                             << r.residual_norm << " evals " << r.evaluations;
    }
    EXPECT_EQ(changes % 2, 1) << "seed " << seed;
  }
}
