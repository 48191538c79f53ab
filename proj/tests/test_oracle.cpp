#include <gtest/gtest.h>

#include <cstdlib>

#include "ccbisect/instances.hpp"
#include "ccbisect/solve.hpp"

using namespace ccbisect;

namespace {

MeasureSet small_instance(std::uint64_t seed) {
  InstanceSpec spec;
  spec.kernels_per_blob = 10;
  return generate_instance(spec, seed);
}

}  // namespace

TEST(GridSearch, SymmetricInstanceBestAtOrigin) {
  const MeasureSet m = symmetric_instance(2, 4);
  GridSpec g;
  g.n_c = 33;
  const OracleResult o = grid_search(m, CutterSpec::disk(2, 1.0), Mode::Homothety, g);
  ASSERT_TRUE(o.best);
  // The exact zero is the centred disk; the grid misses the origin by at
  // most one cell diagonal.
  const double cell = (o.center_range.hi[0] - o.center_range.lo[0]) / (g.n_c - 1);
  EXPECT_LE(norm(o.best->as_body().center), cell * std::sqrt(2.0));
  EXPECT_LE(o.best_residual, 0.02);
  EXPECT_EQ(o.evaluated, 33u * 33u);
}

TEST(GridSearch, DiagonalBlobsObstructAxisParallelSquares) {
  const MeasureSet m = diagonal_blob_instance();
  GridSpec g;
  g.n_c = 64;
  const OracleResult o = grid_search(m, CutterSpec::square(), Mode::Homothety, g);
  EXPECT_GE(o.best_residual, 0.05);
}

TEST(GridSearch, DiagonalBlobsWithRotations) {
  // Value frozen from this search: 64 centres per axis, 128 angles.
  const MeasureSet m = diagonal_blob_instance();
  GridSpec g;
  g.n_c = 64;
  g.n_theta = 128;
  const OracleResult o = grid_search(m, CutterSpec::square(), Mode::Similarity, g);
  EXPECT_LE(o.best_residual, 0.07);
  EXPECT_EQ(o.evaluated, 64u * 64u * 128u);
}

TEST(GridSearch, RefiningTheGridNeverHurts) {
  const MeasureSet m = small_instance(3);
  const auto square = CutterSpec::square();
  double prev = 2.0;
  for (int n : {5, 9, 17, 33}) {
    GridSpec g;
    g.n_c = n;
    // Centres and angles both nest: n_theta = 2, 4, 8, 16.
    g.n_theta = (n - 1) / 2;
    const OracleResult o = grid_search(m, square, Mode::Similarity, g);
    EXPECT_LE(o.best_residual, prev);
    prev = o.best_residual;
  }
}

TEST(GridSearch, AxisModeAndNonStarCutters) {
  const MeasureSet m = small_instance(5);
  GridSpec g;
  g.n_c = 9;
  const OracleResult a = grid_search(m, CutterSpec::square(), Mode::Axis, g);
  ASSERT_TRUE(a.best);
  const auto frame = CutterSpec::polygon_with_hole({Vec(-1, -1), Vec(1, -1), Vec(1, 1), Vec(-1, 1)},
                                                   {Vec(-0.5, -0.5), Vec(0.5, -0.5), Vec(0.5, 0.5), Vec(-0.5, 0.5)},
                                                   Vec(0.75, 0));
  const OracleResult b = grid_search(m, frame, Mode::Homothety, g);
  ASSERT_TRUE(b.best);
  EXPECT_LE(std::abs(2.0 * mass_in(m.pinning(), frame, *b.best) - m.pinning().total()), 1e-6 * m.pinning().total());
}

TEST(GridSearch, SolverAtLeastMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const MeasureSet m = small_instance(seed);
    const auto disk = CutterSpec::disk(2, 1.0);
    const BisectionResult r = solve(m, disk, {});
    GridSpec g;
    g.n_c = 32;
    const OracleResult o = grid_search(m, disk, Mode::Homothety, g);
    EXPECT_GE(o.best_residual, r.residual.max_abs() - 1e-6);
  }
}

TEST(GridSearch, DeterministicAcrossThreadCounts) {
  const MeasureSet m = small_instance(7);
  GridSpec g;
  g.n_c = 12;
  g.n_theta = 3;
  ::setenv("CCBISECT_THREADS", "1", 1);
  const OracleResult a = grid_search(m, CutterSpec::square(), Mode::Similarity, g);
  ::setenv("CCBISECT_THREADS", "3", 1);
  const OracleResult b = grid_search(m, CutterSpec::square(), Mode::Similarity, g);
  ::unsetenv("CCBISECT_THREADS");
  EXPECT_EQ(a.best_residual, b.best_residual);
  EXPECT_EQ(*a.best, *b.best);
}

TEST(GridSearch, RejectsBadSpecs) {
  const MeasureSet m = small_instance(1);
  GridSpec g;
  g.n_c = 1;
  EXPECT_THROW(grid_search(m, CutterSpec::disk(2, 1.0), Mode::Homothety, g), Error);
  EXPECT_THROW(grid_search(m, CutterSpec::cylinder(1.0, 1.0), Mode::Homothety, {}), Error);
}

TEST(MonteCarlo, AgreesWithMassIn) {
  const MeasureSet m = small_instance(9);
  const auto square = CutterSpec::square();
  const Placement pl = Placement::body(Vec(0.1, -0.2), 0.7, Rotation::planar(0.4), true);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double exact = mass_in(m[i], square, pl);
    EXPECT_NEAR(monte_carlo_mass(m[i], square, pl, 1'000'000, 3), exact, 1e-3 * m[i].total());
  }
}

TEST(ParallelFor, PropagatesExceptions) {
  ::setenv("CCBISECT_THREADS", "2", 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw Error(ErrorKind::Domain, "boom");
               }),
               Error);
  ::unsetenv("CCBISECT_THREADS");
}
