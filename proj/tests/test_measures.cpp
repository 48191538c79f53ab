#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ccbisect/mass_eval.hpp"

using namespace ccbisect;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

/// Fraction of a kernel inside a placement by stratified point sampling.
double sampled_fraction(const Kernel& k, const CutterSpec& cutter, const Placement& pl, int per_axis) {
  const int d = k.center.dim();
  long inside = 0, total = 0;
  const int nz = d == 3 ? per_axis : 1;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int l = 0; l < nz; ++l) {
        Vec x = k.center;
        x[0] += k.radius * (2.0 * (i + 0.5) / per_axis - 1.0);
        x[1] += k.radius * (2.0 * (j + 0.5) / per_axis - 1.0);
        if (d == 3) x[2] += k.radius * (2.0 * (l + 0.5) / per_axis - 1.0);
        inside += contains(cutter, pl, x) ? 1 : 0;
        ++total;
      }
  return static_cast<double>(inside) / static_cast<double>(total);
}

Polygon l_hexagon() { return {Vec(0, 0), Vec(2, 0), Vec(2, 1), Vec(1, 1), Vec(1, 2), Vec(0, 2)}; }

}  // namespace

TEST(LoadCsv, ThreeIdsInThePlane) {
  std::istringstream in("measure_id,x,y,weight\n0,0,0,1\n0,1,0,2\n1,0.5,0.5,1\n2,0,1,3\n");
  const MeasureSet set = parse_measures_csv(in);
  EXPECT_EQ(set.dim(), 2);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_DOUBLE_EQ(set[0].total(), 3.0);
  EXPECT_DOUBLE_EQ(set[2].total(), 3.0);
  // Default radius: 1e-3 times the diagonal of the point bounding box.
  EXPECT_NEAR(set[1].kernels()[0].radius, 1e-3 * std::sqrt(2.0), 1e-15);
}

TEST(LoadCsv, ColumnOrderRadiusAndThreeDimensions) {
  std::istringstream in(
      "weight,radius,z,y,x,measure_id\n1,0.1,0,0,0,3\n1,0.1,1,0,0,1\n1,,0,1,0,2\n1,0.2,0,0,1,0\n");
  const MeasureSet set = parse_measures_csv(in);
  EXPECT_EQ(set.dim(), 3);
  ASSERT_EQ(set.size(), 4u);
  // Groups come out in ascending id order.
  EXPECT_DOUBLE_EQ(set[0].kernels()[0].radius, 0.2);
  EXPECT_DOUBLE_EQ(set[0].kernels()[0].center[0], 1.0);
  EXPECT_DOUBLE_EQ(set[3].kernels()[0].center[0], 0.0);
  EXPECT_NEAR(set[2].kernels()[0].radius, 1e-3 * std::sqrt(3.0), 1e-15);
}

TEST(LoadCsv, TooFewMeasures) {
  std::istringstream in("measure_id,x,y,weight\n0,0,0,1\n1,1,0,2\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(in); }), ErrorKind::TooFewMeasures);
}

TEST(LoadCsv, TooManyMeasures) {
  std::istringstream in("measure_id,x,y,weight\n0,0,0,1\n1,1,0,2\n2,1,1,1\n3,0,1,1\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(in); }), ErrorKind::TooManyMeasures);
}

TEST(LoadCsv, NegativeWeightReportsRow) {
  std::istringstream in("measure_id,x,y,weight\n0,0,0,1\n1,1,0,-1\n2,1,1,1\n");
  try {
    parse_measures_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveWeight);
    ASSERT_TRUE(e.row().has_value());
    EXPECT_EQ(*e.row(), 3u);
  }
}

TEST(LoadCsv, MissingColumnAndBadNumbers) {
  std::istringstream a("measure_id,x,weight\n0,0,1\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(a); }), ErrorKind::MissingColumn);
  std::istringstream b("measure_id,x,y,weight\n0,0,abc,1\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(b); }), ErrorKind::Parse);
  std::istringstream c("measure_id,x,y,weight,radius\n0,0,0,1,0\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(c); }), ErrorKind::NonPositiveRadius);
  std::istringstream d("measure_id,x,y,weight\n0,0,0\n");
  EXPECT_EQ(kind_of([&] { parse_measures_csv(d); }), ErrorKind::Parse);
}

TEST(LoadJson, RasterAndKernels) {
  const auto j = nlohmann::json::parse(R"({"measures":[
      {"origin":[0,0],"cell":0.5,"shape":[2,2],"values":[1,1,1,1]},
      {"kernels":[{"center":[0,0],"weight":2,"radius":0.1}]},
      {"kernels":[{"center":[1,0],"weight":1},{"center":[2,0],"weight":1}]}]})");
  const MeasureSet set = parse_measures_json(j);
  EXPECT_TRUE(set[0].is_raster());
  EXPECT_DOUBLE_EQ(set[0].total(), 1.0);
  EXPECT_EQ(set[0].kernels().size(), 4u);
  EXPECT_DOUBLE_EQ(set[1].total(), 2.0);
  EXPECT_NEAR(set[2].kernels()[0].radius, 1e-3, 1e-15);
}

TEST(LoadJson, RasterShapeMismatch) {
  const auto j = nlohmann::json::parse(R"({"origin":[0,0],"cell":1,"shape":[2,2],"values":[1,1,1]})");
  EXPECT_EQ(kind_of([&] { measure_from_json(j); }), ErrorKind::Parse);
}

TEST(Measure, RasterCellCentres) {
  RasterGrid g{Vec(0, 0), 1.0, {2, 3}, {0, 1, 2, 3, 4, 5}};
  const Measure m = Measure::from_raster(g);
  EXPECT_DOUBLE_EQ(m.total(), 15.0);
  // Flat index 5 = (i=1, j=2): centre (1.5, 2.5).
  const auto& last = m.kernels().back();
  EXPECT_DOUBLE_EQ(last.center[0], 1.5);
  EXPECT_DOUBLE_EQ(last.center[1], 2.5);
  EXPECT_DOUBLE_EQ(last.weight, 5.0);
}

TEST(KernelFraction, InsideOutsideAndStraddling) {
  const auto disk = CutterSpec::disk(2, 1.0);
  const Kernel k{Vec(0.1, 0.1), 1.0, 0.01};
  EXPECT_DOUBLE_EQ(kernel_mass_fraction(k, disk, Placement::body(Vec(0, 0), 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(kernel_mass_fraction(k, disk, Placement::body(Vec(5, 5), 1.0)), 0.0);
  EXPECT_NEAR(kernel_mass_fraction(k, disk, Placement::half_space(normalized(Vec(1, 2)), dot(k.center, normalized(Vec(1, 2))))),
              0.5, 1e-15);
  const Kernel k3{Vec(0.2, 0.1, -0.3), 1.0, 0.05};
  const auto ball = CutterSpec::disk(3, 1.0);
  EXPECT_NEAR(kernel_mass_fraction(k3, ball, Placement::half_space(Vec(0, 0, 1), -0.3)), 0.5, 1e-15);
}

TEST(KernelFraction, AgreesWithPointSamplingForAllShapes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<CutterSpec> planar{
      CutterSpec::disk(2, 1.0, Vec(0.3, -0.2)),
      CutterSpec::axis_box(std::array<double, 2>{1.5, 0.7}),
      CutterSpec::star_polygon(l_hexagon(), Vec(0.5, 0.5)),
      CutterSpec::polygon_with_hole({Vec(-1, -1), Vec(1, -1), Vec(1, 1), Vec(-1, 1)},
                                    {Vec(-0.5, -0.5), Vec(0.5, -0.5), Vec(0.5, 0.5), Vec(-0.5, 0.5)}, Vec(0.75, 0))};
  for (const auto& cutter : planar) {
    for (int trial = 0; trial < 40; ++trial) {
      const Placement pl = Placement::body(Vec(0.2 * u(rng), 0.2 * u(rng)), 1.0 + 0.3 * u(rng),
                                           Rotation::planar(kPi * u(rng)), trial % 2 == 1);
      // Kernel centred on a point near the placed boundary.
      const Vec x = pl.as_body().center + Vec(u(rng), u(rng)) * 1.2;
      const Kernel k{x, 1.0, 0.15};
      EXPECT_NEAR(kernel_mass_fraction(k, cutter, pl), sampled_fraction(k, cutter, pl, 400), 4e-3);
    }
  }
}

TEST(KernelFraction, ThreeDimensionalShapes) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<CutterSpec> solids{CutterSpec::axis_box(std::array<double, 3>{1.0, 0.6, 0.8}),
                                       CutterSpec::disk(3, 1.0), CutterSpec::cylinder(0.7, 1.1)};
  for (const auto& cutter : solids) {
    for (int trial = 0; trial < 30; ++trial) {
      const Rotation rot = Rotation::axis_angle(normalized(Vec(u(rng), u(rng), u(rng))), kPi * u(rng));
      const Placement pl = Placement::body(Vec(0, 0, 0), 1.0, rot);
      const Vec x = Vec(u(rng), u(rng), u(rng)) * 1.1;
      // Small kernels: curved boundaries use a tangent plane.
      const Kernel k{x, 1.0, 0.02};
      EXPECT_NEAR(kernel_mass_fraction(k, cutter, pl), sampled_fraction(k, cutter, pl, 60), 1e-2);
    }
  }
}

TEST(KernelFraction, MonotoneInScaleForStarShapedCutters) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<CutterSpec> cutters{CutterSpec::disk(2, 1.0), CutterSpec::square(),
                                        CutterSpec::star_polygon(l_hexagon(), Vec(0.5, 0.5))};
  for (const auto& cutter : cutters) {
    for (int trial = 0; trial < 30; ++trial) {
      const Vec c(u(rng), u(rng));
      const Kernel k{Vec(u(rng), u(rng)) * 2.0, 1.0, 0.1};
      const Rotation rot = Rotation::planar(kPi * u(rng));
      double prev = 0.0;
      for (int i = 1; i <= 64; ++i) {
        const double s = 0.05 * i;
        const double f = kernel_mass_fraction(k, cutter, Placement::body(c, s, rot));
        EXPECT_GE(f, prev - 1e-12);
        prev = f;
      }
    }
  }
}

TEST(MassIn, UniformRasterAgainstBoxAndHalfSpace) {
  RasterGrid g{Vec(0, 0), 1.0 / 64, {64, 64}, std::vector<double>(64 * 64, 1.0)};
  const Measure m = Measure::from_raster(g);
  EXPECT_NEAR(m.total(), 1.0, 1e-12);
  const auto box = CutterSpec::square(1.0);
  EXPECT_NEAR(mass_in(m, box, Placement::body(Vec(0.5, 0.5), 0.25)), 0.25, 1e-12);
  EXPECT_NEAR(mass_in(m, box, Placement::half_space(Vec(1, 0), 0.5)), 0.5, 1e-12);
  // Cutter covering the support.
  EXPECT_DOUBLE_EQ(mass_in(m, box, Placement::body(Vec(0.5, 0.5), 10.0)), m.total());
  EXPECT_DOUBLE_EQ(mass_in(m, box, Placement::body(Vec(5, 5), 0.1)), 0.0);
}

TEST(MassIn, RasterAndKernelRepresentationsAgree) {
  // Gaussian blob density: raster at 64^2 cells vs 20000 samples with the
  // default kernel radius.
  const double sigma = 0.15;
  auto density = [&](double x, double y) {
    return std::exp(-((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)) / (2 * sigma * sigma));
  };
  RasterGrid g{Vec(0, 0), 1.0 / 64, {64, 64}, {}};
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) g.values.push_back(density((i + 0.5) / 64, (j + 0.5) / 64));
  const Measure raster = Measure::from_raster(g);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.5, sigma);
  std::vector<Kernel> ks;
  while (ks.size() < 20000) {
    const double x = n(rng), y = n(rng);
    if (x < 0 || x > 1 || y < 0 || y > 1) continue;
    ks.push_back({Vec(x, y), 1.0, 1e-3 * std::sqrt(2.0)});
  }
  const Measure kernels = Measure::from_kernels(ks);
  const auto disk = CutterSpec::disk(2, 1.0);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    const Placement pl = Placement::body(Vec(u(rng), u(rng)), 0.3);
    const double a = mass_in(raster, disk, pl) / raster.total();
    const double b = mass_in(kernels, disk, pl) / kernels.total();
    EXPECT_NEAR(a, b, 0.02);
  }
}

TEST(MassIn, RandomKernelsAgainstMonteCarlo) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Kernel> ks;
  for (int i = 0; i < 1000; ++i) ks.push_back({Vec(u(rng), u(rng)), 0.5 + 0.5 * (u(rng) + 1), 0.02 + 0.03 * (u(rng) + 1)});
  const Measure m = Measure::from_kernels(ks);
  const auto cutter = CutterSpec::star_polygon(l_hexagon(), Vec(0.5, 0.5));
  const Placement pl = Placement::body(Vec(-0.2, 0.1), 0.6, Rotation::planar(0.4));
  // 10^7 jittered-stratified samples, allotted to kernels by weight.
  const long n = 10'000'000;
  double mc = 0.0;
  std::uniform_real_distribution<double> unit(0, 1);
  for (const auto& k : ks) {
    const int side = std::max(1, static_cast<int>(std::sqrt(n * k.weight / m.total())));
    long hits = 0;
    for (int a = 0; a < side; ++a)
      for (int b = 0; b < side; ++b) {
        const Vec x = k.center + Vec(2.0 * (a + unit(rng)) / side - 1.0, 2.0 * (b + unit(rng)) / side - 1.0) * k.radius;
        hits += contains(cutter, pl, x) ? 1 : 0;
      }
    mc += k.weight * static_cast<double>(hits) / (static_cast<double>(side) * side);
  }
  const double exact = mass_in(m, cutter, pl);
  EXPECT_NEAR(exact / mc, 1.0, 1e-3);
}
