#pragma once

/// @file instances.hpp
/// @brief Seeded random instances and a few hand-built ones.

#include <random>
#include <vector>

#include "ccbisect/measures.hpp"

namespace ccbisect {

struct InstanceSpec {
  int dim = 2;
  /// Number of measures; 0 means dim + 1.
  int measures = 0;
  int blobs = 3;
  int kernels_per_blob = 25;
  /// Blob centres are uniform in [-spread, spread]^d.
  double spread = 1.0;
  /// Standard deviation of the kernel centres around their blob centre.
  double blob_width = 0.15;
  double kernel_radius = 0.03;
};

/// Blob mixtures: every measure gets `blobs` Gaussian clusters of kernels
/// with weights in [0.5, 1.5). Deterministic per seed.
inline MeasureSet generate_instance(const InstanceSpec& spec, std::uint64_t seed) {
  if (spec.dim != 2 && spec.dim != 3) throw Error(ErrorKind::Domain, "instances exist for d = 2 and d = 3");
  if (spec.blobs < 1 || spec.kernels_per_blob < 1) throw Error(ErrorKind::Domain, "need at least one kernel per measure");
  if (!(spec.kernel_radius > 0.0)) throw Error(ErrorKind::Domain, "kernel radius must be positive");
  const int count = spec.measures > 0 ? spec.measures : spec.dim + 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  std::normal_distribution<double> gauss(0.0, spec.blob_width);
  std::vector<Measure> out;
  for (int m = 0; m < count; ++m) {
    std::vector<Kernel> ks;
    for (int b = 0; b < spec.blobs; ++b) {
      Vec centre(spec.dim);
      for (int i = 0; i < spec.dim; ++i) centre[i] = spec.spread * uni(rng);
      for (int k = 0; k < spec.kernels_per_blob; ++k) {
        Vec x = centre;
        for (int i = 0; i < spec.dim; ++i) x[i] += gauss(rng);
        ks.push_back({x, weight(rng), spec.kernel_radius});
      }
    }
    out.push_back(Measure::from_kernels(std::move(ks)));
  }
  return MeasureSet::create(std::move(out));
}

/// Three planar measures, each a tight blob centred on the diagonal x = y
/// at −1, 0 and +1. An axis-parallel square cannot bisect all three.
inline MeasureSet diagonal_blob_instance(double kernel_radius = 0.02) {
  std::vector<Measure> out;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss(0.0, 0.08);
  for (int m = -1; m <= 1; ++m) {
    std::vector<Kernel> ks;
    for (int k = 0; k < 40; ++k) ks.push_back({Vec(m + gauss(rng), m + gauss(rng)), 1.0, kernel_radius});
    out.push_back(Measure::from_kernels(std::move(ks)));
  }
  return MeasureSet::create(std::move(out));
}

/// Measure i is the base measure turned by i quarter turns about the origin
/// (in the x0-x1 plane). Every copy centred at the origin that is invariant under a quarter turn
/// (disk, square, cylinder along x2) then has the same residual for all
/// measures, so the centred copy bisecting μ_0 is a zero.
inline MeasureSet symmetric_instance(int dim, std::uint64_t seed, int kernels = 60) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::Domain, "instances exist for d = 2 and d = 3");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  std::vector<Kernel> base;
  for (int k = 0; k < kernels; ++k) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = uni(rng);
    base.push_back({x, weight(rng), 0.03});
  }
  std::vector<Measure> out;
  for (int m = 0; m <= dim; ++m) {
    std::vector<Kernel> ks = base;
    for (auto& k : ks)
      for (int turn = 0; turn < m % 4; ++turn) {
        const double x0 = k.center[0];
        k.center[0] = -k.center[1];
        k.center[1] = x0;
      }
    out.push_back(Measure::from_kernels(std::move(ks)));
  }
  return MeasureSet::create(std::move(out));
}

}  // namespace ccbisect
