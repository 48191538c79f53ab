#pragma once

/// @file oracle.hpp
/// @brief Brute-force reference searches: exhaustive placement grids and a
/// Monte-Carlo estimate of the mass inside a placed cutter.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "ccbisect/parametrize.hpp"

namespace ccbisect {

/// Worker count: CCBISECT_THREADS if set, otherwise the hardware count.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("CCBISECT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on the configured number of threads.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_threads(), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct GridSpec {
  /// Centres per axis; grid points lo + (hi − lo)·i/(n_c − 1), so going
  /// from n to 2n − 1 points refines the grid.
  int n_c = 64;
  /// Rotation angles over one symmetry period (similarity mode).
  int n_theta = 1;
  /// Centre range: support box grown by margin × diameter on every side.
  double margin = 2.0;
  /// Also try reflected copies (similarity mode).
  bool reflections = false;
};

struct OracleResult {
  std::optional<Placement> best;
  double best_residual = std::numeric_limits<double>::infinity();
  GridSpec spec;
  AxisAlignedBox center_range;
  std::size_t evaluated = 0;
};

namespace detail {

inline std::vector<Orientation> oracle_orientations(const CutterSpec& cutter, Mode mode, const GridSpec& spec) {
  const int d = cutter.dim();
  if (mode != Mode::Similarity) return {Orientation::identity(d)};
  std::vector<Orientation> out;
  const std::vector<bool> flips = spec.reflections ? std::vector<bool>{false, true} : std::vector<bool>{false};
  if (d == 2) {
    const int order = cutter.symmetry_order();
    const double period = order == 0 ? 0.0 : kTwoPi / order;
    const int n = order == 0 ? 1 : std::max(1, spec.n_theta);
    for (bool f : flips)
      for (int k = 0; k < n; ++k) out.push_back({Rotation::planar(period * k / n), f});
    return out;
  }
  // d = 3: axis-angle samples; axes on a Fibonacci sphere.
  const int n = std::max(1, spec.n_theta);
  out.push_back(Orientation::identity(3));
  for (int k = 1; k < n; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = k * kPi * (3.0 - std::sqrt(5.0));
    const Vec axis(r * std::cos(phi), r * std::sin(phi), z);
    out.push_back({Rotation::axis_angle(axis, kPi * (k % 7 + 1) / 8.0), false});
  }
  return out;
}

}  // namespace detail

/// Exhaustive search over centre grids (and rotations in similarity mode);
/// the scale is pinned by the bisecting scale for star-shaped cutters and
/// swept over every scale root otherwise. In axis mode the cutter axis is
/// aligned with the direction from the support centre to the grid centre.
inline OracleResult grid_search(const MeasureSet& measures, const CutterSpec& cutter, Mode mode,
                                const GridSpec& spec) {
  if (measures.dim() != cutter.dim()) throw Error(ErrorKind::DimensionMismatch, "oracle: dimensions differ");
  if (spec.n_c < 2) throw Error(ErrorKind::Domain, "oracle needs at least 2 centres per axis");
  const int d = cutter.dim();
  const Measure& mu0 = measures.pinning();
  OracleResult res;
  res.spec = spec;
  AxisAlignedBox range = measures.support();
  const double grow = spec.margin * measures.diameter();
  for (int i = 0; i < d; ++i) {
    range.lo[i] -= grow;
    range.hi[i] += grow;
  }
  res.center_range = range;
  const auto orientations = detail::oracle_orientations(cutter, mode, spec);
  const auto n = static_cast<std::size_t>(spec.n_c);
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= n;
  const Vec axis_origin = measures.support().center();

  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();
    std::optional<Placement> placement;
  };
  const std::size_t jobs = cells * orientations.size();
  std::vector<Best> per_job(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t cell = job / orientations.size();
    Orientation o = orientations[job % orientations.size()];
    Vec c(d);
    std::size_t rest = cell;
    for (int i = 0; i < d; ++i) {
      const double t = static_cast<double>(rest % n) / static_cast<double>(n - 1);
      c[i] = range.lo[i] + t * (range.hi[i] - range.lo[i]);
      rest /= n;
    }
    if (mode == Mode::Axis) {
      const Vec dir = c - axis_origin;
      o = {axis_rotation(cutter, norm(dir) > 0.0 ? dir : Vec::unit(d, 0)), false};
    }
    std::vector<double> scales;
    if (cutter.is_star_shaped()) {
      scales.push_back(bisect_scale(cutter, mu0, c, o));
    } else {
      scales = enumerate_scale_roots(cutter, mu0, c, o).roots;
    }
    Best& b = per_job[job];
    for (double s : scales) {
      const Placement pl = Placement::body(c, s, o.rotation, o.reflected);
      const double r = residual(measures, cutter, pl).max_abs();
      if (r < b.value) {
        b.value = r;
        b.index = job;
        b.placement = pl;
      }
    }
  });
  for (const auto& b : per_job) {
    ++res.evaluated;
    if (b.placement && b.value < res.best_residual) {
      res.best_residual = b.value;
      res.best = b.placement;
    }
  }
  return res;
}

/// Monte-Carlo estimate of μ(placed copy) with `samples` points allotted to
/// kernels in proportion to their weight and placed by jittered
/// stratification inside each kernel box.
inline double monte_carlo_mass(const Measure& measure, const CutterSpec& cutter, const Placement& placement,
                               std::size_t samples, std::uint64_t seed) {
  const int d = measure.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double acc = 0.0;
  for (const auto& k : measure.kernels()) {
    const double share = static_cast<double>(samples) * k.weight / measure.total();
    const int side = std::max(1, static_cast<int>(std::floor(std::pow(share, 1.0 / d))));
    const long count = d == 2 ? static_cast<long>(side) * side : static_cast<long>(side) * side * side;
    long hits = 0;
    for (long idx = 0; idx < count; ++idx) {
      long rest = idx;
      Vec x = k.center;
      for (int i = 0; i < d; ++i) {
        const long cell = rest % side;
        rest /= side;
        x[i] += k.radius * (2.0 * (static_cast<double>(cell) + unit(rng)) / side - 1.0);
      }
      hits += contains(cutter, placement, x) ? 1 : 0;
    }
    acc += k.weight * static_cast<double>(hits) / static_cast<double>(count);
  }
  return acc;
}

}  // namespace ccbisect
