#pragma once

/// @file mass_eval.hpp
/// @brief Mass of a measure inside a placed cutter, the bisecting scale
/// s(c) (midpoint of the bisecting interval) and scale-root enumeration for
/// cutters that are not star-shaped.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "ccbisect/measures.hpp"

namespace ccbisect {

inline double mass_in(const Measure& measure, const PlacedCutter& placed) {
  switch (placed.classify(measure.support())) {
    case 0: return 0.0;
    case 1: return measure.total();
    default: break;
  }
  double acc = 0.0;
  for (const auto& k : measure.kernels()) {
    const double f = placed.fraction(k.center, k.radius);
    if (f != 0.0) acc += k.weight * f;
  }
  return acc;
}

/// μ(placed copy): Σ weight · kernel_mass_fraction. Raster measures are
/// stored as one kernel per non-empty cell, so the same sum is the exact
/// cell-overlap sum.
inline double mass_in(const Measure& measure, const CutterSpec& cutter, const Placement& placement) {
  if (measure.dim() != cutter.dim()) throw Error(ErrorKind::DimensionMismatch, "measure and cutter dimensions differ");
  return mass_in(measure, PlacedCutter(cutter, placement));
}

/// Orientation of a body copy: rotation plus optional reflection.
struct Orientation {
  Rotation rotation;
  bool reflected = false;

  static Orientation identity(int dim) { return {Rotation::identity(dim), false}; }
};

/// g(c, s) = (2 μ(C(c,s)) − μ(R^d)) / μ(R^d), with g(c, 0) = −1.
inline double scale_function(const CutterSpec& cutter, const Measure& mu, const Vec& c, const Orientation& o,
                             double s) {
  if (s <= 0.0) return -1.0;
  const double t = mu.total();
  return (2.0 * mass_in(mu, cutter, Placement::body(c, s, o.rotation, o.reflected)) - t) / t;
}

/// Scales at which the copy first touches the support box (s_hit, 0 when
/// c lies inside it) and certainly covers it (s_cover).
struct ScaleRange {
  double s_hit = 0.0;
  double s_cover = 1.0;
};

inline ScaleRange scale_range(const CutterSpec& cutter, const Measure& mu, const Vec& c) {
  const AxisAlignedBox& box = mu.support();
  return {box.distance_to(c) / cutter.outer_radius(), box.farthest_distance(c) / cutter.inner_radius()};
}

struct ScaleProfile {
  Vec center;
  Orientation orientation;
  std::vector<std::pair<double, double>> samples;  ///< (s, g(s))
};

inline ScaleProfile scale_profile(const CutterSpec& cutter, const Measure& mu, const Vec& c, const Orientation& o,
                                  std::span<const double> scales) {
  ScaleProfile p{c, o, {}};
  p.samples.reserve(scales.size());
  for (double s : scales) p.samples.emplace_back(s, scale_function(cutter, mu, c, o, s));
  return p;
}

namespace detail {

/// Relative tolerance in s for root polishing.
inline constexpr double kScaleRelTol = 1e-10;
/// |h| at or below band·T counts as an exact zero.
inline constexpr double kZeroBand = 1e-12;

/// Bracket termination: width at most rel·|s| and at most abs, unless the
/// bracket is already a few ulps wide.
struct ScaleTol {
  double rel;
  double abs = std::numeric_limits<double>::infinity();
  bool operator()(double a, double b) const {
    const double w = std::abs(b - a);
    const double lim = std::min(rel * std::min(std::abs(a), std::abs(b)), abs);
    return w <= lim || w <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
  }
};

/// Absolute scale tolerance: the boundary of C(c, s) moves at least
/// inner_radius per unit of s, so this keeps it within 1e-10 diameters.
inline double scale_abs_tol(const CutterSpec& cutter, const Measure& mu) {
  return kScaleRelTol * mu.support().diagonal() / cutter.inner_radius();
}

/// Midpoint of the zero set of a continuous h between a and b, where
/// sign(h(a)) = −sign(h(b)) outside the band. When h vanishes on an
/// interval both of its edges are located and their midpoint returned.
inline double interval_root(const std::function<double(double)>& h_raw, double a, double b, double ha, double hb,
                            double band, std::uintmax_t& evaluations, ScaleTol tol = {kScaleRelTol}) {
  const double sign = ha < 0.0 ? 1.0 : -1.0;  // make h increasing across the bracket
  auto h = [&](double s) {
    ++evaluations;
    return sign * h_raw(s);
  };
  ha *= sign;
  hb *= sign;
  std::optional<double> zero_at;
  auto banded = [&](double s) {
    const double v = h(s);
    if (std::abs(v) <= band) {
      zero_at = s;
      return 0.0;
    }
    return v;
  };
  std::uintmax_t iters = 300;
  const auto r = boost::math::tools::toms748_solve(banded, a, b, ha, hb, tol, iters);
  if (!zero_at) return 0.5 * (r.first + r.second);
  // Flat stretch: find the two edges of {|h| <= band}.
  const double z = *zero_at;
  auto lower = [&](double s) { return h(s) + band; };
  auto upper = [&](double s) { return h(s) - band; };
  double s_min = z, s_max = z;
  if (z > a) {
    std::uintmax_t it = 300;
    const double fz = lower(z);
    if (fz > 0.0) {
      const auto e = boost::math::tools::toms748_solve(lower, a, z, ha + band, fz, tol, it);
      s_min = 0.5 * (e.first + e.second);
    }
  }
  if (z < b) {
    std::uintmax_t it = 300;
    const double fz = upper(z);
    if (fz < 0.0) {
      const auto e = boost::math::tools::toms748_solve(upper, z, b, fz, hb - band, tol, it);
      s_max = 0.5 * (e.first + e.second);
    }
  }
  return 0.5 * (s_min + s_max);
}

}  // namespace detail

struct ScaleSolve {
  double scale = 0.0;
  std::uintmax_t evaluations = 0;
};

/// Bisecting scale for a star-shaped cutter at centre c: the midpoint of
/// {s : μ_0(C(c,s)) = T/2}, polished to relative tolerance 1e-10.
inline ScaleSolve bisect_scale_detailed(const CutterSpec& cutter, const Measure& mu0, const Vec& c,
                                        const Orientation& o) {
  if (!cutter.is_star_shaped())
    throw Error(ErrorKind::InvalidCutter, "bisect_scale needs a star-shaped cutter; use enumerate_scale_roots");
  if (c.dim() != cutter.dim()) throw Error(ErrorKind::DimensionMismatch, "centre and cutter dimensions differ");
  if (!c.finite()) throw Error(ErrorKind::Domain, "centre must be finite");
  const double total = mu0.total();
  const double band = detail::kZeroBand * total;
  ScaleSolve out;
  auto h = [&](double s) {
    return mass_in(mu0, cutter, Placement::body(c, s, o.rotation, o.reflected)) - 0.5 * total;
  };
  const ScaleRange range = scale_range(cutter, mu0, c);

  double hi = range.s_cover * (1.0 + 1e-9);
  double h_hi = h(hi);
  ++out.evaluations;
  for (int i = 0; h_hi <= band; ++i) {
    if (i == 200) throw Error(ErrorKind::NoBracket, "no upper scale bracket after 200 doublings");
    hi *= 2.0;
    h_hi = h(hi);
    ++out.evaluations;
  }
  double lo = range.s_hit > 0.0 ? range.s_hit : 0.5 * hi;
  double h_lo = h(lo);
  ++out.evaluations;
  for (int i = 0; h_lo >= -band; ++i) {
    if (i == 200) throw Error(ErrorKind::NoBracket, "no lower scale bracket after 200 halvings");
    if (h_lo > band) {
      hi = lo;
      h_hi = h_lo;
    }
    lo *= 0.5;
    h_lo = h(lo);
    ++out.evaluations;
  }
  // An upper end inside the band would hide a flat stretch at the top; it
  // cannot happen here because h_hi > band after the loops above.
  out.scale = detail::interval_root(h, lo, hi, h_lo, h_hi, band, out.evaluations,
                                    {detail::kScaleRelTol, detail::scale_abs_tol(cutter, mu0)});
  return out;
}

inline double bisect_scale(const CutterSpec& cutter, const Measure& mu0, const Vec& c, const Orientation& o) {
  return bisect_scale_detailed(cutter, mu0, c, o).scale;
}

inline double bisect_scale(const CutterSpec& cutter, const Measure& mu0, const Vec& c) {
  return bisect_scale(cutter, mu0, c, Orientation::identity(c.dim()));
}

/// Offset b such that the half-space {<x,n> >= b} bisects μ (midpoint of
/// the bisecting offsets).
inline double bisect_halfspace(const Measure& mu, const Vec& n) {
  const double total = mu.total();
  const double band = detail::kZeroBand * total;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& k : mu.kernels()) {
    double reach = 0.0;
    for (int i = 0; i < n.dim(); ++i) reach += std::abs(n[i]) * k.radius;
    const double t = dot(k.center, n);
    lo = std::min(lo, t - reach);
    hi = std::max(hi, t + reach);
  }
  // Mass above offset b decreases in b; f(b) = T/2 − mass above is increasing.
  auto f = [&](double b) {
    double above = 0.0;
    for (const auto& k : mu.kernels()) above += k.weight * half_space_fraction(k.center, k.radius, n, b);
    return 0.5 * total - above;
  };
  lo -= 1e-9 * (1.0 + std::abs(lo));
  hi += 1e-9 * (1.0 + std::abs(hi));
  std::uintmax_t evals = 0;
  const double f_lo = -0.5 * total;  // everything above
  const double f_hi = 0.5 * total;   // nothing above
  return detail::interval_root(f, lo, hi, f_lo, f_hi, band, evals,
                               {std::numeric_limits<double>::infinity(), detail::kScaleRelTol * (hi - lo)});
}

/// Sign-change roots t_1 < … < t_k of g(c, ·).
struct ScaleRoots {
  std::vector<double> roots;
  double scan_lo = 0.0;
  double scan_hi = 0.0;
  double g_at_scan_hi = 1.0;
};

/// Scans 512 log-spaced scales from s_hit/64 (or s_cover·1e-6 when c lies
/// in the support box) to max(s_cover·64, s_max) and polishes every sign
/// change. Zero runs between opposite signs count as one root at their
/// midpoint; touching zeros without a sign change are not reported.
inline ScaleRoots enumerate_scale_roots(const CutterSpec& cutter, const Measure& mu0, const Vec& c,
                                        const Orientation& o, std::optional<double> s_max = std::nullopt) {
  constexpr int kSamples = 512;
  const ScaleRange range = scale_range(cutter, mu0, c);
  const double lo = range.s_hit > 0.0 ? range.s_hit / 64.0 : range.s_cover * 1e-6;
  const double hi = std::max(range.s_cover * 64.0, s_max.value_or(0.0));
  const double total = mu0.total();
  const double band = detail::kZeroBand * total;
  auto h = [&](double s) {
    return mass_in(mu0, cutter, Placement::body(c, s, o.rotation, o.reflected)) - 0.5 * total;
  };
  std::vector<double> s(kSamples), v(kSamples);
  const double step = std::log(hi / lo) / (kSamples - 1);
  for (int i = 0; i < kSamples; ++i) {
    s[static_cast<std::size_t>(i)] = i == kSamples - 1 ? hi : lo * std::exp(step * i);
    v[static_cast<std::size_t>(i)] = h(s[static_cast<std::size_t>(i)]);
  }
  auto sign_of = [&](double x) { return x > band ? 1 : (x < -band ? -1 : 0); };
  ScaleRoots out{{}, lo, hi, (2.0 * v.back()) / total};
  std::uintmax_t evals = 0;
  const detail::ScaleTol tol{detail::kScaleRelTol, detail::scale_abs_tol(cutter, mu0)};
  int last = 0;
  std::size_t last_i = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int sg = sign_of(v[i]);
    if (sg == 0) continue;
    if (last != 0 && sg != last) {
      if (i == last_i + 1) {
        out.roots.push_back(detail::interval_root(h, s[last_i], s[i], v[last_i], v[i], band, evals, tol));
      } else {
        // A zero run on the scan grid: locate its two edges.
        const double flip = last < 0 ? 1.0 : -1.0;
        auto lower = [&](double x) { return flip * h(x) + band; };
        auto upper = [&](double x) { return flip * h(x) - band; };
        std::uintmax_t it1 = 300, it2 = 300;
        const auto e1 = boost::math::tools::toms748_solve(lower, s[last_i], s[last_i + 1], flip * v[last_i] + band,
                                                          flip * v[last_i + 1] + band, tol, it1);
        const auto e2 = boost::math::tools::toms748_solve(upper, s[i - 1], s[i], flip * v[i - 1] - band,
                                                          flip * v[i] - band, tol, it2);
        out.roots.push_back(0.25 * (e1.first + e1.second + e2.first + e2.second));
      }
    }
    last = sg;
    last_i = i;
  }
  return out;
}

}  // namespace ccbisect
