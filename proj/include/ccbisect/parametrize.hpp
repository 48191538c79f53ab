#pragma once

/// @file parametrize.hpp
/// @brief Compact charts whose points map to placements bisecting μ_0, the
/// residual map on them, and the compactified scale function.

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "ccbisect/mass_eval.hpp"

namespace ccbisect {

enum class Mode { Homothety, Axis, Similarity };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Homothety: return "homothety";
    case Mode::Axis: return "axis";
    case Mode::Similarity: return "similarity";
  }
  return "unknown";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "homothety") return Mode::Homothety;
  if (s == "axis") return Mode::Axis;
  if (s == "similarity") return Mode::Similarity;
  throw Error(ErrorKind::Parse, "unknown mode '" + s + "' (expected homothety, axis or similarity)");
}

/// Affine frame for chart centres: world = origin + unit · chart.
struct ChartFrame {
  Vec origin;
  double unit = 1.0;

  static ChartFrame identity(int dim) { return {Vec::zero(dim), 1.0}; }
  /// Centred on the support box with the half-diagonal as unit length.
  static ChartFrame fit(const MeasureSet& set) {
    const double half = 0.5 * set.diameter();
    return {set.support().center(), half > 0.0 ? half : 1.0};
  }
  Vec to_world(const Vec& c) const { return origin + c * unit; }
};

struct HomothetyPoint {
  Vec v;
};

struct AxisPoint {
  Vec u;
  double alpha = 0.0;
};

struct SimilarityPoint {
  Rotation rotation;
  bool reflected = false;
  Vec v;

  static SimilarityPoint planar(double theta, bool reflected, Vec v) {
    return {Rotation::planar(theta), reflected, std::move(v)};
  }
};

/// The j-th scale root on the fibre of a similarity point (cutters that are
/// not star-shaped).
struct BranchPoint {
  SimilarityPoint base;
  std::size_t root = 0;
};

using ChartPoint = std::variant<HomothetyPoint, AxisPoint, SimilarityPoint, BranchPoint>;

/// (μ_i(C) − μ_i(R^d∖C)) / μ_i(R^d) for i = 1..d.
struct Residual {
  std::vector<double> components;

  double max_abs() const noexcept {
    double m = 0.0;
    for (double c : components) m = std::max(m, std::abs(c));
    return m;
  }
};

inline Residual residual(const MeasureSet& measures, const CutterSpec& cutter, const Placement& placement) {
  if (measures.dim() != cutter.dim() || placement.dim() != cutter.dim())
    throw Error(ErrorKind::DimensionMismatch, "residual: measures, cutter and placement dimensions differ");
  const PlacedCutter placed(cutter, placement);
  Residual r;
  r.components.reserve(measures.size() - 1);
  for (std::size_t i = 1; i < measures.size(); ++i) {
    const double t = measures[i].total();
    r.components.push_back((2.0 * mass_in(measures[i], placed) - t) / t);
  }
  return r;
}

namespace detail {

/// First non-zero coordinate positive.
inline bool is_canonical(const Vec& u) noexcept {
  for (int i = 0; i < u.dim(); ++i) {
    if (u[i] > 0.0) return true;
    if (u[i] < 0.0) return false;
  }
  return true;
}

/// Half-space {<x, n> >= b} bisecting μ_0. For a direction and its
/// negative the results are exact complements.
inline Placement bisecting_half_space(const Measure& mu0, const Vec& n) {
  if (is_canonical(n)) return Placement::half_space(n, bisect_halfspace(mu0, n));
  const Vec m = -n;
  return Placement::half_space(n, -bisect_halfspace(mu0, m));
}

}  // namespace detail

/// Inward normal at the boundary point hit by the ray from the placed star
/// point in world direction u, for a copy with the given orientation.
inline Vec supporting_normal(const CutterSpec& cutter, const Orientation& o, const Vec& u) {
  const Vec local_u = reflect_first(o.rotation.apply_inverse(u), o.reflected);
  const SupportHit hit = cutter.support(local_u);
  return normalized(o.rotation.apply(reflect_first(hit.inward_normal, o.reflected)));
}

/// n(v) = normalize((2 − 2α) n(u) + (1 − 2α) u) with α = min(|v|, 1),
/// u = v/|v|; equals n(u) at α = 1/2 and −u at α = 1.
inline Vec interpolated_normal(const CutterSpec& cutter, const Orientation& o, const Vec& v) {
  const double r = norm(v);
  const double alpha = std::min(r, 1.0);
  const Vec u = v / r;
  if (alpha >= 1.0) return -u;
  return normalized(supporting_normal(cutter, o, u) * (2.0 - 2.0 * alpha) + u * (1.0 - 2.0 * alpha));
}

/// Centre coefficient |v| / (2|v| − 1) for |v| < 1/2.
inline Vec homothety_center(const Vec& v) {
  const double r = norm(v);
  return v * (r / (2.0 * r - 1.0));
}

/// Rotation (and reflection) applied to the cutter, then the ball chart:
/// |v| < 1/2 gives the body at c(v) with the bisecting scale, |v| >= 1/2
/// the bisecting half-space with normal n(v).
inline Placement similarity_chart(const CutterSpec& cutter, const Measure& mu0, const Orientation& o, const Vec& v,
                                  const ChartFrame& frame, std::optional<std::size_t> branch = std::nullopt) {
  if (v.dim() != cutter.dim()) throw Error(ErrorKind::DimensionMismatch, "chart point dimension");
  const double r = norm(v);
  if (!(r <= 1.0 + 1e-12)) throw Error(ErrorKind::Domain, "chart point outside the unit ball");
  // Centres beyond kFarCentre chart units cannot be resolved in double
  // precision; the copy is then replaced by its half-space limit.
  constexpr double kFarCentre = 1e7;
  if (r >= 0.5 || r > kFarCentre * (1.0 - 2.0 * r)) {
    if (r >= 1.0) return detail::bisecting_half_space(mu0, -(v / r));
    const Vec n = interpolated_normal(cutter, o, r >= 0.5 ? v : v * (0.5 / r));
    return Placement::half_space(n, bisect_halfspace(mu0, n));
  }
  const Vec c = frame.to_world(homothety_center(v));
  double s = 0.0;
  if (cutter.is_star_shaped() && !branch) {
    s = bisect_scale(cutter, mu0, c, o);
  } else {
    const ScaleRoots roots = enumerate_scale_roots(cutter, mu0, c, o);
    if (roots.roots.empty()) throw Error(ErrorKind::NoBracket, "no scale root on this fibre");
    const std::size_t j = std::min(branch.value_or(roots.roots.size() / 2), roots.roots.size() - 1);
    s = roots.roots[j];
  }
  return Placement::body(c, s, o.rotation, o.reflected);
}

inline Placement homothety_chart(const CutterSpec& cutter, const Measure& mu0, const Vec& v,
                                 const ChartFrame& frame) {
  return similarity_chart(cutter, mu0, Orientation::identity(cutter.dim()), v, frame);
}

inline Placement homothety_chart(const CutterSpec& cutter, const Measure& mu0, const Vec& v) {
  return homothety_chart(cutter, mu0, v, ChartFrame::identity(cutter.dim()));
}

/// Direction along which the cutter is stretched in the axis chart.
inline Vec cutter_axis(const CutterSpec& cutter) {
  if (const auto* cyl = std::get_if<Cylinder>(&cutter.shape())) return Vec::unit(3, cyl->axis);
  if (const auto* box = std::get_if<AxisBox>(&cutter.shape()); box && cutter.dim() == 2)
    return Vec::unit(2, box->axis);
  throw Error(ErrorKind::Unsupported, "axis chart needs a cylinder (d = 3) or a planar box cutter");
}

/// Rotation taking the cutter axis to the line through u. The same
/// rotation is used for u and −u.
inline Rotation axis_rotation(const CutterSpec& cutter, const Vec& u) {
  const Vec e = cutter_axis(cutter);
  const double along = dot(u, e);
  Vec w = u;
  if (along < 0.0 || (along == 0.0 && !detail::is_canonical(u))) w = -u;
  if (cutter.dim() == 2) return Rotation::planar(std::atan2(w[1], w[0]) - std::atan2(e[1], e[0]));
  return Rotation::aligning(e, w);
}

/// Centre (α/(1−α)) u, cutter axis aligned with u, bisecting scale β; the
/// limit α = 1 is the bisecting half-space with normal u.
inline Placement axis_chart(const CutterSpec& cutter, const Measure& mu0, const Vec& u_in, double alpha,
                            const ChartFrame& frame) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Domain, "axis chart needs alpha in [0, 1]");
  const Vec u = normalized(u_in);
  if (alpha >= 1.0) return detail::bisecting_half_space(mu0, u);
  const Rotation rot = axis_rotation(cutter, u);
  const Vec c = frame.to_world(alpha == 0.0 ? Vec::zero(u.dim()) : u * (alpha / (1.0 - alpha)));
  const Orientation o{rot, false};
  return Placement::body(c, bisect_scale(cutter, mu0, c, o), rot, false);
}

inline Placement axis_chart(const CutterSpec& cutter, const Measure& mu0, const Vec& u, double alpha) {
  return axis_chart(cutter, mu0, u, alpha, ChartFrame::identity(cutter.dim()));
}

inline Placement chart_placement(const ChartPoint& point, const CutterSpec& cutter, const Measure& mu0,
                                 const ChartFrame& frame) {
  return std::visit(
      [&](const auto& p) -> Placement {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, HomothetyPoint>) {
          return homothety_chart(cutter, mu0, p.v, frame);
        } else if constexpr (std::is_same_v<P, AxisPoint>) {
          return axis_chart(cutter, mu0, p.u, p.alpha, frame);
        } else if constexpr (std::is_same_v<P, SimilarityPoint>) {
          return similarity_chart(cutter, mu0, {p.rotation, p.reflected}, p.v, frame);
        } else {
          return similarity_chart(cutter, mu0, {p.base.rotation, p.base.reflected}, p.base.v, frame, p.root);
        }
      },
      point);
}

/// φ(s) = (1 − δ)(s − 1)/(s + 1) maps [0, ∞] onto [−1 + δ, 1 − δ].
class CompactifiedScale {
 public:
  explicit CompactifiedScale(double delta = 1.0 / 16.0) : delta_(delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::Domain, "delta must lie in (0, 1)");
  }

  double delta() const noexcept { return delta_; }
  double phi(double s) const {
    if (std::isinf(s)) return 1.0 - delta_;
    return (1.0 - delta_) * (s - 1.0) / (s + 1.0);
  }
  /// Inverse of φ on [−1 + δ, 1 − δ]; +∞ at the upper end.
  double phi_inverse(double x) const {
    const double y = x / (1.0 - delta_);
    if (y >= 1.0) return std::numeric_limits<double>::infinity();
    return std::max(0.0, (1.0 + y) / (1.0 - y));
  }
  /// g′ from g on [−1 + δ, 1 − δ] scaled by (1 − δ), linear to ±1 beyond.
  template <class G>
  double extend(double x, G&& g) const {
    if (x < -1.0 || x > 1.0) throw Error(ErrorKind::Domain, "compactified scale needs x in [-1, 1]");
    const double edge = 1.0 - delta_;
    if (x <= -edge || x >= edge) return x;
    return edge * g(phi_inverse(x));
  }

 private:
  double delta_;
};

/// x ↦ g′(c, x) for a fixed centre and orientation.
class CompactScaleProfile {
 public:
  CompactScaleProfile(const CutterSpec& cutter, const Measure& mu0, Vec c, Orientation o, double delta)
      : cutter_(cutter), mu0_(&mu0), c_(std::move(c)), o_(std::move(o)), map_(delta) {}

  double operator()(double x) const {
    return map_.extend(x, [&](double s) { return scale_function(cutter_, *mu0_, c_, o_, s); });
  }
  const CompactifiedScale& map() const noexcept { return map_; }

 private:
  CutterSpec cutter_;
  const Measure* mu0_;
  Vec c_;
  Orientation o_;
  CompactifiedScale map_;
};

inline CompactScaleProfile compactified_scale(const CutterSpec& cutter, const Measure& mu0, const Vec& c,
                                              const Orientation& o, double delta = 1.0 / 16.0) {
  return CompactScaleProfile(cutter, mu0, c, o, delta);
}

}  // namespace ccbisect
