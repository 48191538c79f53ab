#pragma once

/// @file geometry.hpp
/// @brief Vectors, rotations, cutter shapes, placements and the clipping
/// kernels used to integrate mass over placed cutters (d = 2, 3).

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ccbisect/error.hpp"

namespace ccbisect {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline void require_dimension(int dim) {
  if (dim != 2 && dim != 3) {
    throw Error(ErrorKind::DimensionMismatch,
                "dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

// ---------------------------------------------------------------------------
// Vec
// ---------------------------------------------------------------------------

/// Point or direction in R^2 or R^3. The dimension is a runtime property so
/// instances loaded from files can be dispatched without templates.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim) : dim_(dim) {}
  Vec(double x, double y) : c_{x, y, 0.0}, dim_(2) {}
  Vec(double x, double y, double z) : c_{x, y, z}, dim_(3) {}

  static Vec zero(int dim) { return Vec(dim); }
  static Vec unit(int dim, int axis) {
    Vec v(dim);
    v[axis] = 1.0;
    return v;
  }
  static Vec from_span(std::span<const double> xs) {
    require_dimension(static_cast<int>(xs.size()));
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v.c_[i] = xs[i];
    return v;
  }

  int dim() const noexcept { return dim_; }
  double operator[](int i) const noexcept { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) noexcept { return c_[static_cast<std::size_t>(i)]; }
  double x() const noexcept { return c_[0]; }
  double y() const noexcept { return c_[1]; }
  double z() const noexcept { return c_[2]; }

  std::span<const double> coords() const noexcept {
    return {c_.data(), static_cast<std::size_t>(dim_)};
  }

  bool finite() const noexcept {
    for (int i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[static_cast<std::size_t>(i)])) return false;
    return true;
  }

  Vec& operator+=(const Vec& o) noexcept {
    assert(dim_ == o.dim_);
    for (std::size_t i = 0; i < 3; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) noexcept {
    assert(dim_ == o.dim_);
    for (std::size_t i = 0; i < 3; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Vec& operator*=(double s) noexcept {
    for (auto& x : c_) x *= s;
    return *this;
  }
  Vec& operator/=(double s) noexcept {
    for (auto& x : c_) x /= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
  friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
  friend Vec operator*(double s, Vec a) noexcept { return a *= s; }
  friend Vec operator/(Vec a, double s) noexcept { return a /= s; }
  friend Vec operator-(Vec a) noexcept {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  bool operator==(const Vec&) const = default;

 private:
  std::array<double, 3> c_{};
  int dim_ = 0;
};

inline double dot(const Vec& a, const Vec& b) noexcept {
  assert(a.dim() == b.dim());
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec& a) noexcept { return dot(a, a); }
inline double norm(const Vec& a) noexcept { return std::sqrt(norm2(a)); }
inline double distance(const Vec& a, const Vec& b) noexcept { return norm(a - b); }
inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  if (!(n > 0.0)) throw Error(ErrorKind::Domain, "cannot normalize a zero vector");
  return a / n;
}
/// z-component of the planar cross product.
inline double cross2(const Vec& a, const Vec& b) noexcept { return a[0] * b[1] - a[1] * b[0]; }
inline Vec cross3(const Vec& a, const Vec& b) noexcept {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double max_abs(const Vec& a) noexcept {
  double m = 0.0;
  for (int i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Rotation
// ---------------------------------------------------------------------------

/// Proper rotation (det = +1). Planar rotations remember their angle.
class Rotation {
 public:
  Rotation() : Rotation(identity(2)) {}

  static Rotation identity(int dim) {
    require_dimension(dim);
    Rotation r(dim);
    r.m_ = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return r;
  }

  static Rotation planar(double theta) {
    Rotation r(2);
    theta = std::fmod(theta, kTwoPi);
    if (theta < 0.0) theta += kTwoPi;
    r.angle_ = theta;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    r.m_ = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
  }

  /// Row-major 3x3 matrix; must be orthonormal with determinant +1 (1e-12).
  static Rotation from_matrix(const std::array<double, 9>& m) {
    Rotation r(3);
    r.m_ = m;
    r.validate();
    return r;
  }

  /// Rotation by `angle` about `axis` (d = 3).
  static Rotation axis_angle(const Vec& axis, double angle) {
    if (axis.dim() != 3) throw Error(ErrorKind::DimensionMismatch, "axis_angle needs d = 3");
    const Vec k = normalized(axis);
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Rotation r(3);
    r.m_ = {t * k[0] * k[0] + c,        t * k[0] * k[1] - s * k[2], t * k[0] * k[2] + s * k[1],
            t * k[0] * k[1] + s * k[2], t * k[1] * k[1] + c,        t * k[1] * k[2] - s * k[0],
            t * k[0] * k[2] - s * k[1], t * k[1] * k[2] + s * k[0], t * k[2] * k[2] + c};
    return r;
  }

  /// Minimal rotation taking unit vector `from` to unit vector `to`.
  /// Requires from != -to in d = 3.
  static Rotation aligning(const Vec& from, const Vec& to) {
    if (from.dim() != to.dim()) throw Error(ErrorKind::DimensionMismatch, "aligning");
    if (from.dim() == 2) return planar(std::atan2(to[1], to[0]) - std::atan2(from[1], from[0]));
    const Vec a = normalized(from), b = normalized(to);
    const Vec k = cross3(a, b);
    const double s = norm(k), c = dot(a, b);
    if (s < 1e-15) {
      if (c > 0.0) return identity(3);
      throw Error(ErrorKind::Domain, "aligning antiparallel vectors is ambiguous");
    }
    return axis_angle(k, std::atan2(s, c));
  }

  int dim() const noexcept { return dim_; }
  /// Planar angle in [0, 2π); 0 for d = 3.
  double angle() const noexcept { return angle_; }
  const std::array<double, 9>& matrix() const noexcept { return m_; }
  double at(int i, int j) const noexcept { return m_[static_cast<std::size_t>(3 * i + j)]; }

  Vec apply(const Vec& x) const noexcept {
    Vec y(x.dim());
    for (int i = 0; i < x.dim(); ++i) {
      double acc = 0.0;
      for (int j = 0; j < x.dim(); ++j) acc += at(i, j) * x[j];
      y[i] = acc;
    }
    return y;
  }
  Vec apply_inverse(const Vec& x) const noexcept {
    Vec y(x.dim());
    for (int i = 0; i < x.dim(); ++i) {
      double acc = 0.0;
      for (int j = 0; j < x.dim(); ++j) acc += at(j, i) * x[j];
      y[i] = acc;
    }
    return y;
  }

  Rotation then(const Rotation& next) const {
    if (next.dim_ != dim_) throw Error(ErrorKind::DimensionMismatch, "rotation composition");
    if (dim_ == 2) return planar(angle_ + next.angle_);
    Rotation r(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += next.at(i, k) * at(k, j);
        r.m_[static_cast<std::size_t>(3 * i + j)] = acc;
      }
    return r;
  }

  bool operator==(const Rotation&) const = default;

 private:
  explicit Rotation(int dim) : dim_(dim) {}

  void validate() const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) acc += at(k, i) * at(k, j);
        if (std::abs(acc - (i == j ? 1.0 : 0.0)) > 1e-12)
          throw Error(ErrorKind::InvalidPlacement, "rotation matrix is not orthonormal");
      }
    const double det = at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
                       at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
                       at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
    if (std::abs(det - 1.0) > 1e-12)
      throw Error(ErrorKind::InvalidPlacement, "rotation matrix must have determinant +1");
  }

  std::array<double, 9> m_{};
  double angle_ = 0.0;
  int dim_ = 2;
};

// ---------------------------------------------------------------------------
// Planar polygons
// ---------------------------------------------------------------------------

struct AxisAlignedBox {
  Vec lo;
  Vec hi;

  int dim() const noexcept { return lo.dim(); }
  Vec center() const { return (lo + hi) * 0.5; }
  double diagonal() const { return norm(hi - lo); }
  bool contains(const Vec& x) const noexcept {
    for (int i = 0; i < lo.dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  /// Euclidean distance from x to the box (0 inside).
  double distance_to(const Vec& x) const noexcept {
    double acc = 0.0;
    for (int i = 0; i < lo.dim(); ++i) {
      const double d = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  /// Largest distance from x to a point of the box.
  double farthest_distance(const Vec& x) const noexcept {
    double acc = 0.0;
    for (int i = 0; i < lo.dim(); ++i) {
      const double d = std::max(std::abs(x[i] - lo[i]), std::abs(x[i] - hi[i]));
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  void expand(const Vec& x) {
    for (int i = 0; i < lo.dim(); ++i) {
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  }
};

using Polygon = std::vector<Vec>;
using Triangle = std::array<Vec, 3>;

inline double signed_area(std::span<const Vec> poly) noexcept {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += cross2(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline double polygon_area(std::span<const Vec> poly) noexcept { return std::abs(signed_area(poly)); }

/// Keeps the part of a convex (or any) polygon with <x, n> >= b.
inline Polygon clip_halfplane(std::span<const Vec> poly, const Vec& n, double b) {
  Polygon out;
  const std::size_t m = poly.size();
  if (m == 0) return out;
  out.reserve(m + 2);
  Vec prev = poly[m - 1];
  double dprev = dot(prev, n) - b;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec& cur = poly[i];
    const double dcur = dot(cur, n) - b;
    if (dcur >= 0.0) {
      if (dprev < 0.0) out.push_back(prev + (cur - prev) * (dprev / (dprev - dcur)));
      out.push_back(cur);
    } else if (dprev >= 0.0) {
      out.push_back(prev + (cur - prev) * (dprev / (dprev - dcur)));
    }
    prev = cur;
    dprev = dcur;
  }
  return out;
}

/// Sutherland-Hodgman clip of `subject` against a convex CCW `clipper`.
inline Polygon clip_convex_polygons(std::span<const Vec> subject, std::span<const Vec> clipper) {
  Polygon out(subject.begin(), subject.end());
  const std::size_t m = clipper.size();
  for (std::size_t i = 0; i < m && out.size() >= 3; ++i) {
    const Vec& a = clipper[i];
    const Vec& b = clipper[(i + 1) % m];
    const Vec e = b - a;
    const Vec inward(-e[1], e[0]);
    out = clip_halfplane(out, inward, dot(inward, a));
  }
  if (out.size() < 3) out.clear();
  return out;
}

/// Area of a convex CCW polygon intersected with an axis-aligned box.
/// Degenerate (collinear) input yields 0.
inline double clip_convex(std::span<const Vec> poly, const AxisAlignedBox& box) {
  if (box.dim() != 2) throw Error(ErrorKind::DimensionMismatch, "clip_convex is planar");
  Polygon out(poly.begin(), poly.end());
  for (int axis = 0; axis < 2 && out.size() >= 3; ++axis) {
    out = clip_halfplane(out, Vec::unit(2, axis), box.lo[axis]);
    if (out.size() < 3) break;
    out = clip_halfplane(out, -Vec::unit(2, axis), -box.hi[axis]);
  }
  return out.size() < 3 ? 0.0 : polygon_area(out);
}

namespace detail {

// Signed area of disk(0, r) ∩ triangle(0, a, b).
inline double disk_triangle_area(const Vec& a, const Vec& b, double r) noexcept {
  const double r2 = r * r;
  auto sector = [r2](const Vec& p, const Vec& q) {
    return 0.5 * r2 * std::atan2(cross2(p, q), dot(p, q));
  };
  const double na = norm2(a), nb = norm2(b);
  if (na <= r2 && nb <= r2) return 0.5 * cross2(a, b);
  const Vec d = b - a;
  const double qa = norm2(d);
  if (qa == 0.0) return 0.0;
  const double qb = 2.0 * dot(a, d);
  const double qc = na - r2;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return sector(a, b);
  const double sq = std::sqrt(disc);
  const double t1 = (-qb - sq) / (2.0 * qa);
  const double t2 = (-qb + sq) / (2.0 * qa);
  if (t2 <= 0.0 || t1 >= 1.0) return sector(a, b);
  const Vec p1 = a + d * std::max(t1, 0.0);
  const Vec p2 = a + d * std::min(t2, 1.0);
  return sector(a, p1) + 0.5 * cross2(p1, p2) + sector(p2, b);
}

}  // namespace detail

/// Area of disk(center, r) ∩ polygon (simple, either orientation).
inline double disk_polygon_area(const Vec& center, double r, std::span<const Vec> poly) noexcept {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += detail::disk_triangle_area(poly[i] - center, poly[(i + 1) % n] - center, r);
  return std::abs(acc);
}

inline double segment_distance(const Vec& x, const Vec& a, const Vec& b) noexcept {
  const Vec ab = b - a;
  const double len2 = norm2(ab);
  double t = len2 > 0.0 ? dot(x - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(x - (a + ab * t));
}

/// Even-odd point-in-polygon (boundary counts as inside).
inline bool point_in_polygon(const Vec& x, std::span<const Vec> poly) noexcept {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec& a = poly[i];
    const Vec& b = poly[j];
    if (segment_distance(x, a, b) == 0.0) return true;
    if ((a[1] > x[1]) != (b[1] > x[1])) {
      const double xs = a[0] + (x[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (x[0] < xs) inside = !inside;
    }
  }
  return inside;
}

inline double polygon_boundary_distance(const Vec& x, std::span<const Vec> poly) noexcept {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, segment_distance(x, poly[i], poly[(i + 1) % n]));
  return best;
}

// ---------------------------------------------------------------------------
// Convex polyhedra (d = 3 clipping)
// ---------------------------------------------------------------------------

/// Convex polyhedron stored as outward-oriented faces; enough to clip
/// kernel cubes by a few planes and measure the remaining volume.
class ConvexPolyhedron {
 public:
  /// Parallelepiped centred at `c` with edge half-vectors a0, a1, a2
  /// (a right-handed or left-handed frame; faces are oriented either way).
  static ConvexPolyhedron parallelepiped(const Vec& c, const Vec& a0, const Vec& a1, const Vec& a2) {
    std::array<Vec, 8> v;
    for (int i = 0; i < 8; ++i) {
      const double s0 = (i & 1) ? 1.0 : -1.0;
      const double s1 = (i & 2) ? 1.0 : -1.0;
      const double s2 = (i & 4) ? 1.0 : -1.0;
      v[static_cast<std::size_t>(i)] = c + a0 * s0 + a1 * s1 + a2 * s2;
    }
    static constexpr std::array<std::array<int, 4>, 6> kFaces{{
        {0, 2, 6, 4}, {1, 5, 7, 3}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 6, 7, 5}}};
    ConvexPolyhedron p;
    for (const auto& f : kFaces) {
      Polygon face;
      for (int idx : f) face.push_back(v[static_cast<std::size_t>(idx)]);
      p.faces_.push_back(std::move(face));
    }
    if (p.signed_volume() < 0.0)
      for (auto& f : p.faces_) std::reverse(f.begin(), f.end());
    return p;
  }

  static ConvexPolyhedron axis_cube(const Vec& c, double half) {
    return parallelepiped(c, Vec(half, 0, 0), Vec(0, half, 0), Vec(0, 0, half));
  }

  bool empty() const noexcept { return faces_.empty(); }

  double volume() const noexcept { return std::abs(signed_volume()); }

  /// Keeps the part with <x, n> >= b.
  void clip(const Vec& n, double b) {
    if (faces_.empty()) return;
    std::vector<Polygon> kept;
    std::vector<Vec> cut;
    bool any_out = false;
    for (const auto& f : faces_) {
      const std::size_t m = f.size();
      Polygon out;
      Vec prev = f[m - 1];
      double dprev = dot(prev, n) - b;
      for (std::size_t i = 0; i < m; ++i) {
        const Vec& cur = f[i];
        const double dcur = dot(cur, n) - b;
        if (dcur < 0.0) any_out = true;
        if (dcur >= 0.0) {
          if (dprev < 0.0) {
            Vec q = prev + (cur - prev) * (dprev / (dprev - dcur));
            out.push_back(q);
            cut.push_back(q);
          }
          out.push_back(cur);
        } else if (dprev >= 0.0) {
          Vec q = prev + (cur - prev) * (dprev / (dprev - dcur));
          out.push_back(q);
          cut.push_back(q);
        }
        prev = cur;
        dprev = dcur;
      }
      if (out.size() >= 3) kept.push_back(std::move(out));
    }
    if (!any_out) return;
    if (kept.empty()) {
      faces_.clear();
      return;
    }
    if (cut.size() >= 3) {
      Vec centroid = Vec::zero(3);
      for (const auto& q : cut) centroid += q;
      centroid /= static_cast<double>(cut.size());
      // Cap face lies on the plane with outward normal -n.
      const Vec outward = -n;
      Vec e0 = std::abs(outward[0]) < 0.9 ? Vec(1, 0, 0) : Vec(0, 1, 0);
      e0 = normalized(e0 - outward * dot(e0, outward));
      const Vec e1 = cross3(outward, e0);
      std::sort(cut.begin(), cut.end(), [&](const Vec& p, const Vec& q) {
        const Vec dp = p - centroid, dq = q - centroid;
        return std::atan2(dot(dp, e1), dot(dp, e0)) < std::atan2(dot(dq, e1), dot(dq, e0));
      });
      Polygon cap;
      for (const auto& q : cut)
        if (cap.empty() || norm2(q - cap.back()) > 1e-30) cap.push_back(q);
      if (cap.size() >= 3 && norm2(cap.front() - cap.back()) <= 1e-30) cap.pop_back();
      if (cap.size() >= 3) kept.push_back(std::move(cap));
    }
    faces_ = std::move(kept);
  }

 private:
  double signed_volume() const noexcept {
    double acc = 0.0;
    for (const auto& f : faces_)
      for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += dot(f[0], cross3(f[i], f[i + 1]));
    return acc / 6.0;
  }

  std::vector<Polygon> faces_;
};

// ---------------------------------------------------------------------------
// Cutter shapes
// ---------------------------------------------------------------------------

/// Ball of the given radius centred at the local origin.
struct Disk {
  double radius = 1.0;
};
/// Box [-ρ_1, ρ_1] × … centred at the local origin. `axis` is the direction
/// coordinate used by the axis chart (last coordinate by default).
struct AxisBox {
  std::array<double, 3> half_extents{1.0, 1.0, 1.0};
  int axis = -1;
};
/// d = 3 cylinder: disk of `radius` in the coordinates other than `axis`,
/// times [-half_height, half_height] along `axis`.
struct Cylinder {
  double radius = 1.0;
  double half_height = 1.0;
  int axis = 2;
};
/// CCW planar polygon, star-shaped with respect to the cutter's star point.
struct StarPolygon {
  Polygon vertices;
  bool smooth = false;
};
/// Planar polygon minus a polygonal hole. Not star-shaped; scaled about the
/// cutter's reference point.
struct PolygonWithHole {
  Polygon outer;
  Polygon hole;
};

using CutterShape = std::variant<Disk, AxisBox, Cylinder, StarPolygon, PolygonWithHole>;

/// Boundary point hit by a ray from the star point, with the inward unit
/// normal of the supporting hyperplane there (local frame).
struct SupportHit {
  Vec point;
  Vec inward_normal;
};

class CutterSpec {
 public:
  static CutterSpec disk(int dim, double radius, std::optional<Vec> star_point = std::nullopt) {
    require_dimension(dim);
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidCutter, "disk radius must be positive");
    return CutterSpec(dim, Disk{radius}, star_point.value_or(Vec::zero(dim)));
  }

  static CutterSpec axis_box(std::span<const double> half_extents, int axis = -1,
                             std::optional<Vec> star_point = std::nullopt) {
    const int dim = static_cast<int>(half_extents.size());
    require_dimension(dim);
    AxisBox box;
    for (int i = 0; i < dim; ++i) {
      if (!(half_extents[static_cast<std::size_t>(i)] > 0.0))
        throw Error(ErrorKind::InvalidCutter, "box half extents must be positive");
      box.half_extents[static_cast<std::size_t>(i)] = half_extents[static_cast<std::size_t>(i)];
    }
    box.axis = axis < 0 ? dim - 1 : axis;
    if (box.axis >= dim) throw Error(ErrorKind::InvalidCutter, "box axis out of range");
    return CutterSpec(dim, box, star_point.value_or(Vec::zero(dim)));
  }

  static CutterSpec square(double half_width = 1.0) {
    const std::array<double, 2> h{half_width, half_width};
    return axis_box(h);
  }

  static CutterSpec cylinder(double radius, double half_height, int axis = 2,
                             std::optional<Vec> star_point = std::nullopt) {
    if (!(radius > 0.0) || !(half_height > 0.0))
      throw Error(ErrorKind::InvalidCutter, "cylinder radius and half height must be positive");
    if (axis < 0 || axis > 2) throw Error(ErrorKind::InvalidCutter, "cylinder axis out of range");
    return CutterSpec(3, Cylinder{radius, half_height, axis}, star_point.value_or(Vec::zero(3)));
  }

  static CutterSpec star_polygon(Polygon vertices, const Vec& star_point, bool smooth = false) {
    check_polygon(vertices);
    return CutterSpec(2, StarPolygon{std::move(vertices), smooth}, star_point);
  }

  static CutterSpec polygon_with_hole(Polygon outer, Polygon hole, const Vec& reference_point) {
    check_polygon(outer);
    check_polygon(hole);
    for (const auto& v : hole)
      if (!point_in_polygon(v, outer))
        throw Error(ErrorKind::InvalidCutter, "hole must lie inside the outer polygon");
    return CutterSpec(2, PolygonWithHole{std::move(outer), std::move(hole)}, reference_point);
  }

  int dim() const noexcept { return dim_; }
  const Vec& star_point() const noexcept { return star_; }
  const CutterShape& shape() const noexcept { return shape_; }
  bool is_star_shaped() const noexcept { return !std::holds_alternative<PolygonWithHole>(shape_); }
  bool is_smooth() const noexcept {
    if (std::holds_alternative<Disk>(shape_)) return true;
    if (const auto* p = std::get_if<StarPolygon>(&shape_)) return p->smooth;
    return false;
  }
  /// Local-frame star-fan triangles (p, v_i, v_{i+1}) for polygonal shapes;
  /// for a polygon with hole, the outer fan.
  std::span<const Triangle> fan() const noexcept { return fan_; }
  std::span<const Triangle> hole_fan() const noexcept { return hole_fan_; }
  /// Polygon outline (planar box/polygon cutters), local frame.
  const Polygon& outline() const noexcept { return outline_; }

  bool contains_local(const Vec& y) const {
    return std::visit(
        [&](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            return norm2(y) <= s.radius * s.radius;
          } else if constexpr (std::is_same_v<S, AxisBox>) {
            for (int i = 0; i < dim_; ++i)
              if (std::abs(y[i]) > s.half_extents[static_cast<std::size_t>(i)]) return false;
            return true;
          } else if constexpr (std::is_same_v<S, Cylinder>) {
            double r2 = 0.0;
            for (int i = 0; i < 3; ++i)
              if (i != s.axis) r2 += y[i] * y[i];
            return r2 <= s.radius * s.radius && std::abs(y[s.axis]) <= s.half_height;
          } else if constexpr (std::is_same_v<S, StarPolygon>) {
            return point_in_polygon(y, s.vertices);
          } else {
            return point_in_polygon(y, s.outer) &&
                   (!point_in_polygon(y, s.hole) || polygon_boundary_distance(y, s.hole) == 0.0);
          }
        },
        shape_);
  }

  /// Unsigned distance from y to the boundary (local frame).
  double boundary_distance_local(const Vec& y) const {
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            return std::abs(norm(y) - s.radius);
          } else if constexpr (std::is_same_v<S, AxisBox>) {
            return std::abs(box_signed_distance(y, s));
          } else if constexpr (std::is_same_v<S, Cylinder>) {
            double r2 = 0.0;
            for (int i = 0; i < 3; ++i)
              if (i != s.axis) r2 += y[i] * y[i];
            const double dr = std::sqrt(r2) - s.radius;
            const double dh = std::abs(y[s.axis]) - s.half_height;
            if (dr <= 0.0 && dh <= 0.0) return std::min(-dr, -dh);
            return std::hypot(std::max(dr, 0.0), std::max(dh, 0.0));
          } else if constexpr (std::is_same_v<S, StarPolygon>) {
            return polygon_boundary_distance(y, s.vertices);
          } else {
            return std::min(polygon_boundary_distance(y, s.outer), polygon_boundary_distance(y, s.hole));
          }
        },
        shape_);
  }

  /// max |y - p| over the shape.
  double outer_radius() const noexcept { return outer_radius_; }
  /// Distance from the star point to the boundary.
  double inner_radius() const noexcept { return inner_radius_; }

  /// Rotational symmetry order about the star point in the plane (0 for a
  /// disk centred at p, i.e. continuous symmetry; 1 when none is detected).
  int symmetry_order() const noexcept { return symmetry_order_; }

  /// Ray from the star point in direction u (local frame): boundary point
  /// m(u) and the inward normal n(u) of the supporting hyperplane there.
  /// Non-smooth boundary points are resolved by blending the adjacent facet
  /// normals inside a 1e-3 angular window so that n(u) is continuous.
  SupportHit support(const Vec& u_in) const;

 private:
  CutterSpec(int dim, CutterShape shape, Vec star)
      : dim_(dim), shape_(std::move(shape)), star_(std::move(star)) {
    if (star_.dim() != dim_) throw Error(ErrorKind::DimensionMismatch, "star point dimension");
    if (const auto* box = std::get_if<AxisBox>(&shape_); box && dim_ == 2) {
      const double a = box->half_extents[0], b = box->half_extents[1];
      outline_ = {Vec(-a, -b), Vec(a, -b), Vec(a, b), Vec(-a, b)};
    } else if (const auto* poly = std::get_if<StarPolygon>(&shape_)) {
      outline_ = poly->vertices;
    } else if (const auto* ring = std::get_if<PolygonWithHole>(&shape_)) {
      outline_ = ring->outer;
    }
    if (std::holds_alternative<StarPolygon>(shape_) || std::holds_alternative<AxisBox>(shape_)) {
      if (dim_ == 2) fan_ = build_fan(outline_, star_, true);
    } else if (const auto* ring = std::get_if<PolygonWithHole>(&shape_)) {
      fan_ = build_fan(ring->outer, polygon_vertex_centroid(ring->outer), false);
      hole_fan_ = build_fan(ring->hole, polygon_vertex_centroid(ring->hole), false);
    }
    if (!contains_local(star_) || !(boundary_distance_local(star_) > 0.0))
      throw Error(ErrorKind::InvalidCutter, "star point must lie strictly inside the cutter");
    inner_radius_ = boundary_distance_local(star_);
    outer_radius_ = compute_outer_radius();
    symmetry_order_ = compute_symmetry_order();
  }

  static void check_polygon(Polygon& vertices) {
    if (vertices.size() < 3) throw Error(ErrorKind::InvalidCutter, "polygon needs at least 3 vertices");
    for (const auto& v : vertices)
      if (v.dim() != 2 || !v.finite()) throw Error(ErrorKind::InvalidCutter, "polygon vertices must be finite 2-vectors");
    const double a = signed_area(vertices);
    if (a == 0.0) throw Error(ErrorKind::InvalidCutter, "degenerate polygon");
    if (a < 0.0) std::reverse(vertices.begin(), vertices.end());
  }

  static Vec polygon_vertex_centroid(const Polygon& poly) {
    // Only used as a fan apex for area bookkeeping of non-star pieces; the
    // fan is signed so any apex works.
    Vec c = Vec::zero(2);
    for (const auto& v : poly) c += v;
    return c / static_cast<double>(poly.size());
  }

  static std::vector<Triangle> build_fan(const Polygon& poly, const Vec& apex, bool require_star);

  static double box_signed_distance(const Vec& y, const AxisBox& b) noexcept {
    double outside = 0.0, inside = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < y.dim(); ++i) {
      const double d = std::abs(y[i]) - b.half_extents[static_cast<std::size_t>(i)];
      outside += d > 0.0 ? d * d : 0.0;
      inside = std::max(inside, d);
    }
    return outside > 0.0 ? std::sqrt(outside) : inside;
  }

  double compute_outer_radius() const {
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            return norm(star_) + s.radius;
          } else if constexpr (std::is_same_v<S, AxisBox>) {
            double acc = 0.0;
            for (int i = 0; i < dim_; ++i) {
              const double h = s.half_extents[static_cast<std::size_t>(i)];
              const double d = std::abs(star_[i]) + h;
              acc += d * d;
            }
            return std::sqrt(acc);
          } else if constexpr (std::is_same_v<S, Cylinder>) {
            double r2 = 0.0;
            for (int i = 0; i < 3; ++i)
              if (i != s.axis) r2 += star_[i] * star_[i];
            const double radial = std::sqrt(r2) + s.radius;
            const double axial = std::abs(star_[s.axis]) + s.half_height;
            return std::hypot(radial, axial);
          } else {
            double best = 0.0;
            for (const auto& v : outline_) best = std::max(best, distance(v, star_));
            return best;
          }
        },
        shape_);
  }

  int compute_symmetry_order() const {
    if (dim_ != 2) return 1;
    if (std::holds_alternative<Disk>(shape_)) return norm(star_) == 0.0 ? 0 : 1;
    if (outline_.empty() || std::holds_alternative<PolygonWithHole>(shape_)) return 1;
    const std::size_t n = outline_.size();
    for (int k : {4, 3, 2}) {
      if (n % static_cast<std::size_t>(k) != 0) continue;
      const Rotation r = Rotation::planar(kTwoPi / k);
      const double scale = outer_radius_;
      bool match = false;
      for (std::size_t shift = 0; shift < n && !match; ++shift) {
        bool all = true;
        for (std::size_t i = 0; i < n && all; ++i) {
          const Vec rotated = star_ + r.apply(outline_[i] - star_);
          all = distance(rotated, outline_[(i + shift) % n]) <= 1e-12 * scale;
        }
        match = all;
      }
      if (match) return k;
    }
    return 1;
  }

  int dim_;
  CutterShape shape_;
  Vec star_;
  Polygon outline_;
  std::vector<Triangle> fan_;
  std::vector<Triangle> hole_fan_;
  double inner_radius_ = 0.0;
  double outer_radius_ = 0.0;
  int symmetry_order_ = 1;
};

namespace detail {

inline double wrap_angle(double a) noexcept {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

/// Spherical interpolation between planar unit vectors.
inline Vec slerp2(const Vec& a, const Vec& b, double t) {
  const double angle = std::atan2(cross2(a, b), dot(a, b));
  const double phi = std::atan2(a[1], a[0]) + t * angle;
  return {std::cos(phi), std::sin(phi)};
}

inline Vec inward_edge_normal(const Vec& a, const Vec& b) {
  const Vec e = normalized(b - a);
  return {-e[1], e[0]};
}

inline bool ray_segment(const Vec& origin, const Vec& u, const Vec& a, const Vec& b, double& t_out) {
  const Vec e = b - a;
  const double den = cross2(u, e);
  if (den == 0.0) return false;
  const Vec w = a - origin;
  const double t = cross2(w, e) / den;
  const double s = cross2(w, u) / den;
  if (t < 0.0 || s < -1e-12 || s > 1.0 + 1e-12) return false;
  t_out = t;
  return true;
}

}  // namespace detail

inline std::vector<Triangle> CutterSpec::build_fan(const Polygon& poly, const Vec& apex, bool require_star) {
  std::vector<Triangle> fan;
  const std::size_t n = poly.size();
  fan.reserve(n);
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = poly[i];
    const Vec& b = poly[(i + 1) % n];
    const double orient = cross2(a - apex, b - apex);
    if (require_star) {
      const double scale = norm(a - apex) * norm(b - apex);
      if (!(orient > 1e-14 * scale))
        throw Error(ErrorKind::StarViolation,
                    "fan triangle " + std::to_string(i) + " is not positively oriented about the star point");
      turning += std::atan2(orient, dot(a - apex, b - apex));
    }
    fan.push_back({apex, a, b});
  }
  if (require_star && std::abs(turning - kTwoPi) > 1e-9)
    throw Error(ErrorKind::StarViolation, "polygon winds more than once around the star point");
  return fan;
}

/// Star-fan triangulation (p, v_i, v_{i+1}) of a polygonal cutter.
/// Throws StarViolation when a fan triangle is not positively oriented.
inline std::vector<Triangle> star_fan(const CutterSpec& cutter) {
  if (cutter.fan().empty() || !cutter.is_star_shaped())
    throw Error(ErrorKind::Unsupported, "star_fan needs a planar polygonal star-shaped cutter");
  return {cutter.fan().begin(), cutter.fan().end()};
}

/// Fan of an arbitrary polygon about `p`; throws StarViolation if p is not
/// in the polygon's kernel.
inline std::vector<Triangle> star_fan(const Polygon& vertices, const Vec& p) {
  return star_fan(CutterSpec::star_polygon(vertices, p));
}

inline SupportHit CutterSpec::support(const Vec& u_in) const {
  constexpr double kWindow = 1e-3;
  const Vec u = normalized(u_in);
  if (const auto* disk = std::get_if<Disk>(&shape_)) {
    // |p + t u| = R, t > 0.
    const double b = dot(star_, u);
    const double c = norm2(star_) - disk->radius * disk->radius;
    const double t = -b + std::sqrt(b * b - c);
    const Vec m = star_ + u * t;
    return {m, -m / disk->radius};
  }
  if (dim_ == 2 && !outline_.empty()) {
    const Polygon& poly = outline_;
    const std::size_t n = poly.size();
    const double psi = std::atan2(u[1], u[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec& a = poly[i];
      const Vec& b = poly[(i + 1) % n];
      const double phi_a = std::atan2(a[1] - star_[1], a[0] - star_[0]);
      const double phi_b = std::atan2(b[1] - star_[1], b[0] - star_[0]);
      const double span = detail::wrap_angle(phi_b - phi_a);
      const double from_a = detail::wrap_angle(psi - phi_a);
      if (from_a > span) continue;
      const double to_b = span - from_a;
      double t = 0.0;
      Vec m = a;
      if (detail::ray_segment(star_, u, a, b, t)) m = star_ + u * t;
      const Vec n_here = detail::inward_edge_normal(a, b);
      const double w = std::min(kWindow, 0.5 * span);
      if (from_a < w) {
        const Vec n_prev = detail::inward_edge_normal(poly[(i + n - 1) % n], a);
        return {m, detail::slerp2(n_prev, n_here, 0.5 + 0.5 * from_a / w)};
      }
      if (to_b < w) {
        const Vec n_next = detail::inward_edge_normal(b, poly[(i + 2) % n]);
        return {m, detail::slerp2(n_next, n_here, 0.5 + 0.5 * to_b / w)};
      }
      return {m, n_here};
    }
    throw Error(ErrorKind::Domain, "ray from star point missed the polygon boundary");
  }
  // d = 3 box or cylinder: candidate facets ranked by ray distance; facets
  // within a relative window of the nearest one are blended.
  struct Candidate {
    double t;
    Vec normal;
  };
  std::vector<Candidate> cands;
  if (const auto* box = std::get_if<AxisBox>(&shape_)) {
    for (int i = 0; i < dim_; ++i) {
      if (u[i] == 0.0) continue;
      const double sgn = u[i] > 0.0 ? 1.0 : -1.0;
      const double t = (sgn * box->half_extents[static_cast<std::size_t>(i)] - star_[i]) / u[i];
      cands.push_back({t, Vec::unit(dim_, i) * -sgn});
    }
  } else if (const auto* cyl = std::get_if<Cylinder>(&shape_)) {
    const int a = cyl->axis;
    if (u[a] != 0.0) {
      const double sgn = u[a] > 0.0 ? 1.0 : -1.0;
      cands.push_back({(sgn * cyl->half_height - star_[a]) / u[a], Vec::unit(3, a) * -sgn});
    }
    Vec pr = star_, ur = u;
    pr[a] = 0.0;
    ur[a] = 0.0;
    const double qa = norm2(ur);
    if (qa > 0.0) {
      const double qb = 2.0 * dot(pr, ur);
      const double qc = norm2(pr) - cyl->radius * cyl->radius;
      const double t = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
      const Vec hit = pr + ur * t;
      cands.push_back({t, -hit / cyl->radius});
    }
  }
  if (cands.empty()) throw Error(ErrorKind::Domain, "support ray has no boundary hit");
  double tmin = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) tmin = std::min(tmin, c.t);
  Vec blended = Vec::zero(dim_);
  for (const auto& c : cands) {
    const double w = std::max(0.0, 1.0 - (c.t / tmin - 1.0) / kWindow);
    blended += c.normal * w;
  }
  return {star_ + u * tmin, normalized(blended)};
}

// ---------------------------------------------------------------------------
// Placements
// ---------------------------------------------------------------------------

/// Scaled, translated, rotated (optionally reflected) copy C(c, s) with the
/// star point mapped to the centre: x = c + s·R·F·(y − p), F = flip of x_0.
struct Body {
  Vec center;
  double scale = 1.0;
  Rotation rotation;
  bool reflected = false;

  bool operator==(const Body&) const = default;
};

/// Degenerate limit copy {x : <x, n> >= offset}.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;

  bool operator==(const HalfSpace&) const = default;
};

class Placement {
 public:
  static Placement body(Vec center, double scale, Rotation rotation, bool reflected = false) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw Error(ErrorKind::InvalidPlacement, "scale must be positive and finite");
    if (rotation.dim() != center.dim())
      throw Error(ErrorKind::DimensionMismatch, "rotation and centre dimensions differ");
    if (!center.finite()) throw Error(ErrorKind::InvalidPlacement, "centre must be finite");
    return Placement(Body{std::move(center), scale, std::move(rotation), reflected});
  }
  static Placement body(Vec center, double scale) {
    const int d = center.dim();
    return body(std::move(center), scale, Rotation::identity(d));
  }
  static Placement half_space(Vec normal, double offset) {
    const double n = norm(normal);
    if (std::abs(n - 1.0) > 1e-9)
      throw Error(ErrorKind::InvalidPlacement, "half-space normal must be a unit vector");
    return Placement(HalfSpace{std::move(normal), offset});
  }

  bool is_body() const noexcept { return std::holds_alternative<Body>(form_); }
  bool is_half_space() const noexcept { return std::holds_alternative<HalfSpace>(form_); }
  const Body& as_body() const { return std::get<Body>(form_); }
  const HalfSpace& as_half_space() const { return std::get<HalfSpace>(form_); }
  int dim() const noexcept {
    return is_body() ? std::get<Body>(form_).center.dim() : std::get<HalfSpace>(form_).normal.dim();
  }

  bool operator==(const Placement&) const = default;

 private:
  explicit Placement(std::variant<Body, HalfSpace> f) : form_(std::move(f)) {}
  std::variant<Body, HalfSpace> form_;
};

inline Vec reflect_first(Vec y, bool reflected) noexcept {
  if (reflected) y[0] = -y[0];
  return y;
}

/// World point -> cutter-local point for a body placement.
inline Vec to_local(const CutterSpec& cutter, const Body& b, const Vec& x) {
  return cutter.star_point() + reflect_first(b.rotation.apply_inverse(x - b.center), b.reflected) / b.scale;
}

/// Cutter-local point -> world point for a body placement.
inline Vec to_world(const CutterSpec& cutter, const Body& b, const Vec& y) {
  return b.center + b.rotation.apply(reflect_first(y - cutter.star_point(), b.reflected)) * b.scale;
}

/// Local direction -> world direction (no scaling).
inline Vec direction_to_world(const Body& b, const Vec& u) {
  return b.rotation.apply(reflect_first(u, b.reflected));
}

/// Membership of x in the placed copy. Half-spaces test <x, n> >= offset.
inline bool contains(const CutterSpec& cutter, const Placement& placement, const Vec& x) {
  if (cutter.dim() != placement.dim() || x.dim() != cutter.dim())
    throw Error(ErrorKind::DimensionMismatch, "contains: cutter, placement and point dimensions differ");
  if (placement.is_half_space()) {
    const auto& h = placement.as_half_space();
    return dot(x, h.normal) >= h.offset;
  }
  return cutter.contains_local(to_local(cutter, placement.as_body(), x));
}

}  // namespace ccbisect
