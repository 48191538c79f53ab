#pragma once

/// @file measures.hpp
/// @brief Absolutely continuous mass distributions (kernel mixtures and
/// raster grids), their ingestion, and the kernel overlap fraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccbisect/geometry.hpp"

namespace ccbisect {

/// Uniform density on the axis-aligned square/cube of half-width `radius`
/// around `center`, carrying total mass `weight`.
struct Kernel {
  Vec center;
  double weight = 1.0;
  double radius = 1e-3;
};

/// Piecewise-constant density. `origin` is the lower corner of cell 0;
/// `values` are densities in row-major order where array axis k runs along
/// coordinate k.
struct RasterGrid {
  Vec origin;
  double cell = 1.0;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

class Measure {
 public:
  static Measure from_kernels(std::vector<Kernel> kernels) {
    if (kernels.empty()) throw Error(ErrorKind::Parse, "measure has no kernels");
    const int d = kernels.front().center.dim();
    require_dimension(d);
    Measure m;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      const auto& k = kernels[i];
      if (k.center.dim() != d) throw Error(ErrorKind::DimensionMismatch, "kernel dimensions differ");
      if (!k.center.finite()) throw Error(ErrorKind::Parse, "kernel centre must be finite");
      if (!(k.weight > 0.0) || !std::isfinite(k.weight))
        throw Error(ErrorKind::NonPositiveWeight, "kernel " + std::to_string(i) + " has non-positive weight");
      if (!(k.radius > 0.0) || !std::isfinite(k.radius))
        throw Error(ErrorKind::NonPositiveRadius, "kernel " + std::to_string(i) + " has non-positive radius");
    }
    m.kernels_ = std::move(kernels);
    m.finish();
    return m;
  }

  static Measure from_raster(RasterGrid grid) {
    const int d = grid.origin.dim();
    require_dimension(d);
    if (static_cast<int>(grid.shape.size()) != d)
      throw Error(ErrorKind::DimensionMismatch, "raster shape rank differs from origin dimension");
    if (!(grid.cell > 0.0)) throw Error(ErrorKind::Parse, "raster cell size must be positive");
    std::size_t count = 1;
    for (auto n : grid.shape) count *= n;
    if (count != grid.values.size())
      throw Error(ErrorKind::Parse, "raster has " + std::to_string(grid.values.size()) + " values, shape needs " +
                                        std::to_string(count));
    const double cell_volume = std::pow(grid.cell, d);
    std::vector<Kernel> cells;
    for (std::size_t flat = 0; flat < count; ++flat) {
      const double v = grid.values[flat];
      if (v < 0.0 || !std::isfinite(v)) throw Error(ErrorKind::Parse, "raster values must be finite and >= 0");
      if (v == 0.0) continue;
      Vec c = grid.origin;
      std::size_t rest = flat;
      for (int axis = d - 1; axis >= 0; --axis) {
        const std::size_t n = grid.shape[static_cast<std::size_t>(axis)];
        c[axis] += (static_cast<double>(rest % n) + 0.5) * grid.cell;
        rest /= n;
      }
      cells.push_back({c, v * cell_volume, 0.5 * grid.cell});
    }
    if (cells.empty()) throw Error(ErrorKind::Parse, "raster carries no mass");
    Measure m;
    m.kernels_ = std::move(cells);
    m.raster_ = std::move(grid);
    m.finish();
    return m;
  }

  int dim() const noexcept { return kernels_.front().center.dim(); }
  double total() const noexcept { return total_; }
  std::span<const Kernel> kernels() const noexcept { return kernels_; }
  bool is_raster() const noexcept { return raster_.has_value(); }
  const std::optional<RasterGrid>& raster() const noexcept { return raster_; }
  /// Bounding box of the support including kernel extents.
  const AxisAlignedBox& support() const noexcept { return support_; }

 private:
  Measure() = default;

  void finish() {
    total_ = 0.0;
    const int d = kernels_.front().center.dim();
    support_ = {kernels_.front().center, kernels_.front().center};
    for (const auto& k : kernels_) {
      total_ += k.weight;
      Vec ext = Vec::zero(d);
      for (int i = 0; i < d; ++i) ext[i] = k.radius;
      support_.expand(k.center - ext);
      support_.expand(k.center + ext);
    }
    if (!(total_ > 0.0) || !std::isfinite(total_)) throw Error(ErrorKind::Parse, "measure total must be finite and positive");
  }

  std::vector<Kernel> kernels_;
  double total_ = 0.0;
  std::optional<RasterGrid> raster_;
  AxisAlignedBox support_;
};

/// μ_0 … μ_d in R^d; μ_0 pins the scale.
class MeasureSet {
 public:
  static MeasureSet create(std::vector<Measure> measures) {
    if (measures.empty()) throw Error(ErrorKind::TooFewMeasures, "no measures");
    const int d = measures.front().dim();
    for (const auto& m : measures)
      if (m.dim() != d) throw Error(ErrorKind::DimensionMismatch, "measures have different dimensions");
    const auto need = static_cast<std::size_t>(d + 1);
    if (measures.size() < need)
      throw Error(ErrorKind::TooFewMeasures, "need " + std::to_string(need) + " measures in d = " +
                                                 std::to_string(d) + ", got " + std::to_string(measures.size()));
    if (measures.size() > need)
      throw Error(ErrorKind::TooManyMeasures, "need exactly " + std::to_string(need) + " measures, got " +
                                                  std::to_string(measures.size()));
    MeasureSet set;
    set.dim_ = d;
    set.support_ = measures.front().support();
    for (const auto& m : measures) {
      set.support_.expand(m.support().lo);
      set.support_.expand(m.support().hi);
    }
    set.measures_ = std::move(measures);
    return set;
  }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return measures_.size(); }
  const Measure& operator[](std::size_t i) const { return measures_.at(i); }
  const Measure& pinning() const { return measures_.front(); }
  std::span<const Measure> all() const noexcept { return measures_; }
  const AxisAlignedBox& support() const noexcept { return support_; }
  double diameter() const { return support_.diagonal(); }

 private:
  std::vector<Measure> measures_;
  AxisAlignedBox support_;
  int dim_ = 2;
};

// ---------------------------------------------------------------------------
// Overlap of kernels with placed cutters
// ---------------------------------------------------------------------------

/// Fraction of the axis box (centre, half-width r) with <x, n> >= b.
inline double half_space_fraction(const Vec& center, double r, const Vec& n, double b) {
  const int d = center.dim();
  double reach = 0.0;
  for (int i = 0; i < d; ++i) reach += std::abs(n[i]) * r;
  const double sd = dot(center, n) - b;
  if (sd >= reach) return 1.0;
  if (sd <= -reach) return 0.0;
  if (d == 2) {
    const Polygon sq{center + Vec(-r, -r), center + Vec(r, -r), center + Vec(r, r), center + Vec(-r, r)};
    return std::clamp(polygon_area(clip_halfplane(sq, n, b)) / (4.0 * r * r), 0.0, 1.0);
  }
  ConvexPolyhedron cube = ConvexPolyhedron::axis_cube(center, r);
  cube.clip(n, b);
  return std::clamp(cube.volume() / (8.0 * r * r * r), 0.0, 1.0);
}

/// A cutter together with a placement, with the transforms needed to
/// evaluate kernel overlaps precomputed.
class PlacedCutter {
 public:
  PlacedCutter(const CutterSpec& cutter, const Placement& placement) : cutter_(&cutter), placement_(placement) {
    if (cutter.dim() != placement.dim())
      throw Error(ErrorKind::DimensionMismatch, "cutter and placement dimensions differ");
    dim_ = cutter.dim();
    sqrt_dim_ = std::sqrt(static_cast<double>(dim_));
    if (placement.is_body()) {
      const Body& b = placement.as_body();
      for (int i = 0; i < dim_; ++i)
        local_axes_[static_cast<std::size_t>(i)] =
            reflect_first(b.rotation.apply_inverse(Vec::unit(dim_, i)), b.reflected);
      outer_world_ = b.scale * cutter.outer_radius();
      inner_world_ = b.scale * cutter.inner_radius();
    }
  }

  const CutterSpec& cutter() const noexcept { return *cutter_; }
  const Placement& placement() const noexcept { return placement_; }

  bool contains(const Vec& x) const { return ccbisect::contains(*cutter_, placement_, x); }

  /// Fraction of the kernel box (centre, half-width r) inside the copy.
  double fraction(const Vec& center, double r) const {
    if (placement_.is_half_space()) return half_space_fraction(center, r);
    const Body& b = placement_.as_body();
    const double reach = r * sqrt_dim_;
    const double dc = distance(center, b.center);
    if (dc > outer_world_ + reach) return 0.0;
    if (dc + reach < inner_world_) return 1.0;
    const Vec y = to_local(*cutter_, b, center);
    const double rl = r / b.scale;
    const double bd = cutter_->boundary_distance_local(y);
    if (bd > rl * sqrt_dim_ * (1.0 + 1e-12)) return cutter_->contains_local(y) ? 1.0 : 0.0;
    return dim_ == 2 ? exact_fraction_2d(y, rl) : exact_fraction_3d(y, rl);
  }

  /// Quick classification of a whole support box: 0 = disjoint, 1 = covered,
  /// -1 = undecided.
  int classify(const AxisAlignedBox& box) const {
    if (placement_.is_half_space()) return -1;
    const Body& b = placement_.as_body();
    if (box.distance_to(b.center) > outer_world_) return 0;
    if (box.farthest_distance(b.center) < inner_world_) return 1;
    return -1;
  }

 private:
  double half_space_fraction(const Vec& center, double r) const {
    const HalfSpace& h = placement_.as_half_space();
    return ccbisect::half_space_fraction(center, r, h.normal, h.offset);
  }

  double exact_fraction_2d(const Vec& y, double rl) const {
    const Vec a0 = local_axes_[0] * rl;
    const Vec a1 = local_axes_[1] * rl;
    Polygon quad{y - a0 - a1, y + a0 - a1, y + a0 + a1, y - a0 + a1};
    if (signed_area(quad) < 0.0) std::reverse(quad.begin(), quad.end());
    const double full = 4.0 * rl * rl;
    const double inside = std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Disk>) {
            return disk_polygon_area(Vec::zero(2), s.radius, quad);
          } else if constexpr (std::is_same_v<S, AxisBox>) {
            const AxisAlignedBox box{Vec(-s.half_extents[0], -s.half_extents[1]),
                                     Vec(s.half_extents[0], s.half_extents[1])};
            return clip_convex(quad, box);
          } else if constexpr (std::is_same_v<S, StarPolygon>) {
            return fan_overlap(quad, cutter_->fan());
          } else if constexpr (std::is_same_v<S, PolygonWithHole>) {
            return fan_overlap(quad, cutter_->fan()) - fan_overlap(quad, cutter_->hole_fan());
          } else {
            return 0.0;
          }
        },
        cutter_->shape());
    return std::clamp(inside / full, 0.0, 1.0);
  }

  static double fan_overlap(const Polygon& quad, std::span<const Triangle> fan) {
    double lo[2] = {quad[0][0], quad[0][1]}, hi[2] = {quad[0][0], quad[0][1]};
    for (const auto& q : quad)
      for (int i = 0; i < 2; ++i) {
        lo[i] = std::min(lo[i], q[i]);
        hi[i] = std::max(hi[i], q[i]);
      }
    double acc = 0.0;
    for (const auto& tri : fan) {
      bool disjoint = false;
      for (int i = 0; i < 2 && !disjoint; ++i) {
        const double tlo = std::min({tri[0][i], tri[1][i], tri[2][i]});
        const double thi = std::max({tri[0][i], tri[1][i], tri[2][i]});
        disjoint = thi < lo[i] || tlo > hi[i];
      }
      if (disjoint) continue;
      const double orient = cross2(tri[1] - tri[0], tri[2] - tri[0]);
      if (orient == 0.0) continue;
      const std::array<Vec, 3> ccw = orient > 0.0 ? tri : Triangle{tri[0], tri[2], tri[1]};
      const double a = polygon_area(clip_convex_polygons(quad, ccw));
      acc += orient > 0.0 ? a : -a;
    }
    return acc;
  }

  double exact_fraction_3d(const Vec& y, double rl) const {
    ConvexPolyhedron cube =
        ConvexPolyhedron::parallelepiped(y, local_axes_[0] * rl, local_axes_[1] * rl, local_axes_[2] * rl);
    const double full = 8.0 * rl * rl * rl;
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, AxisBox>) {
            for (int i = 0; i < 3; ++i) {
              const double h = s.half_extents[static_cast<std::size_t>(i)];
              cube.clip(Vec::unit(3, i), -h);
              cube.clip(-Vec::unit(3, i), -h);
            }
          } else if constexpr (std::is_same_v<S, Disk>) {
            // Tangent plane at the nearest boundary point; kernels are small
            // relative to the curvature radius.
            const double ny = norm(y);
            const Vec q = ny > 0.0 ? y / ny : Vec(1, 0, 0);
            cube.clip(-q, -s.radius);
          } else if constexpr (std::is_same_v<S, Cylinder>) {
            const Vec e = Vec::unit(3, s.axis);
            cube.clip(e, -s.half_height);
            cube.clip(-e, -s.half_height);
            Vec radial = y;
            radial[s.axis] = 0.0;
            const double nr = norm(radial);
            const Vec q = nr > 0.0 ? radial / nr : Vec::unit(3, (s.axis + 1) % 3);
            cube.clip(-q, -s.radius);
          }
        },
        cutter_->shape());
    return std::clamp(cube.volume() / full, 0.0, 1.0);
  }

  const CutterSpec* cutter_;
  Placement placement_;
  int dim_ = 2;
  double sqrt_dim_ = std::sqrt(2.0);
  std::array<Vec, 3> local_axes_{};
  double outer_world_ = 0.0;
  double inner_world_ = 0.0;
};

/// area(kernel ∩ placed cutter) / area(kernel). Planar overlaps are exact up
/// to rounding; in d = 3 curved boundaries use the tangent plane at the
/// kernel's nearest boundary point.
inline double kernel_mass_fraction(const Kernel& kernel, const CutterSpec& cutter, const Placement& placement) {
  if (kernel.center.dim() != cutter.dim())
    throw Error(ErrorKind::DimensionMismatch, "kernel and cutter dimensions differ");
  return PlacedCutter(cutter, placement).fraction(kernel.center, kernel.radius);
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

enum class MeasureFormat { Csv, Json };

struct LoadOptions {
  /// Kernel radius for rows without a radius column; default is 1e-3 times
  /// the diagonal of the point bounding box.
  std::optional<double> default_radius;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline double parse_number(const std::string& field, std::size_t row, const std::string& column,
                           const std::string& source) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse,
                source + ": row " + std::to_string(row) + ": column '" + column + "' is not a number: '" + field + "'",
                row);
  }
}

inline double default_radius_for(const std::vector<Vec>& points) {
  AxisAlignedBox box{points.front(), points.front()};
  for (const auto& p : points) box.expand(p);
  const double diam = box.diagonal();
  return diam > 0.0 ? 1e-3 * diam : 1e-3;
}

}  // namespace detail

/// CSV with header measure_id,x,y[,z],weight[,radius] (any column order).
inline MeasureSet parse_measures_csv(std::istream& in, const LoadOptions& options = {},
                                     const std::string& source = "<csv>") {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, source + ": empty file", 1);
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"measure_id", "x", "y", "weight"})
    if (!col.contains(name))
      throw Error(ErrorKind::MissingColumn, source + ": row 1: missing column '" + std::string(name) + "'", 1);
  const int dim = col.contains("z") ? 3 : 2;
  const bool has_radius = col.contains("radius");

  struct Row {
    long id;
    Vec center;
    double weight;
    std::optional<double> radius;
  };
  std::vector<Row> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw Error(ErrorKind::Parse, source + ": row " + std::to_string(row_no) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()),
                  row_no);
    auto num = [&](const char* name) { return detail::parse_number(f[col.at(name)], row_no, name, source); };
    const double id_value = num("measure_id");
    if (id_value != std::floor(id_value))
      throw Error(ErrorKind::Parse, source + ": row " + std::to_string(row_no) + ": measure_id must be an integer",
                  row_no);
    Row r{static_cast<long>(id_value), Vec(dim), num("weight"), std::nullopt};
    r.center[0] = num("x");
    r.center[1] = num("y");
    if (dim == 3) r.center[2] = num("z");
    if (!(r.weight > 0.0))
      throw Error(ErrorKind::NonPositiveWeight, source + ": row " + std::to_string(row_no) + ": weight must be > 0",
                  row_no);
    if (has_radius && !f[col.at("radius")].empty()) {
      r.radius = num("radius");
      if (!(*r.radius > 0.0))
        throw Error(ErrorKind::NonPositiveRadius,
                    source + ": row " + std::to_string(row_no) + ": radius must be > 0", row_no);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorKind::TooFewMeasures, source + ": no data rows");

  double fallback = 0.0;
  if (options.default_radius) {
    fallback = *options.default_radius;
  } else {
    std::vector<Vec> pts;
    for (const auto& r : rows) pts.push_back(r.center);
    fallback = detail::default_radius_for(pts);
  }
  std::map<long, std::vector<Kernel>> groups;
  for (const auto& r : rows) groups[r.id].push_back({r.center, r.weight, r.radius.value_or(fallback)});
  const auto need = static_cast<std::size_t>(dim + 1);
  if (groups.size() < need)
    throw Error(ErrorKind::TooFewMeasures, source + ": found " + std::to_string(groups.size()) +
                                               " distinct measure ids, need " + std::to_string(need) +
                                               " in d = " + std::to_string(dim));
  std::vector<Measure> measures;
  for (auto& [id, kernels] : groups) measures.push_back(Measure::from_kernels(std::move(kernels)));
  return MeasureSet::create(std::move(measures));
}

namespace detail {

inline Vec json_vec(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, what + " must be an array of numbers");
  std::vector<double> xs;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorKind::Parse, what + " must be an array of numbers");
    xs.push_back(x.get<double>());
  }
  if (xs.size() != 2 && xs.size() != 3)
    throw Error(ErrorKind::DimensionMismatch, what + " must have 2 or 3 coordinates");
  return Vec::from_span(xs);
}

}  // namespace detail

/// Parses one measure object: either a raster
/// {"origin":[...],"cell":h,"shape":[...],"values":[...]} or
/// {"kernels":[{"center":[...],"weight":w,"radius":r}, ...]}.
inline Measure measure_from_json(const nlohmann::json& j, std::optional<double> default_radius = std::nullopt) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "measure must be a JSON object");
  if (j.contains("origin")) {
    RasterGrid g;
    g.origin = detail::json_vec(j.at("origin"), "raster origin");
    if (!j.contains("cell") || !j.contains("shape") || !j.contains("values"))
      throw Error(ErrorKind::MissingColumn, "raster needs origin, cell, shape and values");
    g.cell = j.at("cell").get<double>();
    g.shape = j.at("shape").get<std::vector<std::size_t>>();
    g.values = j.at("values").get<std::vector<double>>();
    return Measure::from_raster(std::move(g));
  }
  if (!j.contains("kernels")) throw Error(ErrorKind::MissingColumn, "measure needs 'kernels' or raster fields");
  std::vector<Vec> pts;
  for (const auto& k : j.at("kernels")) pts.push_back(detail::json_vec(k.at("center"), "kernel center"));
  if (pts.empty()) throw Error(ErrorKind::Parse, "measure has no kernels");
  const double fallback = default_radius.value_or(detail::default_radius_for(pts));
  std::vector<Kernel> kernels;
  std::size_t i = 0;
  for (const auto& k : j.at("kernels")) {
    if (!k.contains("weight")) throw Error(ErrorKind::MissingColumn, "kernel " + std::to_string(i) + " has no weight");
    kernels.push_back({pts[i], k.at("weight").get<double>(), k.value("radius", fallback)});
    ++i;
  }
  return Measure::from_kernels(std::move(kernels));
}

inline MeasureSet parse_measures_json(const nlohmann::json& j, const LoadOptions& options = {}) {
  const nlohmann::json& list = j.is_array() ? j : j.at("measures");
  std::vector<Measure> measures;
  for (const auto& m : list) measures.push_back(measure_from_json(m, options.default_radius));
  return MeasureSet::create(std::move(measures));
}

inline MeasureSet load_measures(const std::filesystem::path& path, MeasureFormat format,
                                const LoadOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  if (format == MeasureFormat::Csv) return parse_measures_csv(in, options, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  try {
    return parse_measures_json(j, options);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.message(), e.row());
  }
}

/// Picks the format from the file extension (.json, otherwise CSV).
inline MeasureSet load_measures(const std::filesystem::path& path, const LoadOptions& options = {}) {
  return load_measures(path, path.extension() == ".json" ? MeasureFormat::Json : MeasureFormat::Csv, options);
}

}  // namespace ccbisect
