#pragma once

/// @file io.hpp
/// @brief JSON forms of cutters, placements and solve results.

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccbisect/solve.hpp"
#include "json.hpp"

namespace ccbisect {

using json = nlohmann::json;

inline constexpr const char* kSchema = "ccbisect/1";

namespace detail {

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.dim(); ++i) a.push_back(v[i]);
  return a;
}

inline Polygon polygon_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, what + " must be an array of points");
  Polygon p;
  for (const auto& v : j) {
    Vec x = json_vec(v, what);
    if (x.dim() != 2) throw Error(ErrorKind::DimensionMismatch, what + " points must be planar");
    p.push_back(std::move(x));
  }
  return p;
}

inline json polygon_to_json(const Polygon& p) {
  json a = json::array();
  for (const auto& v : p) a.push_back(vec_json(v));
  return a;
}

inline double positive_number(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw Error(ErrorKind::Parse, what + " needs '" + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw Error(ErrorKind::Parse, what + ": '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

inline std::optional<Vec> optional_star(const json& j) {
  if (!j.contains("star_point")) return std::nullopt;
  return json_vec(j.at("star_point"), "star_point");
}

}  // namespace detail

/// Cutter JSON: {"type": "disk", "dim": 2, "radius": 1},
/// {"type": "square", "half_width": 1}, {"type": "axis_box",
/// "half_extents": [..], "axis": i}, {"type": "cylinder", "radius": r,
/// "half_height": h, "axis": 2}, {"type": "star_polygon", "vertices":
/// [[x, y], ...], "star_point": [x, y], "smooth": false} and
/// {"type": "polygon_with_hole", "outer": [...], "hole": [...],
/// "star_point": [x, y]}. "star_point" is optional except for polygons.
inline CutterSpec cutter_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw Error(ErrorKind::Parse, "cutter must be an object with a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "disk") {
    const int dim = j.value("dim", 2);
    return CutterSpec::disk(dim, detail::positive_number(j, "radius", "disk"), detail::optional_star(j));
  }
  if (type == "square") return CutterSpec::square(j.value("half_width", 1.0));
  if (type == "axis_box") {
    if (!j.contains("half_extents")) throw Error(ErrorKind::Parse, "axis_box needs 'half_extents'");
    const auto h = j.at("half_extents").get<std::vector<double>>();
    return CutterSpec::axis_box(h, j.value("axis", -1), detail::optional_star(j));
  }
  if (type == "cylinder") {
    return CutterSpec::cylinder(detail::positive_number(j, "radius", "cylinder"),
                                detail::positive_number(j, "half_height", "cylinder"), j.value("axis", 2),
                                detail::optional_star(j));
  }
  if (type == "star_polygon") {
    if (!j.contains("vertices") || !j.contains("star_point"))
      throw Error(ErrorKind::Parse, "star_polygon needs 'vertices' and 'star_point'");
    return CutterSpec::star_polygon(detail::polygon_json(j.at("vertices"), "vertices"),
                                    detail::json_vec(j.at("star_point"), "star_point"), j.value("smooth", false));
  }
  if (type == "polygon_with_hole") {
    if (!j.contains("outer") || !j.contains("hole") || !j.contains("star_point"))
      throw Error(ErrorKind::Parse, "polygon_with_hole needs 'outer', 'hole' and 'star_point'");
    return CutterSpec::polygon_with_hole(detail::polygon_json(j.at("outer"), "outer"),
                                         detail::polygon_json(j.at("hole"), "hole"),
                                         detail::json_vec(j.at("star_point"), "star_point"));
  }
  throw Error(ErrorKind::Parse, "unknown cutter type '" + type + "'");
}

inline json cutter_to_json(const CutterSpec& cutter) {
  return std::visit(
      [&](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        json j;
        if constexpr (std::is_same_v<S, Disk>) {
          j = {{"type", "disk"}, {"dim", cutter.dim()}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<S, AxisBox>) {
          json h = json::array();
          for (int i = 0; i < cutter.dim(); ++i) h.push_back(s.half_extents[static_cast<std::size_t>(i)]);
          j = {{"type", "axis_box"}, {"half_extents", h}, {"axis", s.axis}};
        } else if constexpr (std::is_same_v<S, Cylinder>) {
          j = {{"type", "cylinder"}, {"radius", s.radius}, {"half_height", s.half_height}, {"axis", s.axis}};
        } else if constexpr (std::is_same_v<S, StarPolygon>) {
          j = {{"type", "star_polygon"}, {"vertices", detail::polygon_to_json(s.vertices)}, {"smooth", s.smooth}};
        } else {
          j = {{"type", "polygon_with_hole"},
               {"outer", detail::polygon_to_json(s.outer)},
               {"hole", detail::polygon_to_json(s.hole)}};
        }
        j["star_point"] = detail::vec_json(cutter.star_point());
        return j;
      },
      cutter.shape());
}

/// {"form": "body", "center": [...], "scale": s, "rotation": θ (d = 2) or
/// row-major 3x3 matrix (d = 3), "reflected": b} or
/// {"form": "half_space", "normal": [...], "offset": b}.
inline json placement_to_json(const Placement& p) {
  if (p.is_half_space()) {
    const HalfSpace& h = p.as_half_space();
    return {{"form", "half_space"}, {"normal", detail::vec_json(h.normal)}, {"offset", h.offset}};
  }
  const Body& b = p.as_body();
  json rot = b.center.dim() == 2 ? json(b.rotation.angle()) : json(b.rotation.matrix());
  return {{"form", "body"},
          {"center", detail::vec_json(b.center)},
          {"scale", b.scale},
          {"rotation", rot},
          {"reflected", b.reflected}};
}

inline Placement placement_from_json(const json& j) {
  if (!j.is_object() || !j.contains("form")) throw Error(ErrorKind::Parse, "placement needs a 'form'");
  const std::string form = j.at("form").get<std::string>();
  if (form == "half_space") {
    return Placement::half_space(detail::json_vec(j.at("normal"), "normal"),
                                 detail::positive_number(j, "offset", "half_space"));
  }
  if (form != "body") throw Error(ErrorKind::Parse, "unknown placement form '" + form + "'");
  Vec c = detail::json_vec(j.at("center"), "center");
  const double s = detail::positive_number(j, "scale", "body");
  const int d = c.dim();
  Rotation r = Rotation::identity(d);
  if (j.contains("rotation")) {
    const json& rj = j.at("rotation");
    if (d == 2) {
      if (!rj.is_number()) throw Error(ErrorKind::Parse, "planar rotation must be an angle");
      r = Rotation::planar(rj.get<double>());
    } else {
      r = Rotation::from_matrix(rj.get<std::array<double, 9>>());
    }
  }
  return Placement::body(std::move(c), s, std::move(r), j.value("reflected", false));
}

inline json chart_point_to_json(const ChartPoint& point) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, HomothetyPoint>) {
          return {{"chart", "homothety"}, {"v", detail::vec_json(p.v)}};
        } else if constexpr (std::is_same_v<P, AxisPoint>) {
          return {{"chart", "axis"}, {"u", detail::vec_json(p.u)}, {"alpha", p.alpha}};
        } else if constexpr (std::is_same_v<P, SimilarityPoint>) {
          json rot = p.v.dim() == 2 ? json(p.rotation.angle()) : json(p.rotation.matrix());
          return {{"chart", "similarity"}, {"rotation", rot}, {"reflected", p.reflected}, {"v", detail::vec_json(p.v)}};
        } else {
          json base = {{"rotation", p.base.v.dim() == 2 ? json(p.base.rotation.angle()) : json(p.base.rotation.matrix())},
                       {"reflected", p.base.reflected},
                       {"v", detail::vec_json(p.base.v)}};
          return {{"chart", "branch"}, {"base", base}, {"root", p.root}};
        }
      },
      point);
}

inline json report_to_json(const SolveReport& r) {
  json certs = json::array();
  for (const auto& c : r.certificates)
    certs.push_back({{"box", {c.box.x0, c.box.y0, c.box.x1, c.box.y1}}, {"winding", c.winding}, {"depth", c.depth}});
  return {{"success", r.success},
          {"method", r.method},
          {"residual_norm", r.residual_norm},
          {"evaluations", r.evaluations},
          {"depth", r.depth},
          {"certificates", certs},
          {"note", r.note}};
}

/// Masses of every measure inside and outside the placed copy, computed
/// afresh from the placement.
inline json mass_table(const MeasureSet& measures, const CutterSpec& cutter, const Placement& placement) {
  const PlacedCutter placed(cutter, placement);
  json rows = json::array();
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const double t = measures[i].total();
    const double inside = mass_in(measures[i], placed);
    rows.push_back({{"index", i},
                    {"total", t},
                    {"inside", inside},
                    {"outside", t - inside},
                    {"residual", (2.0 * inside - t) / t}});
  }
  return rows;
}

struct RecordOptions {
  double tol = 1e-6;
  int max_depth = 12;
  std::uint64_t seed = 1;
  std::optional<double> kernel_radius;
  /// Margin of the compactified scale coordinate reported for bodies.
  double delta = 1.0 / 16.0;
  bool timing = true;
};

/// Result record; residuals are recomputed here from the placement rather
/// than copied from the solver.
inline json result_record(const MeasureSet& measures, const CutterSpec& cutter, const BisectionResult& result,
                          const RecordOptions& opt) {
  json masses = mass_table(measures, cutter, result.placement);
  double worst = 0.0;
  json residuals = json::array();
  for (std::size_t i = 1; i < masses.size(); ++i) {
    const double r = masses[i].at("residual").get<double>();
    residuals.push_back(r);
    worst = std::max(worst, std::abs(r));
  }
  json config = {{"mode", to_string(result.mode)}, {"tol", opt.tol}, {"max_depth", opt.max_depth}, {"seed", opt.seed}};
  if (opt.kernel_radius) config["kernel_radius"] = *opt.kernel_radius;
  config["delta"] = opt.delta;
  json rec = {{"schema", kSchema},
              {"status", "solved"},
              {"dimension", measures.dim()},
              {"config", config},
              {"cutter", cutter_to_json(cutter)},
              {"placement", placement_to_json(result.placement)},
              {"chart_point", chart_point_to_json(result.chart_point)},
              {"chart_frame", {{"origin", detail::vec_json(result.frame.origin)}, {"unit", result.frame.unit}}},
              {"masses", masses},
              {"residuals", residuals},
              {"max_residual", worst},
              {"solver", report_to_json(result.report)}};
  if (result.placement.is_body())
    rec["scale_coordinate"] = CompactifiedScale(opt.delta).phi(result.placement.as_body().scale);
  if (opt.timing) rec["timing"] = {{"seconds", result.seconds}};
  return rec;
}

inline json failure_record(const SolveFailure& failure, const MeasureSet& measures, const CutterSpec& cutter,
                           Mode mode) {
  json rec = {{"schema", kSchema},
              {"status", "no_zero_found"},
              {"dimension", measures.dim()},
              {"mode", to_string(mode)},
              {"message", failure.what()},
              {"solver", report_to_json(failure.report())}};
  if (failure.best_placement()) {
    rec["best_placement"] = placement_to_json(*failure.best_placement());
    rec["best_masses"] = mass_table(measures, cutter, *failure.best_placement());
  }
  return rec;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

inline CutterSpec load_cutter(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return cutter_from_json(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.message(), e.row());
  }
}

/// Writes measures as CSV (measure_id,x,y[,z],weight,radius) with
/// round-trip precision.
inline void write_measures_csv(std::ostream& out, const MeasureSet& measures) {
  const int d = measures.dim();
  out << "measure_id,x,y" << (d == 3 ? ",z" : "") << ",weight,radius\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < measures.size(); ++i)
    for (const auto& k : measures[i].kernels()) {
      out << i;
      for (int a = 0; a < d; ++a) out << ',' << num(k.center[a]);
      out << ',' << num(k.weight) << ',' << num(k.radius) << '\n';
    }
}

}  // namespace ccbisect
