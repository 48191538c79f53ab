#pragma once

/// @file cli.hpp
/// @brief The commands behind the `ccbisect` executable.
///
/// Exit codes: 0 success, 1 input/output or schema error, 2 no zero found
/// (or an inconclusive check), 3 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ccbisect/instances.hpp"
#include "ccbisect/io.hpp"
#include "ccbisect/svg.hpp"

namespace ccbisect::cli {

inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kNoZero = 2;
inline constexpr int kViolation = 3;

struct SolveArgs {
  std::filesystem::path cutter;
  std::filesystem::path measures;
  std::string mode = "homothety";
  double tol = 1e-6;
  int max_depth = 12;
  std::uint64_t seed = 1;
  std::optional<double> kernel_radius;
  double delta = 1.0 / 16.0;
  std::optional<std::size_t> branch;
  std::optional<std::filesystem::path> out;
  bool timing = true;
};

struct VerifyArgs {
  std::filesystem::path result;
  std::filesystem::path measures;
  /// Defaults to the cutter stored in the result.
  std::optional<std::filesystem::path> cutter;
  /// Defaults to the tolerance stored in the result.
  std::optional<double> tol;
  std::optional<double> kernel_radius;
};

struct OracleArgs {
  std::filesystem::path cutter;
  std::filesystem::path measures;
  std::string mode = "homothety";
  int n_c = 64;
  int n_theta = 1;
  double margin = 2.0;
  bool reflections = false;
  std::optional<double> kernel_radius;
  std::optional<std::filesystem::path> out;
};

struct GenerateArgs {
  std::uint64_t seed = 1;
  InstanceSpec spec;
  /// "disk", "square" or "cylinder"; empty picks disk (d = 2) or cylinder (d = 3).
  std::string cutter;
  std::filesystem::path out_dir = ".";
};

struct ParityArgs {
  std::filesystem::path cutter;
  std::filesystem::path measures;
  int alpha_steps = 8;
  std::optional<double> kernel_radius;
  std::optional<std::filesystem::path> out;
};

struct RenderArgs {
  std::filesystem::path measures;
  std::optional<std::filesystem::path> cutter;
  std::optional<std::filesystem::path> result;
  std::optional<double> kernel_radius;
  std::filesystem::path out;
};

namespace detail {

/// Replaces every kernel radius.
inline MeasureSet with_kernel_radius(const MeasureSet& set, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::NonPositiveRadius, "kernel radius must be > 0");
  std::vector<Measure> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::vector<Kernel> ks(set[i].kernels().begin(), set[i].kernels().end());
    for (auto& k : ks) k.radius = radius;
    out.push_back(Measure::from_kernels(std::move(ks)));
  }
  return MeasureSet::create(std::move(out));
}

inline MeasureSet load(const std::filesystem::path& path, std::optional<double> kernel_radius) {
  LoadOptions opt;
  if (kernel_radius) opt.default_radius = *kernel_radius;
  MeasureSet set = load_measures(path, opt);
  return kernel_radius ? with_kernel_radius(set, *kernel_radius) : set;
}

inline void write_text(const std::optional<std::filesystem::path>& path, const std::string& text, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path->string());
  f << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Runs a command body, mapping library errors to exit code 1.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const json::exception& e) {
    err << "error: ParseError: " << e.what() << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: IoError: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace detail

inline int cmd_solve(const SolveArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const CutterSpec cutter = load_cutter(a.cutter);
    const MeasureSet measures = detail::load(a.measures, a.kernel_radius);
    SolveOptions opt;
    opt.mode = parse_mode(a.mode);
    opt.tol = a.tol;
    opt.max_depth = a.max_depth;
    opt.seed = a.seed;
    opt.branch = a.branch;
    if (!(a.delta > 0.0 && a.delta < 1.0)) throw Error(ErrorKind::Domain, "delta must lie in (0, 1)");
    try {
      const BisectionResult r = solve(measures, cutter, opt);
      RecordOptions ro{a.tol, a.max_depth, a.seed, a.kernel_radius, a.delta, a.timing};
      detail::write_text(a.out, detail::dump(result_record(measures, cutter, r, ro)), out);
      return kOk;
    } catch (const SolveFailure& f) {
      detail::write_text(a.out, detail::dump(failure_record(f, measures, cutter, opt.mode)), out);
      err << "error: " << f.what() << '\n';
      return kNoZero;
    }
  });
}

inline int cmd_verify(const VerifyArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const json rec = read_json_file(a.result);
    if (rec.value("schema", "") != kSchema)
      throw Error(ErrorKind::Parse, a.result.string() + ": expected schema '" + kSchema + "'");
    if (!rec.contains("placement"))
      throw Error(ErrorKind::Parse, a.result.string() + ": result holds no placement (status '" +
                                        rec.value("status", "?") + "')");
    const CutterSpec cutter = a.cutter ? load_cutter(*a.cutter) : cutter_from_json(rec.at("cutter"));
    std::optional<double> radius = a.kernel_radius;
    const json config = rec.value("config", json::object());
    if (!radius && config.contains("kernel_radius")) radius = config.at("kernel_radius").get<double>();
    const double tol = a.tol ? *a.tol : config.value("tol", 1e-6);
    const MeasureSet measures = detail::load(a.measures, radius);
    const Placement placement = placement_from_json(rec.at("placement"));

    // Fresh evaluation from the placement; nothing is reused from the record.
    const PlacedCutter placed(cutter, placement);
    std::size_t worst = 0;
    double worst_dev = -1.0;
    for (std::size_t i = 0; i < measures.size(); ++i) {
      const double t = measures[i].total();
      const double dev = std::abs(mass_in(measures[i], placed) - 0.5 * t) / t;
      char line[96];
      std::snprintf(line, sizeof line, "measure %zu: |mass - total/2| / total = %.3e\n", i, dev);
      out << line;
      if (dev > worst_dev) {
        worst_dev = dev;
        worst = i;
      }
    }
    char line[128];
    std::snprintf(line, sizeof line, "worst: measure %zu (%.3e), tolerance %.3e\n", worst, worst_dev, tol);
    out << line;
    if (worst_dev <= tol) {
      out << "PASS\n";
      return kOk;
    }
    out << "FAIL\n";
    err << "verification failed: measure " << worst << " deviates by " << worst_dev << '\n';
    return kViolation;
  });
}

inline int cmd_oracle(const OracleArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const CutterSpec cutter = load_cutter(a.cutter);
    const MeasureSet measures = detail::load(a.measures, a.kernel_radius);
    GridSpec g{a.n_c, a.n_theta, a.margin, a.reflections};
    const OracleResult o = grid_search(measures, cutter, parse_mode(a.mode), g);
    json rec = {{"schema", kSchema},
                {"status", o.best ? "searched" : "empty"},
                {"mode", a.mode},
                {"grid", {{"n_c", g.n_c}, {"n_theta", g.n_theta}, {"margin", g.margin}, {"reflections", g.reflections}}},
                {"evaluated", o.evaluated},
                {"best_residual", o.best ? json(o.best_residual) : json(nullptr)}};
    if (o.best) {
      rec["placement"] = placement_to_json(*o.best);
      rec["cutter"] = cutter_to_json(cutter);
      rec["masses"] = mass_table(measures, cutter, *o.best);
    }
    detail::write_text(a.out, detail::dump(rec), out);
    return o.best ? kOk : kNoZero;
  });
}

inline int cmd_generate(const GenerateArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const MeasureSet measures = generate_instance(a.spec, a.seed);
    std::string type = a.cutter.empty() ? (a.spec.dim == 3 ? "cylinder" : "disk") : a.cutter;
    CutterSpec cutter = CutterSpec::disk(2, 1.0);
    if (type == "disk")
      cutter = CutterSpec::disk(a.spec.dim, 1.0);
    else if (type == "square" && a.spec.dim == 2)
      cutter = CutterSpec::square();
    else if (type == "cylinder" && a.spec.dim == 3)
      cutter = CutterSpec::cylinder(1.0, 1.0);
    else
      throw Error(ErrorKind::InvalidCutter, "cannot generate a '" + type + "' cutter in d = " + std::to_string(a.spec.dim));

    std::filesystem::create_directories(a.out_dir);
    const auto csv = a.out_dir / "measures.csv";
    const auto cj = a.out_dir / "cutter.json";
    {
      std::ofstream f(csv, std::ios::binary);
      if (!f) throw Error(ErrorKind::Io, "cannot write " + csv.string());
      write_measures_csv(f, measures);
    }
    detail::write_text(cj, detail::dump(cutter_to_json(cutter)), out);
    out << "wrote " << csv.string() << " (" << measures.size() << " measures) and " << cj.string() << '\n';
    return kOk;
  });
}

inline int cmd_parity_check(const ParityArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const CutterSpec cutter = load_cutter(a.cutter);
    const MeasureSet measures = detail::load(a.measures, a.kernel_radius);
    const ParityReport p = homotopy_parity_check(measures, cutter, ChartFrame::fit(measures), a.alpha_steps);
    json trace = json::array();
    for (const auto& [alpha, w] : p.trace) trace.push_back({{"alpha", alpha}, {"winding", w ? json(*w) : json(nullptr)}});
    const bool consistent = p.conclusive && p.degree_g0 % 2 == 0 && p.degree_g1 % 2 != 0;
    json rec = {{"schema", kSchema},
                {"conclusive", p.conclusive},
                {"degree_g0", p.degree_g0},
                {"degree_g1", p.degree_g1},
                {"parity_consistent", consistent},
                {"trace", trace},
                {"note", p.note}};
    detail::write_text(a.out, detail::dump(rec), out);
    if (!p.conclusive) return kNoZero;
    return consistent ? kOk : kViolation;
  });
}

inline int cmd_render(const RenderArgs& a, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    std::optional<json> rec;
    if (a.result && !a.result->empty()) rec = read_json_file(*a.result);
    std::optional<double> radius = a.kernel_radius;
    if (!radius && rec && rec->contains("config") && rec->at("config").contains("kernel_radius"))
      radius = rec->at("config").at("kernel_radius").get<double>();
    const MeasureSet measures = detail::load(a.measures, radius);
    if (measures.dim() != 2) throw Error(ErrorKind::Unsupported, "rendering is implemented for d = 2");

    std::optional<CutterSpec> cutter;
    std::optional<Placement> placement;
    if (rec && rec->contains("placement")) {
      placement = placement_from_json(rec->at("placement"));
      if (a.cutter)
        cutter = load_cutter(*a.cutter);
      else if (rec->contains("cutter"))
        cutter = cutter_from_json(rec->at("cutter"));
      else
        throw Error(ErrorKind::Parse, a.result->string() + ": no cutter in the result; pass --cutter");
    }
    const std::string svg = render_svg(measures, cutter ? &*cutter : nullptr, placement ? &*placement : nullptr);
    detail::write_text(a.out, svg, out);
    return kOk;
  });
}

}  // namespace ccbisect::cli
