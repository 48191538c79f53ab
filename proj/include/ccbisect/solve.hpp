#pragma once

/// @file solve.hpp
/// @brief Mode driver: builds the residual map of the requested chart and
/// runs the matching zero finder.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "ccbisect/oracle.hpp"
#include "ccbisect/zerofind.hpp"

namespace ccbisect {

struct SolveOptions {
  Mode mode = Mode::Homothety;
  double tol = 1e-6;
  int max_depth = 12;
  std::uint64_t seed = 1;
  /// Centre chart coordinates on the support box (unit = half-diagonal).
  bool fit_frame = true;
  /// Scale-root branch for cutters that are not star-shaped.
  std::optional<std::size_t> branch;
  /// θ samples tried by the similarity sweep.
  int theta_sweep = 12;
};

struct BisectionResult {
  Mode mode = Mode::Homothety;
  Placement placement;
  ChartPoint chart_point;
  /// Recomputed from the placement.
  Residual residual;
  SolveReport report;
  ChartFrame frame;
  double seconds = 0.0;
};

/// NoZeroFound with the solver's diagnostics attached.
class SolveFailure : public Error {
 public:
  SolveFailure(const std::string& message, SolveReport report, std::optional<Placement> best)
      : Error(ErrorKind::NoZeroFound, message), report_(std::move(report)), best_(std::move(best)) {}

  const SolveReport& report() const noexcept { return report_; }
  const std::optional<Placement>& best_placement() const noexcept { return best_; }

 private:
  SolveReport report_;
  std::optional<Placement> best_;
};

namespace detail {

inline VectorX to_vector(const Residual& r) {
  VectorX y(static_cast<Eigen::Index>(r.components.size()));
  for (std::size_t i = 0; i < r.components.size(); ++i) y[static_cast<Eigen::Index>(i)] = r.components[i];
  return y;
}

/// Planar axis chart on the unit square: x ↦ φ = 2πx, y ↦ α.
inline AxisPoint axis_point_2d(const VectorX& w) {
  const double phi = kTwoPi * w[0];
  return {Vec(std::cos(phi), std::sin(phi)), std::clamp(w[1], 0.0, 1.0)};
}

/// Spatial axis chart on the shell 1 <= |q| <= 2: u = q/|q|, α = |q| − 1.
inline AxisPoint axis_point_3d(const VectorX& q) {
  const double n = q.norm();
  const Vec u = n > 0.0 ? Vec(q[0] / n, q[1] / n, q[2] / n) : Vec(1, 0, 0);
  return {u, std::clamp(n - 1.0, 0.0, 1.0)};
}

inline VectorX project_shell(VectorX q) {
  const double n = q.norm();
  if (n == 0.0) {
    q.setZero();
    q[0] = 1.0;
    return q;
  }
  if (n < 1.0) return q / n;
  if (n > 2.0) return q * (2.0 / n);
  return q;
}

inline VectorX wrap_axis_2d(VectorX w) {
  w[0] -= std::floor(w[0]);
  w[1] = std::clamp(w[1], 0.0, 1.0);
  return w;
}

inline std::vector<Vec> fibonacci_sphere(int n) {
  std::vector<Vec> out;
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = k * kPi * (3.0 - std::sqrt(5.0));
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

/// Van der Corput order of k/n in [0, 1): 0, 1/2, 1/4, 3/4, ...
inline std::vector<double> spread_fractions(int n) {
  std::vector<double> out;
  for (int k = 0; static_cast<int>(out.size()) < n; ++k) {
    double x = 0.0, f = 0.5;
    for (int j = k; j > 0; j >>= 1, f *= 0.5)
      if (j & 1) x += f;
    out.push_back(x);
  }
  return out;
}

inline SubdivisionOptions subdivision_options(const SolveOptions& opt) {
  SubdivisionOptions s;
  s.tol = opt.tol;
  s.max_depth = opt.max_depth;
  s.seed = opt.seed;
  s.newton.tol = opt.tol;
  return s;
}

class Driver {
 public:
  Driver(const MeasureSet& measures, const CutterSpec& cutter, const SolveOptions& opt)
      : m_(measures), cutter_(cutter), opt_(opt),
        frame_(opt.fit_frame ? ChartFrame::fit(measures) : ChartFrame::identity(measures.dim())) {
    if (measures.dim() != cutter.dim()) throw Error(ErrorKind::DimensionMismatch, "measures and cutter dimensions differ");
  }

  BisectionResult run() {
    const auto t0 = std::chrono::steady_clock::now();
    BisectionResult r = dispatch();
    r.mode = opt_.mode;
    r.frame = frame_;
    r.residual = residual(m_, cutter_, r.placement);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

 private:
  const Measure& mu0() const { return m_.pinning(); }

  VectorX eval(const ChartPoint& p) const {
    return to_vector(residual(m_, cutter_, chart_placement(p, cutter_, mu0(), frame_)));
  }

  BisectionResult make(const ChartPoint& p, const SolveReport& rep) const {
    BisectionResult r{opt_.mode, chart_placement(p, cutter_, mu0(), frame_), p, {}, rep, frame_, 0.0};
    return r;
  }

  [[noreturn]] void fail(const std::string& what, SolveReport rep, std::optional<ChartPoint> best) const {
    std::optional<Placement> pl;
    if (best) {
      try {
        pl = chart_placement(*best, cutter_, mu0(), frame_);
      } catch (const Error&) {
      }
    }
    throw SolveFailure(what + " (best residual " + std::to_string(rep.residual_norm) + ")", std::move(rep),
                       std::move(pl));
  }

  BisectionResult dispatch() {
    switch (opt_.mode) {
      case Mode::Homothety: return homothety();
      case Mode::Axis: return axis();
      case Mode::Similarity: return similarity();
    }
    throw Error(ErrorKind::Domain, "unknown mode");
  }

  ChartPoint ball_point(const VectorX& w, const Orientation& o, std::optional<std::size_t> branch) const {
    const Vec v = cube_to_ball(clamp_to_cube(w));
    if (branch || !cutter_.is_star_shaped())
      return BranchPoint{{o.rotation, o.reflected, v}, branch.value_or(0)};
    return SimilarityPoint{o.rotation, o.reflected, v};
  }

  /// Ball chart with a fixed orientation, d = 2.
  SolveReport solve_ball_2d(const Orientation& o, std::optional<std::size_t> branch, SubdivisionOptions sopt,
                            ChartPoint& out) const {
    CachedMap F([&](const VectorX& w) { return eval(ball_point(w, o, branch)); });
    SolveReport rep = subdivide_solve(F, Box2{-1, -1, 1, 1}, sopt, clamp_to_cube);
    if (rep.point.size() == 2) out = ball_point(rep.point, o, branch);
    return rep;
  }

  SolveReport solve_ball_3d(const Orientation& o, std::optional<std::size_t> branch, ChartPoint& out) const {
    CachedMap F([&](const VectorX& w) { return eval(ball_point(w, o, branch)); });
    std::vector<VectorX> starts;
    const double g[5] = {-0.8, -0.4, 0.0, 0.4, 0.8};
    for (double a : g)
      for (double b : g)
        for (double c : g) {
          VectorX w(3);
          w << a, b, c;
          starts.push_back(w);
        }
    MultistartOptions mo;
    mo.tol = opt_.tol;
    mo.refine = 40;
    mo.max_evaluations = 60000;
    SolveReport rep = multistart_solve(F, starts, mo, clamp_to_cube);
    if (rep.point.size() == 3) out = ball_point(rep.point, o, branch);
    return rep;
  }

  std::vector<std::optional<std::size_t>> branches() const {
    if (cutter_.is_star_shaped() && !opt_.branch) return {std::nullopt};
    if (opt_.branch) return {opt_.branch};
    return {0, 1, 2};
  }

  BisectionResult homothety() {
    const Orientation o = Orientation::identity(cutter_.dim());
    SolveReport last;
    std::optional<ChartPoint> best;
    for (const auto& branch : branches()) {
      ChartPoint p = HomothetyPoint{Vec::zero(cutter_.dim())};
      SolveReport rep = cutter_.dim() == 2 ? solve_ball_2d(o, branch, detail::subdivision_options(opt_), p)
                                           : solve_ball_3d(o, branch, p);
      if (rep.success) {
        if (std::holds_alternative<SimilarityPoint>(p)) p = HomothetyPoint{std::get<SimilarityPoint>(p).v};
        return make(p, std::move(rep));
      }
      if (!best || rep.residual_norm < last.residual_norm) {
        best = p;
        last = std::move(rep);
      }
    }
    if (!cutter_.is_star_shaped()) {
      if (auto r = oracle_fallback(Mode::Homothety)) return *r;
    }
    fail("homothety chart: no zero found", std::move(last), best);
  }

  BisectionResult axis() {
    cutter_axis(cutter_);  // validates the cutter
    if (cutter_.dim() == 2) {
      CachedMap F([&](const VectorX& w) { return eval(axis_point_2d(w)); });
      SolveReport rep = subdivide_solve(F, Box2{0, 0, 1, 1}, detail::subdivision_options(opt_), wrap_axis_2d);
      if (rep.success) return make(axis_point_2d(rep.point), std::move(rep));
      const ChartPoint best = axis_point_2d(rep.point);
      fail("axis chart: no zero found", std::move(rep), best);
    }
    CachedMap F([&](const VectorX& q) { return eval(axis_point_3d(q)); });
    std::vector<VectorX> starts;
    const auto dirs = fibonacci_sphere(25);
    for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9})
      for (const Vec& u : dirs) {
        VectorX q(3);
        q << u[0], u[1], u[2];
        starts.push_back(q * (1.0 + alpha));
      }
    MultistartOptions mo;
    mo.tol = opt_.tol;
    mo.refine = 40;
    mo.max_evaluations = 60000;
    SolveReport rep = multistart_solve(F, starts, mo, project_shell);
    if (rep.success) return make(axis_point_3d(rep.point), std::move(rep));
    const ChartPoint best = axis_point_3d(rep.point);
    fail("axis chart (d = 3, uncertified multistart): no zero found", std::move(rep), best);
  }

  BisectionResult similarity() {
    if (cutter_.dim() == 3) return similarity_3d();
    SolveReport best_rep;
    std::optional<ChartPoint> best_point;
    auto consider = [&](SolveReport& rep, const ChartPoint& p) {
      if (!best_point || rep.residual_norm < best_rep.residual_norm) {
        best_point = p;
        best_rep = rep;
      }
    };
    // Boxes: the axis chart has a certified zero and its map is continuous.
    if (std::holds_alternative<AxisBox>(cutter_.shape())) {
      CachedMap F([&](const VectorX& w) { return eval(axis_point_2d(w)); });
      SolveReport rep = subdivide_solve(F, Box2{0, 0, 1, 1}, detail::subdivision_options(opt_), wrap_axis_2d);
      const ChartPoint p = axis_point_2d(rep.point);
      if (rep.success && chart_placement(p, cutter_, mu0(), frame_).is_body()) {
        rep.method = "axis chart " + rep.method;
        return make(p, std::move(rep));
      }
      consider(rep, p);
    }
    const int order = cutter_.symmetry_order();
    const double period = order == 0 ? 0.0 : kTwoPi / order;
    const std::vector<bool> flips = order == 1 ? std::vector<bool>{false, true} : std::vector<bool>{false};
    const auto fractions = spread_fractions(order == 0 ? 1 : opt_.theta_sweep);
    std::optional<BisectionResult> half_space_solution;
    std::vector<std::pair<double, VectorX>> seeds;  // (|F|, (w, θ, flip))
    SubdivisionOptions sopt = detail::subdivision_options(opt_);
    sopt.fallback_depth = 32;
    sopt.max_evaluations = 20000;
    for (const auto& branch : branches()) {
      for (double frac : fractions) {
        for (bool flip : flips) {
          const double theta = period * frac;
          const Orientation o{Rotation::planar(theta), flip};
          ChartPoint p = SimilarityPoint{o.rotation, flip, Vec::zero(2)};
          SolveReport rep = solve_ball_2d(o, branch, sopt, p);
          if (rep.success) {
            BisectionResult r = make(p, rep);
            if (r.placement.is_body()) {
              r.report.method = "theta sweep " + r.report.method;
              return r;
            }
            if (!half_space_solution) half_space_solution = std::move(r);
          } else if (rep.point.size() == 2) {
            VectorX s(4);
            s << rep.point[0], rep.point[1], theta, flip ? 1.0 : 0.0;
            seeds.emplace_back(rep.residual_norm, s);
          }
          consider(rep, p);
        }
      }
      // Gauss-Newton over (w, θ) from the best sweep points.
      std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < std::min<std::size_t>(4, seeds.size()); ++k) {
        const bool flip = seeds[k].second[3] > 0.5;
        auto point_of = [&](const VectorX& x) {
          VectorX w(2);
          w << x[0], x[1];
          return ball_point(w, {Rotation::planar(x[2]), flip}, branch);
        };
        CachedMap G([&](const VectorX& x) { return eval(point_of(x)); });
        auto project = [](VectorX x) {
          x[0] = std::clamp(x[0], -1.0, 1.0);
          x[1] = std::clamp(x[1], -1.0, 1.0);
          return x;
        };
        NewtonOptions no;
        no.tol = opt_.tol;
        const NewtonResult nr = damped_newton(G, seeds[k].second.head(3), no, project);
        SolveReport rep;
        rep.point = nr.x;
        rep.value = nr.fx;
        rep.residual_norm = nr.norm;
        rep.evaluations = G.evaluations();
        rep.method = "gauss-newton in (v, theta)";
        const ChartPoint p = point_of(nr.x);
        if (nr.converged && chart_placement(p, cutter_, mu0(), frame_).is_body()) {
          rep.success = true;
          return make(p, std::move(rep));
        }
        consider(rep, p);
      }
      seeds.clear();
    }
    if (half_space_solution) return *half_space_solution;
    if (!cutter_.is_star_shaped()) {
      if (auto r = oracle_fallback(Mode::Similarity)) return *r;
    }
    fail("similarity chart: no zero found", std::move(best_rep), best_point);
  }

  BisectionResult similarity_3d() {
    SolveReport best_rep;
    std::optional<ChartPoint> best_point;
    GridSpec gs;
    gs.n_theta = 12;
    for (const Orientation& o : detail::oracle_orientations(cutter_, Mode::Similarity, gs)) {
      for (const auto& branch : branches()) {
        ChartPoint p = SimilarityPoint{o.rotation, o.reflected, Vec::zero(3)};
        SolveReport rep = solve_ball_3d(o, branch, p);
        if (rep.success) return make(p, std::move(rep));
        if (!best_point || rep.residual_norm < best_rep.residual_norm) {
          best_point = p;
          best_rep = std::move(rep);
        }
      }
    }
    fail("similarity chart (d = 3, uncertified multistart): no zero found", std::move(best_rep), best_point);
  }

  /// Coarse oracle grid polished by Newton in the centre; used for cutters
  /// that are not star-shaped, where branch maps may be discontinuous.
  std::optional<BisectionResult> oracle_fallback(Mode mode) const {
    GridSpec gs;
    gs.n_c = 24;
    gs.margin = 0.5;
    gs.n_theta = mode == Mode::Similarity ? 8 : 1;
    const OracleResult o = grid_search(m_, cutter_, mode, gs);
    if (!o.best) return std::nullopt;
    const Body start = o.best->as_body();
    const Orientation orient{start.rotation, start.reflected};
    // Polish the centre with the scale root closest to the oracle's.
    auto placement_at = [&](const VectorX& c) -> std::optional<Placement> {
      const Vec cv = Vec::from_span(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
      const auto roots = enumerate_scale_roots(cutter_, mu0(), cv, orient).roots;
      if (roots.empty()) return std::nullopt;
      double best = roots.front();
      for (double s : roots)
        if (std::abs(std::log(s / start.scale)) < std::abs(std::log(best / start.scale))) best = s;
      return Placement::body(cv, best, orient.rotation, orient.reflected);
    };
    CachedMap F([&](const VectorX& c) {
      const auto pl = placement_at(c);
      if (!pl) return VectorX::Constant(m_.dim(), 1.0).eval();
      return to_vector(residual(m_, cutter_, *pl));
    });
    VectorX c0(m_.dim());
    for (int i = 0; i < m_.dim(); ++i) c0[i] = start.center[i];
    NewtonOptions no;
    no.tol = opt_.tol;
    const NewtonResult nr = damped_newton(F, c0, no, [](VectorX x) { return x; });
    if (!nr.converged) return std::nullopt;
    const auto pl = placement_at(nr.x);
    if (!pl) return std::nullopt;
    SolveReport rep;
    rep.success = true;
    rep.point = nr.x;
    rep.value = nr.fx;
    rep.residual_norm = nr.norm;
    rep.evaluations = F.evaluations();
    rep.method = "oracle grid + newton (branch fallback)";
    BisectionResult r{opt_.mode, *pl, BranchPoint{{orient.rotation, orient.reflected, Vec::zero(m_.dim())}, 0},
                      {}, std::move(rep), frame_, 0.0};
    return r;
  }

  const MeasureSet& m_;
  const CutterSpec& cutter_;
  SolveOptions opt_;
  ChartFrame frame_;
};

}  // namespace detail

/// Finds a placement bisecting every measure. Throws SolveFailure
/// (NoZeroFound) with the solver diagnostics when no zero is located.
inline BisectionResult solve(const MeasureSet& measures, const CutterSpec& cutter, const SolveOptions& options = {}) {
  if (!(options.tol > 0.0 && options.tol < 0.1)) throw Error(ErrorKind::Domain, "tolerance must lie in (0, 0.1)");
  if (options.max_depth < 1 || options.max_depth > 20) throw Error(ErrorKind::Domain, "max depth must lie in [1, 20]");
  return detail::Driver(measures, cutter, options).run();
}

}  // namespace ccbisect
