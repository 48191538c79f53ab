#pragma once

/// @file zerofind.hpp
/// @brief Winding numbers of planar maps, quadtree subdivision guided by
/// box windings, damped Newton / Levenberg-Marquardt refinement, multistart
/// search for d = 3, and the degree parity check of the axis chart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ccbisect/parametrize.hpp"

namespace ccbisect {

using VectorX = Eigen::VectorXd;
/// Map from a domain point (size m) to a residual (size n).
using VectorMap = std::function<VectorX(const VectorX&)>;

inline double inf_norm(const VectorX& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Memoised evaluation keyed on the exact bits of the argument. Also keeps
/// the best (smallest ∞-norm) point seen.
class CachedMap {
 public:
  explicit CachedMap(VectorMap f) : f_(std::move(f)) {}

  const VectorX& operator()(const VectorX& x) {
    std::string key(reinterpret_cast<const char*>(x.data()), sizeof(double) * static_cast<std::size_t>(x.size()));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ++evaluations_;
    VectorX y = f_(x);
    const double n = inf_norm(y);
    if (n < best_norm_) {
      best_norm_ = n;
      best_x_ = x;
      best_y_ = y;
    }
    return cache_.emplace(std::move(key), std::move(y)).first->second;
  }

  std::size_t evaluations() const noexcept { return evaluations_; }
  double best_norm() const noexcept { return best_norm_; }
  const VectorX& best_x() const noexcept { return best_x_; }
  const VectorX& best_y() const noexcept { return best_y_; }
  void clear_cache() { cache_.clear(); }

 private:
  VectorMap f_;
  std::unordered_map<std::string, VectorX> cache_;
  std::size_t evaluations_ = 0;
  double best_norm_ = std::numeric_limits<double>::infinity();
  VectorX best_x_, best_y_;
};

// ---------------------------------------------------------------------------
// Winding numbers
// ---------------------------------------------------------------------------

struct WindingOptions {
  /// |F| below this at a sample makes the winding ambiguous.
  double floor = 1e-13;
  int initial_segments = 8;
  /// Maximum number of halvings of an initial segment.
  int max_refinement = 24;
  /// Segments whose image moves farther than chord_ratio × its distance
  /// to the origin are also halved, up to chord_depth times; this catches
  /// turns hidden between two samples of similar direction.
  double chord_ratio = 1.0;
  int chord_depth = 6;
};

/// Winding number of t ↦ F(loop(t)), t ∈ [0, 1], loop(0) = loop(1).
/// Segments are halved until consecutive directions differ by less than
/// π/2 (and, to a bounded depth, until the image moves less than its
/// distance to the origin). Throws AmbiguousWinding when |F| drops below the floor or the
/// refinement limit is reached.
inline int winding_number(const std::function<VectorX(double)>& loop_image, const WindingOptions& opt = {}) {
  struct Sample {
    double t;
    Eigen::Vector2d f;
  };
  auto eval = [&](double t) {
    const VectorX y = loop_image(t);
    if (y.size() != 2) throw Error(ErrorKind::DimensionMismatch, "winding number needs a map into R^2");
    const Eigen::Vector2d f(y[0], y[1]);
    if (!(f.norm() >= opt.floor))
      throw Error(ErrorKind::AmbiguousWinding, "map nearly vanishes on the loop at t = " + std::to_string(t));
    return Sample{t, f};
  };
  auto angle = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a[0] * b[1] - a[1] * b[0], a.dot(b));
  };
  double total = 0.0;
  const Sample first = eval(0.0);
  Sample prev = first;
  for (int seg = 1; seg <= opt.initial_segments; ++seg) {
    const double t_end = static_cast<double>(seg) / opt.initial_segments;
    const Sample end = seg == opt.initial_segments ? Sample{1.0, first.f} : eval(t_end);
    // Depth-first refinement of [prev, end].
    std::vector<std::pair<Sample, int>> stack{{end, 0}};
    while (!stack.empty()) {
      const auto [next, depth] = stack.back();
      const double a = angle(prev.f, next.f);
      const bool long_chord = depth < opt.chord_depth &&
                              (next.f - prev.f).norm() > opt.chord_ratio * std::min(prev.f.norm(), next.f.norm());
      if (std::abs(a) < 0.5 * kPi && !long_chord) {
        total += a;
        prev = next;
        stack.pop_back();
        continue;
      }
      if (depth >= opt.max_refinement)
        throw Error(ErrorKind::AmbiguousWinding, "direction jump persists after refinement near t = " +
                                                     std::to_string(prev.t));
      stack.back().second = depth + 1;
      stack.push_back({eval(0.5 * (prev.t + next.t)), depth + 1});
    }
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

/// Winding of F along the closed curve `loop` in the domain.
inline int winding_number(const std::function<VectorX(double)>& loop, const VectorMap& F,
                          const WindingOptions& opt = {}) {
  return winding_number([&](double t) { return F(loop(t)); }, opt);
}

struct Box2 {
  double x0, y0, x1, y1;

  double width() const noexcept { return std::max(x1 - x0, y1 - y0); }
  VectorX center() const {
    VectorX c(2);
    c << 0.5 * (x0 + x1), 0.5 * (y0 + y1);
    return c;
  }
  std::array<Box2, 4> split() const {
    const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
    return {Box2{x0, y0, xm, ym}, Box2{xm, y0, x1, ym}, Box2{xm, ym, x1, y1}, Box2{x0, ym, xm, y1}};
  }
  /// Counter-clockwise perimeter point, t ∈ [0, 1]. Each edge is
  /// interpolated from its lexicographically smaller end, so a neighbouring
  /// box produces bit-identical points on a shared edge.
  VectorX perimeter(double t) const {
    const double s = 4.0 * (t - std::floor(t));
    const int edge = std::min(3, static_cast<int>(s));
    const double f = s - edge;
    const std::array<std::array<double, 2>, 4> corner{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
    auto a = corner[static_cast<std::size_t>(edge)];
    auto b = corner[static_cast<std::size_t>((edge + 1) % 4)];
    double g = f;
    if (b < a) {
      std::swap(a, b);
      g = 1.0 - f;
    }
    VectorX p(2);
    p << a[0] + g * (b[0] - a[0]), a[1] + g * (b[1] - a[1]);
    return p;
  }
  bool contains(const VectorX& p) const { return p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1; }
};

/// Winding of F around the box boundary. Corners are always sampled, so
/// the edges shared between neighbouring boxes reuse cached values.
inline int box_winding(const Box2& box, CachedMap& F, const WindingOptions& opt = {}) {
  WindingOptions o = opt;
  o.initial_segments = std::max(4, o.initial_segments - o.initial_segments % 4);
  return winding_number([&](double t) { return F(box.perimeter(t)); }, o);
}

// ---------------------------------------------------------------------------
// Local refinement
// ---------------------------------------------------------------------------

struct NewtonOptions {
  double tol = 1e-6;
  double fd_step = 1e-6;
  int max_iterations = 50;
  int max_halvings = 30;
};

struct NewtonResult {
  VectorX x;
  VectorX fx;
  double norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  /// ‖F‖_2 after each accepted step.
  std::vector<double> trace;
};

/// Forward-difference Jacobian; steps that leave the domain are taken
/// backwards.
inline Eigen::MatrixXd fd_jacobian(CachedMap& F, const VectorX& x, const VectorX& fx, double h,
                                   const std::function<VectorX(const VectorX&)>& project) {
  Eigen::MatrixXd J(fx.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    VectorX xp = x;
    xp[j] += h;
    xp = project(xp);
    double step = xp[j] - x[j];
    if (std::abs(step) < 0.5 * h) {
      xp = x;
      xp[j] -= h;
      xp = project(xp);
      step = xp[j] - x[j];
    }
    if (step == 0.0) {
      J.col(j).setZero();
      continue;
    }
    J.col(j) = (F(xp) - fx) / step;
  }
  return J;
}

/// Damped Newton with a finite-difference Jacobian. The minimum-norm
/// least-squares step handles non-square systems; steps are halved until
/// ‖F‖_2 decreases, so accepted steps never increase the residual norm.
inline NewtonResult damped_newton(CachedMap& F, VectorX x0, const NewtonOptions& opt,
                                  const std::function<VectorX(const VectorX&)>& project) {
  NewtonResult r;
  r.x = project(std::move(x0));
  r.fx = F(r.x);
  r.norm = inf_norm(r.fx);
  r.trace.push_back(r.fx.norm());
  for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
    if (r.norm <= opt.tol) {
      r.converged = true;
      return r;
    }
    const Eigen::MatrixXd J = fd_jacobian(F, r.x, r.fx, opt.fd_step, project);
    const VectorX step = J.completeOrthogonalDecomposition().solve(-r.fx);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    const double current = r.fx.norm();
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      const VectorX trial = project(r.x + lambda * step);
      const VectorX& ft = F(trial);
      if (ft.norm() < current) {
        r.x = trial;
        r.fx = ft;
        r.norm = inf_norm(ft);
        r.trace.push_back(ft.norm());
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  r.converged = r.norm <= opt.tol;
  return r;
}

/// Levenberg-Marquardt descent on ½‖F‖², used when Newton stalls.
inline NewtonResult levenberg_marquardt(CachedMap& F, VectorX x0, const NewtonOptions& opt,
                                        const std::function<VectorX(const VectorX&)>& project) {
  NewtonResult r;
  r.x = project(std::move(x0));
  r.fx = F(r.x);
  r.norm = inf_norm(r.fx);
  r.trace.push_back(r.fx.norm());
  double mu = 1e-3;
  for (r.iterations = 0; r.iterations < 2 * opt.max_iterations; ++r.iterations) {
    if (r.norm <= opt.tol) break;
    const Eigen::MatrixXd J = fd_jacobian(F, r.x, r.fx, opt.fd_step, project);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const VectorX g = J.transpose() * r.fx;
    bool accepted = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += mu * (1.0 + JtJ.diagonal().array());
      const VectorX step = A.ldlt().solve(-g);
      const VectorX trial = project(r.x + step);
      const VectorX& ft = F(trial);
      if (step.allFinite() && ft.norm() < r.fx.norm()) {
        r.x = trial;
        r.fx = ft;
        r.norm = inf_norm(ft);
        r.trace.push_back(ft.norm());
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        break;
      }
      mu *= 4.0;
    }
    if (!accepted) break;
  }
  r.converged = r.norm <= opt.tol;
  return r;
}

// ---------------------------------------------------------------------------
// Subdivision
// ---------------------------------------------------------------------------

struct WindingCertificate {
  Box2 box;
  int winding = 0;
  int depth = 0;
};

struct SubdivisionOptions {
  double tol = 1e-6;
  /// Depth of the winding-guided quadtree; Newton is tried on boxes up to
  /// this depth.
  int max_depth = 12;
  /// Plain bisection of nonzero-winding boxes continues to this depth.
  int fallback_depth = 48;
  int newton_from_depth = 1;
  std::size_t max_boxes_per_level = 12;
  int newton_per_level = 2;
  int jitter_attempts = 3;
  std::uint64_t seed = 1;
  std::size_t max_evaluations = 200000;
  WindingOptions winding{};
  NewtonOptions newton{};
};

struct SolveReport {
  bool success = false;
  VectorX point;
  VectorX value;
  double residual_norm = std::numeric_limits<double>::infinity();
  std::vector<WindingCertificate> certificates;
  std::size_t evaluations = 0;
  int depth = 0;
  std::string method;
  std::string note;
};

namespace detail {

/// Winding with jitter retries; nullopt when every attempt is ambiguous.
inline std::optional<int> robust_box_winding(const Box2& box, CachedMap& F, const SubdivisionOptions& opt,
                                             std::mt19937_64& rng) {
  try {
    return box_winding(box, F, opt.winding);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AmbiguousWinding) throw;
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double j = 1e-7 * box.width();
  for (int attempt = 0; attempt < opt.jitter_attempts; ++attempt) {
    const Box2 moved{box.x0 + j * u(rng), box.y0 + j * u(rng), box.x1 + j * u(rng), box.y1 + j * u(rng)};
    try {
      return box_winding(moved, F, opt.winding);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AmbiguousWinding) throw;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Quadtree search for a zero of F on `domain`. Boxes whose boundary
/// winding is nonzero are subdivided; damped Newton is started from their
/// centres, and beyond max_depth the nonzero boxes are bisected further
/// until their centres meet the tolerance.
inline SolveReport subdivide_solve(CachedMap& F, const Box2& domain, const SubdivisionOptions& opt,
                                   const std::function<VectorX(const VectorX&)>& project) {
  SolveReport rep;
  rep.method = "subdivision";
  std::mt19937_64 rng(opt.seed);
  auto finish = [&](const VectorX& x, const VectorX& fx, int depth, const std::string& how) {
    rep.success = true;
    rep.point = x;
    rep.value = fx;
    rep.residual_norm = inf_norm(fx);
    rep.depth = depth;
    rep.evaluations = F.evaluations();
    rep.method = how;
    return rep;
  };
  auto best_ok = [&] { return F.best_norm() <= opt.tol; };

  struct Node {
    Box2 box;
    int winding;
    bool certified;
  };
  const auto root_w = detail::robust_box_winding(domain, F, opt, rng);
  if (best_ok()) return finish(F.best_x(), F.best_y(), 0, "boundary sample");
  if (root_w && *root_w == 0) {
    rep.note = "domain boundary has winding 0";
    rep.evaluations = F.evaluations();
    rep.point = F.best_x();
    rep.value = F.best_y();
    rep.residual_norm = F.best_norm();
    return rep;
  }
  rep.certificates.push_back({domain, root_w.value_or(0), 0});
  std::vector<Node> level{{domain, root_w.value_or(0), root_w.has_value()}};

  for (int depth = 1; depth <= opt.fallback_depth && !level.empty(); ++depth) {
    std::vector<Node> next, unsure;
    for (const auto& node : level) {
      for (const Box2& child : node.box.split()) {
        const auto w = detail::robust_box_winding(child, F, opt, rng);
        if (best_ok()) return finish(F.best_x(), F.best_y(), depth, "boundary sample");
        if (w && *w != 0) {
          next.push_back({child, *w, true});
        } else if (!w) {
          unsure.push_back({child, 0, false});
        }
      }
    }
    if (next.empty()) next = std::move(unsure);
    // Rank by the residual at the box centre.
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < next.size(); ++i) order.emplace_back(inf_norm(F(next[i].box.center())), i);
    if (best_ok()) return finish(F.best_x(), F.best_y(), depth, "box centre");
    std::sort(order.begin(), order.end());
    std::vector<Node> kept;
    for (std::size_t k = 0; k < order.size() && kept.size() < opt.max_boxes_per_level; ++k)
      kept.push_back(next[order[k].second]);
    for (const auto& n : kept)
      if (n.certified) rep.certificates.push_back({n.box, n.winding, depth});
    if (depth >= opt.newton_from_depth && depth <= opt.max_depth) {
      for (int k = 0; k < opt.newton_per_level && k < static_cast<int>(kept.size()); ++k) {
        const NewtonResult nr = damped_newton(F, kept[static_cast<std::size_t>(k)].box.center(), opt.newton, project);
        if (nr.converged) return finish(nr.x, nr.fx, depth, "subdivision + newton");
      }
    }
    if (F.evaluations() > opt.max_evaluations) {
      rep.note = "evaluation budget exhausted";
      break;
    }
    level = std::move(kept);
    rep.depth = depth;
  }
  if (rep.note.empty()) rep.note = "no box centre met the tolerance";
  rep.evaluations = F.evaluations();
  rep.point = F.best_x();
  rep.value = F.best_y();
  rep.residual_norm = F.best_norm();
  return rep;
}

// ---------------------------------------------------------------------------
// Multistart (d = 3)
// ---------------------------------------------------------------------------

struct MultistartOptions {
  double tol = 1e-6;
  /// Number of best-ranked starts refined by Newton.
  std::size_t refine = 8;
  std::size_t max_evaluations = 20000;
  NewtonOptions newton{};
};

/// Ranks the starts by ‖F‖, refines the best with damped Newton and falls
/// back to Levenberg-Marquardt from the best point found.
inline SolveReport multistart_solve(CachedMap& F, const std::vector<VectorX>& starts, const MultistartOptions& opt,
                                    const std::function<VectorX(const VectorX&)>& project) {
  SolveReport rep;
  rep.method = "multistart newton";
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    double n = std::numeric_limits<double>::infinity();
    try {
      n = inf_norm(F(project(starts[i])));
    } catch (const Error&) {
    }
    order.emplace_back(n, i);
  }
  std::sort(order.begin(), order.end());
  auto done = [&](const NewtonResult& nr, const std::string& how) {
    rep.success = true;
    rep.point = nr.x;
    rep.value = nr.fx;
    rep.residual_norm = nr.norm;
    rep.method = how;
    rep.evaluations = F.evaluations();
    return rep;
  };
  NewtonOptions nopt = opt.newton;
  nopt.tol = opt.tol;
  for (std::size_t k = 0; k < std::min(opt.refine, order.size()); ++k) {
    if (F.evaluations() > opt.max_evaluations) break;
    try {
      const NewtonResult nr = damped_newton(F, starts[order[k].second], nopt, project);
      if (nr.converged) return done(nr, "multistart newton");
    } catch (const Error&) {
    }
  }
  if (F.best_norm() <= opt.tol) {
    NewtonResult nr;
    nr.x = F.best_x();
    nr.fx = F.best_y();
    nr.norm = F.best_norm();
    return done(nr, "multistart sample");
  }
  try {
    const NewtonResult lm = levenberg_marquardt(F, F.best_x(), nopt, project);
    if (lm.converged) return done(lm, "levenberg-marquardt");
    const NewtonResult polish = damped_newton(F, lm.x, nopt, project);
    if (polish.converged) return done(polish, "levenberg-marquardt + newton");
  } catch (const Error&) {
  }
  rep.note = "no start converged";
  rep.point = F.best_x();
  rep.value = F.best_y();
  rep.residual_norm = F.best_norm();
  rep.evaluations = F.evaluations();
  return rep;
}

// ---------------------------------------------------------------------------
// Degree parity of the axis chart
// ---------------------------------------------------------------------------

struct ParityReport {
  bool conclusive = false;
  int degree_g0 = 0;
  int degree_g1 = 0;
  /// (α, winding of φ ↦ F(φ, α)); missing windings are recorded as nullopt.
  std::vector<std::pair<double, std::optional<int>>> trace;
  std::string note;
};

/// Windings of φ ↦ F(u(φ), α) over the full circle at α = 0 (even map,
/// even degree) and α = 1 (odd map, odd degree) for the planar axis chart,
/// plus the winding along a grid of intermediate α.
inline ParityReport homotopy_parity_check(const MeasureSet& measures, const CutterSpec& cutter,
                                          const ChartFrame& frame, int alpha_steps = 8,
                                          const WindingOptions& wopt = {}) {
  if (measures.dim() != 2 || cutter.dim() != 2)
    throw Error(ErrorKind::Unsupported, "the parity check is implemented for d = 2");
  const Measure& mu0 = measures.pinning();
  ParityReport rep;
  auto winding_at = [&](double alpha) -> std::optional<int> {
    auto loop = [&](double t) {
      const double phi = kTwoPi * t;
      const Placement pl = axis_chart(cutter, mu0, Vec(std::cos(phi), std::sin(phi)), alpha, frame);
      const Residual r = residual(measures, cutter, pl);
      VectorX y(2);
      y << r.components[0], r.components[1];
      return y;
    };
    WindingOptions o = wopt;
    o.initial_segments = std::max(o.initial_segments, 32);
    try {
      return winding_number(loop, o);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AmbiguousWinding) throw;
      return std::nullopt;
    }
  };
  for (int k = 0; k <= alpha_steps; ++k) {
    const double alpha = static_cast<double>(k) / alpha_steps;
    rep.trace.emplace_back(alpha, winding_at(alpha));
  }
  const auto& w0 = rep.trace.front().second;
  const auto& w1 = rep.trace.back().second;
  rep.conclusive = w0.has_value() && w1.has_value();
  if (!rep.conclusive) {
    rep.note = "Inconclusive: the residual nearly vanishes on an end loop";
    return rep;
  }
  rep.degree_g0 = *w0;
  rep.degree_g1 = *w1;
  return rep;
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// Square [-1,1]^d → closed unit ball, radial rescaling by ‖w‖∞/‖w‖₂.
/// Boundary goes to the sphere and w ↦ −w to v ↦ −v.
inline Vec cube_to_ball(const VectorX& w) {
  const int d = static_cast<int>(w.size());
  Vec v(d);
  const double n2 = w.norm();
  if (n2 == 0.0) return v;
  const double ninf = w.cwiseAbs().maxCoeff();
  for (int i = 0; i < d; ++i) v[i] = w[i] * (ninf / n2);
  return v;
}

inline VectorX clamp_to_cube(VectorX w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::clamp(w[i], -1.0, 1.0);
  return w;
}

}  // namespace ccbisect
