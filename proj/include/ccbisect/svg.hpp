#pragma once

/// @file svg.hpp
/// @brief Planar SVG rendering of an instance and, optionally, a placed cutter.

#include <cstdio>
#include <sstream>
#include <string>

#include "ccbisect/mass_eval.hpp"

namespace ccbisect {

namespace detail {

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

/// Segment of the line <x, n> = b inside [lo, hi]; empty when they miss.
inline std::vector<Vec> clip_line(const Vec& n, double b, const Vec& lo, const Vec& hi) {
  std::vector<Vec> pts;
  auto add = [&](const Vec& p) {
    for (const auto& q : pts)
      if (distance(p, q) < 1e-12) return;
    pts.push_back(p);
  };
  for (double x : {lo[0], hi[0]})
    if (std::abs(n[1]) > 1e-15) {
      const double y = (b - n[0] * x) / n[1];
      if (y >= lo[1] && y <= hi[1]) add(Vec(x, y));
    }
  for (double y : {lo[1], hi[1]})
    if (std::abs(n[0]) > 1e-15) {
      const double x = (b - n[1] * y) / n[0];
      if (x >= lo[0] && x <= hi[0]) add(Vec(x, y));
    }
  if (pts.size() > 2) pts.resize(2);
  return pts;
}

}  // namespace detail

struct RenderOptions {
  /// Pixel width; the height follows the aspect ratio of the view box.
  double width = 800.0;
  int circle_segments = 128;
};

/// Renders kernels as dots (area proportional to weight, one colour per
/// measure). A body placement is drawn as a single closed path, a half-space
/// as its boundary line clipped to the view. Residuals go in a legend.
inline std::string render_svg(const MeasureSet& measures, const CutterSpec* cutter = nullptr,
                              const Placement* placement = nullptr, const RenderOptions& opt = {}) {
  if (measures.dim() != 2) throw Error(ErrorKind::Unsupported, "rendering is implemented for d = 2");
  if ((cutter == nullptr) != (placement == nullptr))
    throw Error(ErrorKind::Domain, "render_svg needs both a cutter and a placement, or neither");
  if (cutter && (cutter->dim() != 2 || placement->dim() != 2))
    throw Error(ErrorKind::DimensionMismatch, "cutter and placement must be planar");

  const AxisAlignedBox& box = measures.support();
  const Vec pad = (box.hi - box.lo) * 0.1;
  Vec lo = box.lo - pad, hi = box.hi + pad;
  for (int i = 0; i < 2; ++i)
    if (hi[i] - lo[i] < 1e-9) {
      lo[i] -= 0.5;
      hi[i] += 0.5;
    }
  const double w = hi[0] - lo[0], h = hi[1] - lo[1];
  // SVG's y axis points down; world y is flipped.
  auto X = [&](double x) { return detail::fmt(x); };
  auto Y = [&](double y) { return detail::fmt(lo[1] + hi[1] - y); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" << X(lo[0]) << ' ' << X(lo[1]) << ' ' << X(w) << ' '
      << X(h) << "\" width=\"" << detail::fmt(opt.width) << "\" height=\"" << detail::fmt(opt.width * h / w) << "\">\n";
  out << "<rect x=\"" << X(lo[0]) << "\" y=\"" << X(lo[1]) << "\" width=\"" << X(w) << "\" height=\"" << X(h)
      << "\" fill=\"white\"/>\n";

  double max_weight = 0.0;
  for (std::size_t i = 0; i < measures.size(); ++i)
    for (const auto& k : measures[i].kernels()) max_weight = std::max(max_weight, k.weight);
  const double dot = 0.006 * std::max(w, h);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const char* colour = detail::kPalette[i % std::size(detail::kPalette)];
    out << "<g class=\"measure\" data-index=\"" << i << "\" fill=\"" << colour << "\" fill-opacity=\"0.7\">\n";
    for (const auto& k : measures[i].kernels())
      out << "<circle cx=\"" << X(k.center[0]) << "\" cy=\"" << Y(k.center[1]) << "\" r=\""
          << detail::fmt(dot * std::sqrt(k.weight / max_weight)) << "\"/>\n";
    out << "</g>\n";
  }

  const double stroke = 0.003 * std::max(w, h);
  if (placement && placement->is_body()) {
    const Body& b = placement->as_body();
    std::vector<Polygon> rings;
    if (const auto* disk = std::get_if<Disk>(&cutter->shape())) {
      Polygon ring;
      for (int k = 0; k < opt.circle_segments; ++k) {
        const double t = kTwoPi * k / opt.circle_segments;
        ring.push_back(cutter->star_point() + Vec(std::cos(t), std::sin(t)) * disk->radius);
      }
      rings.push_back(std::move(ring));
    } else if (const auto* holed = std::get_if<PolygonWithHole>(&cutter->shape())) {
      rings = {holed->outer, holed->hole};
    } else {
      rings.push_back(cutter->outline());
    }
    out << "<path class=\"cutter\" fill=\"#000\" fill-opacity=\"0.08\" fill-rule=\"evenodd\" stroke=\"#000\" "
           "stroke-width=\""
        << detail::fmt(stroke) << "\" d=\"";
    for (const auto& ring : rings) {
      for (std::size_t k = 0; k < ring.size(); ++k) {
        const Vec p = to_world(*cutter, b, ring[k]);
        out << (k == 0 ? "M" : " L") << X(p[0]) << ',' << Y(p[1]);
      }
      out << " Z ";
    }
    out << "\"/>\n";
  } else if (placement) {
    const HalfSpace& hs = placement->as_half_space();
    const auto seg = detail::clip_line(hs.normal, hs.offset, lo, hi);
    if (seg.size() == 2)
      out << "<line class=\"cutter\" x1=\"" << X(seg[0][0]) << "\" y1=\"" << Y(seg[0][1]) << "\" x2=\""
          << X(seg[1][0]) << "\" y2=\"" << Y(seg[1][1]) << "\" stroke=\"#000\" stroke-width=\"" << detail::fmt(stroke)
          << "\"/>\n";
  }

  if (placement) {
    const PlacedCutter placed(*cutter, *placement);
    const double line = 0.04 * h;
    out << "<g class=\"legend\" font-family=\"monospace\" font-size=\"" << detail::fmt(0.7 * line) << "\">\n";
    for (std::size_t i = 0; i < measures.size(); ++i) {
      const double t = measures[i].total();
      const double r = (2.0 * mass_in(measures[i], placed) - t) / t;
      char label[64];
      std::snprintf(label, sizeof label, "measure %zu: residual %+.3e", i, r);
      out << "<text x=\"" << X(lo[0] + 0.02 * w) << "\" y=\"" << X(lo[1] + line * static_cast<double>(i + 1))
          << "\" fill=\"" << detail::kPalette[i % std::size(detail::kPalette)] << "\">" << label << "</text>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ccbisect
