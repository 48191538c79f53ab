#include <CLI11.hpp>

#include "ccbisect/cli.hpp"

namespace cli = ccbisect::cli;

int main(int argc, char** argv) {
  CLI::App app{"Find a scaled, translated (optionally rotated) copy of a cutter shape that bisects d+1 measures."};
  app.require_subcommand(1);
  const std::vector<std::string> modes{"homothety", "axis", "similarity"};

  cli::SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve for a bisecting placement");
  s->add_option("--cutter", solve.cutter, "Cutter JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--measures", solve.measures, "Measures (CSV or JSON)")->required();
  s->add_option("--mode", solve.mode, "Placement family")->check(CLI::IsMember(modes))->capture_default_str();
  s->add_option("--tol", solve.tol, "Residual tolerance in (0, 0.1)")->capture_default_str();
  s->add_option("--max-depth", solve.max_depth, "Subdivision depth (at most 20)")->capture_default_str();
  s->add_option("--seed", solve.seed, "Seed for multistart jitter")->capture_default_str();
  s->add_option("--kernel-radius", solve.kernel_radius, "Override every kernel radius");
  s->add_option("--delta", solve.delta, "Margin of the compactified scale coordinate")->capture_default_str();
  s->add_option("--branch", solve.branch, "Scale-root branch for cutters that are not star-shaped");
  s->add_option("--out", solve.out, "Write the result JSON here instead of stdout");
  s->add_flag("--timing,!--no-timing", solve.timing, "Include timing fields in the result (default on)");

  cli::VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Recompute the masses of a solve result");
  v->add_option("--result", verify.result, "Result JSON")->required();
  v->add_option("--measures", verify.measures, "Measures (CSV or JSON)")->required();
  v->add_option("--cutter", verify.cutter, "Cutter JSON (default: the one in the result)");
  v->add_option("--tol", verify.tol, "Tolerance (default: the one in the result)");
  v->add_option("--kernel-radius", verify.kernel_radius, "Override every kernel radius");

  cli::OracleArgs oracle;
  auto* o = app.add_subcommand("oracle", "Brute-force grid search");
  o->add_option("--cutter", oracle.cutter, "Cutter JSON")->required();
  o->add_option("--measures", oracle.measures, "Measures (CSV or JSON)")->required();
  o->add_option("--mode", oracle.mode, "Placement family")->check(CLI::IsMember(modes))->capture_default_str();
  o->add_option("--n-c", oracle.n_c, "Centres per axis")->capture_default_str();
  o->add_option("--n-theta", oracle.n_theta, "Rotation angles (similarity mode)")->capture_default_str();
  o->add_option("--margin", oracle.margin, "Centre box margin in support diagonals")->capture_default_str();
  o->add_flag("--reflections", oracle.reflections, "Also try reflected copies");
  o->add_option("--kernel-radius", oracle.kernel_radius, "Override every kernel radius");
  o->add_option("--out", oracle.out, "Write JSON here instead of stdout");

  cli::GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a seeded random instance (measures.csv, cutter.json)");
  g->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  g->add_option("--dim", gen.spec.dim, "Dimension (2 or 3)")->check(CLI::IsMember({2, 3}))->capture_default_str();
  g->add_option("--measures", gen.spec.measures, "Measure count (default d+1)");
  g->add_option("--blobs", gen.spec.blobs, "Blobs per measure")->capture_default_str();
  g->add_option("--kernels-per-blob", gen.spec.kernels_per_blob, "Kernels per blob")->capture_default_str();
  g->add_option("--spread", gen.spec.spread, "Blob centres lie in [-spread, spread]^d")->capture_default_str();
  g->add_option("--blob-width", gen.spec.blob_width, "Blob standard deviation")->capture_default_str();
  g->add_option("--kernel-radius", gen.spec.kernel_radius, "Kernel radius")->capture_default_str();
  g->add_option("--cutter", gen.cutter, "disk, square or cylinder")->check(CLI::IsMember({"disk", "square", "cylinder"}));
  g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

  cli::ParityArgs parity;
  auto* p = app.add_subcommand("parity-check", "Winding parities of the planar axis chart at alpha = 0 and 1");
  p->add_option("--cutter", parity.cutter, "Cutter JSON")->required();
  p->add_option("--measures", parity.measures, "Measures (CSV or JSON)")->required();
  p->add_option("--alpha-steps", parity.alpha_steps, "Intermediate loops")->capture_default_str();
  p->add_option("--kernel-radius", parity.kernel_radius, "Override every kernel radius");
  p->add_option("--out", parity.out, "Write JSON here instead of stdout");

  cli::RenderArgs render;
  auto* r = app.add_subcommand("render", "Draw a planar instance and a result as SVG");
  r->add_option("--measures", render.measures, "Measures (CSV or JSON)")->required();
  r->add_option("--result", render.result, "Result JSON (optional)");
  r->add_option("--cutter", render.cutter, "Cutter JSON (default: the one in the result)");
  r->add_option("--kernel-radius", render.kernel_radius, "Override every kernel radius");
  r->add_option("--out", render.out, "SVG output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  if (*s) return cli::cmd_solve(solve);
  if (*v) return cli::cmd_verify(verify);
  if (*o) return cli::cmd_oracle(oracle);
  if (*g) return cli::cmd_generate(gen);
  if (*p) return cli::cmd_parity_check(parity);
  return cli::cmd_render(render);
}
