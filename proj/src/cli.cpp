#include "covfield/cli.hpp"

#include "covfield/experiments.hpp"
#include "covfield/io.hpp"
#include "covfield/log.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace covfield {

namespace {

struct Output {
  std::string text;
  std::string summary;
};

// Writes to --out when given, else to stdout.
void emit(const Output& o, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << o.text;
  } else {
    write_text_file(path, o.text);
    if (!o.summary.empty()) out << o.summary;
  }
}

std::string record_text(const std::string& command, const Json& config, const Json& payload) {
  return dump_json(ResultRecord{command, config, payload}.to_json());
}

Json rank_json(const RankReport& r) {
  return Json{{"rank", r.rank},
              {"full_rank", r.full_rank},
              {"smallest_retained", number_json(r.smallest_retained)},
              {"singular_values", vector_json(r.singular_values)}};
}

bool wants_json(const std::string& format, const std::string& path) {
  if (!format.empty()) return format == "json";
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "bad integer list '" + text + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Validation, "empty integer list");
  return out;
}

// ---- field -------------------------------------------------------------

struct FieldArgs {
  std::string pmf;
  std::string amplitude = "unit";
  std::string grid;
  int resolution = 8;
  double extent = 1.0;
  std::string format;
  std::string out;
};

Output run_field(const FieldArgs& a) {
  const Pmf f = pmf_from_json(read_json_file(a.pmf));
  const Amplitude r = Amplitude::parse(a.amplitude);
  const std::vector<Point> grid =
      a.grid.empty() ? make_grid(f.manifold(), a.resolution, a.extent)
                     : points_from_json(f.manifold(), read_json_file(a.grid), a.grid);
  const auto rows = field_grid(f, grid, r);
  const int n = f.manifold().dimension();
  const int amb = f.manifold().ambient_dimension();
  Output o;
  if (wants_json(a.format, a.out)) {
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json sigma = Json::array();
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) sigma.push_back(number_json(row.sigma(i, k)));
      }
      arr.push_back(Json{{"q", vector_json(row.q)},
                         {"trace", number_json(row.trace)},
                         {"eigenvalues", vector_json(row.eigenvalues)},
                         {"sigma", sigma},
                         {"degenerate", row.degenerate}});
    }
    const Json config{{"pmf", pmf_to_json(f)}, {"amplitude", r.tag()}, {"grid_points", grid.size()}};
    o.text = record_text("field", config, Json{{"manifold", f.manifold().tag()}, {"rows", arr}});
  } else {
    std::vector<std::string> header;
    for (int i = 0; i < amb; ++i) header.push_back("q" + std::to_string(i));
    header.push_back("trace");
    for (int i = 0; i < n; ++i) header.push_back("eig" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) header.push_back("s" + std::to_string(i) + std::to_string(k));
    }
    header.push_back("degenerate");
    o.text = csv_row(header);
    for (const auto& row : rows) {
      std::vector<std::string> cells;
      for (int i = 0; i < amb; ++i) cells.push_back(csv_number(row.q(i)));
      cells.push_back(csv_number(row.trace));
      for (int i = 0; i < n; ++i) cells.push_back(csv_number(row.eigenvalues(i)));
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) cells.push_back(csv_number(row.sigma(i, k)));
      }
      cells.push_back(row.degenerate ? "1" : "0");
      o.text += csv_row(cells);
    }
  }
  o.summary = "field: " + std::to_string(rows.size()) + " grid points\n";
  return o;
}

// ---- demo-s2 -----------------------------------------------------------

struct DemoArgs {
  int k = 2000;
  std::uint64_t seed = 0;
  std::string amplitude = "optimal:R=3.141592653589793";
  std::string out;
};

Output run_demo(const DemoArgs& a) {
  const Amplitude r = Amplitude::parse(a.amplitude);
  const DemoS2Report d = demo_s2(a.k, a.seed, r);
  auto block = [](const PairwiseStats& s, double target, double z) {
    return Json{{"mean", number_json(s.mean)},
                {"standard_error", number_json(s.standard_error)},
                {"target", number_json(target)},
                {"z", number_json(z)},
                {"within_3_se", std::abs(z) <= 3.0},
                {"pairs", s.pairs}};
  };
  const double kk = static_cast<double>(a.k);
  const Json payload{
      {"k", a.k},
      {"seed", a.seed},
      {"unit", block(d.unit_stats, d.unit_target, d.unit_z)},
      {"adjusted", block(d.adjusted_stats, d.adjusted_target, d.adjusted_z)},
      {"adjusted_amplitude", r.tag()},
      {"per_pair_ratio", number_json(d.ratio)},
      {"per_pair_ratio_target", number_json(d.unit_target / d.adjusted_target)},
      {"ratio_exceeds_6", d.ratio > 6.0},
      // The printed comparison carries an extra (k-1) factor; reported only.
      {"printed_inequality_with_k_minus_1_holds", d.ratio > 6.0 * (kk - 1.0)}};
  const Json config{{"k", a.k}, {"seed", a.seed}, {"amplitude", r.tag()}};
  Output o;
  o.text = record_text("demo-s2", config, payload);
  std::ostringstream s;
  s.precision(8);
  s << "demo-s2: unit " << d.unit_stats.mean << " +- " << d.unit_stats.standard_error << " (target "
    << d.unit_target << "), adjusted " << d.adjusted_stats.mean << " +- "
    << d.adjusted_stats.standard_error << " (target " << d.adjusted_target << "), ratio "
    << d.ratio << "\n";
  o.summary = s.str();
  return o;
}

// ---- rank-scan ---------------------------------------------------------

struct RankArgs {
  std::string manifold = "sphere2";
  int k = 10;
  int trials = 100;
  std::string amplitude = "unit";
  std::uint64_t seed = 0;
  double tol = 1e-9;
  double spread = -1.0;
  std::string out;
};

Output run_rank(const RankArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  const Amplitude r = Amplitude::parse(a.amplitude);
  const RankScanReport rep = rank_scan(m, a.k, a.trials, r, a.seed, a.tol, a.spread);
  Output o;
  o.text = csv_row({"trial", "rank", "smallest_retained", "smallest_singular", "full_rank"});
  for (const auto& row : rep.rows) {
    const Vec& sv = row.report.singular_values;
    o.text += csv_row({std::to_string(row.trial), std::to_string(row.report.rank),
                       csv_number(row.report.smallest_retained), csv_number(sv(sv.size() - 1)),
                       row.report.full_rank ? "1" : "0"});
  }
  o.summary = "rank-scan " + m.tag() + " k=" + std::to_string(a.k) + ": rank in [" +
              std::to_string(rep.min_rank) + ", " + std::to_string(rep.max_rank) + "], full rank in " +
              std::to_string(rep.full_rank_count) + "/" + std::to_string(a.trials) + " trials\n";
  return o;
}

// ---- recover -----------------------------------------------------------

struct RecoverArgs {
  std::string problem;
  std::string manifold = "sphere2";
  int k = 10;
  std::uint64_t seed = 0;
  std::string amplitude = "unit";
  std::string invariant;
  double tol = 1e-12;
  int max_iter = 5000;
  std::string method = "newton";
  double spread = -1.0;
  std::string out;
};

Output run_recover(const RecoverArgs& a) {
  ProblemFile p;
  if (!a.problem.empty()) {
    p = problem_from_json(read_json_file(a.problem));
  } else {
    p.manifold = Manifold::parse(a.manifold);
    p.amplitude = Amplitude::parse(a.amplitude);
    const SyntheticProblem s = synthetic_problem(p.manifold, a.k, a.seed, a.spread);
    p.support = s.support;
    p.observations = s.observations;
    p.ground_truth = s.truth;
  }
  SolverOptions opt;
  opt.kind = !a.invariant.empty() ? parse_invariant(a.invariant)
                                  : p.invariant.value_or(InvariantKind::TrDifSq);
  opt.grad_tol = a.tol;
  opt.max_iter = a.max_iter;
  opt.seed = a.seed;
  if (a.method == "gradient") {
    opt.method = SolverMethod::ProjectedGradient;
  } else if (a.method != "newton") {
    throw Error(ErrorKind::Validation, "unknown method '" + a.method + "'");
  }
  const CovarianceSet c = p.covariance_set();
  const RecoveryResult res = recover_pmf(c, p.support, opt);

  Json warnings = Json::array();
  if (res.rank_deficient) {
    warnings.push_back("RankDeficient: Y has rank " + std::to_string(res.rank.rank) + " < k = " +
                       std::to_string(p.support.size()) + "; the minimizer may not be unique");
  }
  if (res.ridge_applied) warnings.push_back("PsdRidge: a singular Sigma[f]_j was regularized");
  if (!res.converged) warnings.push_back("NoConvergence: gradient tolerance not reached");
  Json history = Json::array();
  for (double h : res.history) history.push_back(number_json(h));
  Json payload{{"invariant", std::string(to_string(opt.kind))},
               {"weights", vector_json(res.weights)},
               {"h_value", number_json(res.h_value)},
               {"iterations", res.iterations},
               {"converged", res.converged},
               {"rank", rank_json(res.rank)},
               {"history", history},
               {"warnings", warnings}};
  if (p.ground_truth) {
    payload["ground_truth"] = vector_json(*p.ground_truth);
    payload["error_l2"] = number_json((res.weights - *p.ground_truth).norm());
  }
  Json problem = problem_to_json(p);
  const Json config{{"problem", problem},
                    {"invariant", std::string(to_string(opt.kind))},
                    {"tol", a.tol},
                    {"max_iter", a.max_iter},
                    {"method", a.method}};
  Output o;
  o.text = record_text("recover", config, payload);
  std::ostringstream s;
  s.precision(6);
  s << "recover: H=" << res.h_value << " after " << res.iterations << " iterations"
    << (res.converged ? "" : " (not converged)");
  if (p.ground_truth) s << ", |f-f0|=" << (res.weights - *p.ground_truth).norm();
  if (res.rank_deficient) s << ", rank-deficient Y";
  s << "\n";
  o.summary = s.str();
  return o;
}

// ---- consistency -------------------------------------------------------

struct ConsistencyArgs {
  std::string manifold = "sphere2";
  int k = 10;
  std::uint64_t seed = 0;
  int trials = 20;
  int levels = 6;
  std::string invariant = "lik";
  std::string amplitude = "unit";
  std::string out;
};

Output run_consistency(const ConsistencyArgs& a) {
  const Manifold m = Manifold::parse(a.manifold);
  if (a.levels < 1) throw Error(ErrorKind::Validation, "levels must be positive");
  const SyntheticProblem s = synthetic_problem(m, a.k, a.seed);
  ConsistencyOptions opt;
  for (int i = 1; i <= a.levels; ++i) opt.noise.push_back(std::ldexp(1.0, -i));
  opt.seeds = a.trials;
  opt.seed = a.seed;
  opt.amplitude = Amplitude::parse(a.amplitude);
  opt.solver.kind = parse_invariant(a.invariant);
  if (!is_convex(opt.solver.kind)) {
    throw Error(ErrorKind::Validation, "consistency needs a convex invariant");
  }
  const ConsistencyReport rep = consistency_experiment(
      s.truth, s.support, ObservationSet::from_points(s.observations), opt);
  Output o;
  o.text = csv_row({"level", "noise", "median_error", "h_deviation", "h_bound"});
  for (std::size_t i = 0; i < rep.noise.size(); ++i) {
    const bool trdif = opt.solver.kind == InvariantKind::TrDifSq;
    o.text += csv_row({std::to_string(i + 1), csv_number(rep.noise[i]),
                       csv_number(rep.median_error[i]), trdif ? csv_number(rep.h_deviation[i]) : "",
                       trdif ? csv_number(rep.h_bound[i]) : ""});
  }
  std::ostringstream sum;
  sum.precision(6);
  sum << "consistency: median error " << (rep.median_monotone ? "decreases" : "does not decrease")
      << " monotonically, fitted rate " << rep.fitted_rate;
  if (opt.solver.kind == InvariantKind::TrDifSq) {
    sum << ", bound " << (rep.bound_holds ? "holds" : "violated");
  }
  sum << "\n";
  o.summary = sum.str();
  return o;
}

// ---- continuous-recover ------------------------------------------------

struct ContinuousArgs {
  double radius = 1.0;
  std::string resolutions = "1,2,4";
  std::uint64_t seed = 0;
  int trials = 1;
  std::string target = "mixture";
  std::string placement = "uniform";
  std::string invariant = "trdifsq";
  std::string amplitude = "unit";
  std::string out;
};

Output run_continuous(const ContinuousArgs& a) {
  const std::vector<int> ms = parse_int_list(a.resolutions);
  if (a.target != "uniform" && a.target != "mixture" && a.target != "point") {
    throw Error(ErrorKind::Validation, "target must be 'uniform', 'mixture' or 'point'");
  }
  if (a.placement != "uniform" && a.placement != "center") {
    throw Error(ErrorKind::Validation, "placement must be 'uniform' or 'center'");
  }
  Output o;
  o.text = csv_row({"seed", "m", "cells", "total_variation", "mc_draws", "mc_max_se", "converged",
                    "atom_cell_mass"});
  for (int t = 0; t < a.trials; ++t) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(t);
    for (int m : ms) {
      ContinuousOptions opt;
      opt.cap_radius = a.radius;
      opt.resolution = m;
      opt.seed = seed;
      opt.kind = parse_invariant(a.invariant);
      opt.amplitude = Amplitude::parse(a.amplitude);
      opt.placement = a.placement == "center" ? Placement::CellCenter : Placement::UniformRandom;
      std::string atom_mass;
      ContinuousReport rep;
      if (a.target == "point") {
        const CapPartition part = partition_cap(a.radius, 1.0 / m);
        const std::size_t cell = part.cells.size() / 2;
        rep = continuous_recovery(ContinuousTarget::point_mass(part.cells[cell].center()), opt);
        atom_mass = csv_number(rep.recovered(static_cast<Eigen::Index>(cell)));
      } else if (a.target == "mixture") {
        rep = continuous_recovery(ContinuousTarget::concentric_mixture(a.radius, a.radius / 2), opt);
      } else {
        rep = continuous_recovery(ContinuousTarget::uniform_cap(a.radius), opt);
      }
      o.text += csv_row({std::to_string(seed), std::to_string(m),
                         std::to_string(rep.partition.cells.size()),
                         csv_number(rep.total_variation), std::to_string(rep.mc_draws),
                         csv_number(rep.mc_max_se), rep.solver.converged ? "1" : "0", atom_mass});
    }
  }
  o.summary = "continuous-recover: " + std::to_string(a.trials * ms.size()) + " runs\n";
  return o;
}

// ---- lipschitz ---------------------------------------------------------

struct LipschitzArgs {
  double diameter = std::numbers::pi / 2;
  long long samples = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

Output run_lipschitz(const LipschitzArgs& a) {
  const LipschitzReport rep = lipschitz_probe(a.diameter, a.samples, a.seed);
  const Json payload{{"diameter", number_json(rep.diameter)},
                     {"samples", rep.samples},
                     {"empirical_beta", number_json(rep.empirical_beta)},
                     {"bound", number_json(rep.bound)},
                     {"within_bound", rep.empirical_beta <= rep.bound}};
  const Json config{{"diameter", a.diameter}, {"samples", a.samples}, {"seed", a.seed}};
  Output o;
  o.text = record_text("lipschitz", config, payload);
  std::ostringstream s;
  s.precision(8);
  s << "lipschitz: beta " << rep.empirical_beta << " vs rho/sin(rho) " << rep.bound << "\n";
  o.summary = s.str();
  return o;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Parse:
    case ErrorKind::Io:
    case ErrorKind::MismatchedBase:
    case ErrorKind::CutLocus:
      return kExitValidation;
    case ErrorKind::ChartOverflow:
    case ErrorKind::SingularJacobian:
    case ErrorKind::NotSpd:
    case ErrorKind::DomainError:
    case ErrorKind::NoConvergence:
    case ErrorKind::RankDeficient:
      return kExitNumerical;
  }
  return kExitNumerical;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covariance tensor fields on R^n, S^2 and H^2, and pmf recovery from them",
               "covfield"};
  app.require_subcommand(1);

  FieldArgs field;
  auto* c_field = app.add_subcommand("field", "Evaluate Sigma, tr(G Sigma) and eigenvalues on a grid");
  c_field->add_option("--pmf", field.pmf, "pmf JSON file")->required();
  c_field->add_option("--amplitude", field.amplitude, "unit | a=<v> | optimal:R=<v>");
  c_field->add_option("--grid", field.grid, "JSON array of grid points (default: generated grid)");
  c_field->add_option("--resolution", field.resolution, "generated grid resolution");
  c_field->add_option("--extent", field.extent, "generated grid radius or half-width");
  c_field->add_option("--format", field.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  c_field->add_option("--out", field.out, "output file (default stdout)");

  DemoArgs demo;
  auto* c_demo = app.add_subcommand("demo-s2", "Uniform S^2 pairwise trace statistics");
  c_demo->add_option("--k", demo.k, "sample size");
  c_demo->add_option("--seed", demo.seed, "RNG seed");
  c_demo->add_option("--amplitude", demo.amplitude, "amplitude of the adjusted estimate");
  c_demo->add_option("--out", demo.out, "output JSON file");

  RankArgs rank;
  auto* c_rank = app.add_subcommand("rank-scan", "Numerical rank of Y over random trials");
  c_rank->add_option("--manifold", rank.manifold, "euclidean:n | sphere2 | hyperbolic2");
  c_rank->add_option("--k", rank.k, "points per trial");
  c_rank->add_option("--trials", rank.trials, "number of trials");
  c_rank->add_option("--amplitude", rank.amplitude, "unit | a=<v> | optimal:R=<v>");
  c_rank->add_option("--seed", rank.seed, "RNG seed");
  c_rank->add_option("--tol", rank.tol, "relative singular value cutoff");
  c_rank->add_option("--spread", rank.spread, "sampling radius (default per manifold)");
  c_rank->add_option("--out", rank.out, "output CSV file");

  RecoverArgs rec;
  auto* c_rec = app.add_subcommand("recover", "Recover a pmf from a covariance set");
  c_rec->add_option("--problem", rec.problem, "problem JSON file (default: synthesize)");
  c_rec->add_option("--manifold", rec.manifold, "manifold for a synthesized problem");
  c_rec->add_option("--k", rec.k, "support size for a synthesized problem");
  c_rec->add_option("--seed", rec.seed, "RNG seed");
  c_rec->add_option("--amplitude", rec.amplitude, "amplitude for a synthesized problem");
  c_rec->add_option("--invariant", rec.invariant, "trdifsq | lik | trsq");
  c_rec->add_option("--tol", rec.tol, "projected-gradient tolerance");
  c_rec->add_option("--max-iter", rec.max_iter, "iteration limit");
  c_rec->add_option("--method", rec.method, "newton | gradient");
  c_rec->add_option("--spread", rec.spread, "sampling radius for a synthesized problem");
  c_rec->add_option("--out", rec.out, "output JSON file");

  ConsistencyArgs cons;
  auto* c_cons = app.add_subcommand("consistency", "Recovery error under shrinking tensor noise");
  c_cons->add_option("--manifold", cons.manifold, "euclidean:n | sphere2 | hyperbolic2");
  c_cons->add_option("--k", cons.k, "support size");
  c_cons->add_option("--seed", cons.seed, "RNG seed");
  c_cons->add_option("--trials", cons.trials, "noise seeds per level");
  c_cons->add_option("--levels", cons.levels, "noise levels 2^-1 .. 2^-levels");
  c_cons->add_option("--invariant", cons.invariant, "trdifsq | lik | trsq");
  c_cons->add_option("--amplitude", cons.amplitude, "unit | a=<v> | optimal:R=<v>");
  c_cons->add_option("--out", cons.out, "output CSV file");

  ContinuousArgs cont;
  auto* c_cont = app.add_subcommand("continuous-recover", "Cell masses of a distribution on an S^2 cap");
  c_cont->add_option("--radius", cont.radius, "cap radius");
  c_cont->add_option("--resolutions", cont.resolutions, "comma-separated m values");
  c_cont->add_option("--seed", cont.seed, "first RNG seed");
  c_cont->add_option("--trials", cont.trials, "number of consecutive seeds");
  c_cont->add_option("--target", cont.target, "uniform | mixture (caps of radius R and R/2) | point");
  c_cont->add_option("--placement", cont.placement, "uniform | center");
  c_cont->add_option("--invariant", cont.invariant, "trdifsq | lik | trsq");
  c_cont->add_option("--amplitude", cont.amplitude, "unit | a=<v> | optimal:R=<v>");
  c_cont->add_option("--out", cont.out, "output CSV file");

  LipschitzArgs lip;
  auto* c_lip = app.add_subcommand("lipschitz", "Empirical Lipschitz constant of the log map");
  c_lip->add_option("--diameter", lip.diameter, "ball diameter rho < pi");
  c_lip->add_option("--samples", lip.samples, "sampled triples");
  c_lip->add_option("--seed", lip.seed, "RNG seed");
  c_lip->add_option("--out", lip.out, "output JSON file");

  std::vector<const char*> argv{"covfield"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (c_field->parsed()) emit(run_field(field), field.out, out);
    if (c_demo->parsed()) emit(run_demo(demo), demo.out, out);
    if (c_rank->parsed()) emit(run_rank(rank), rank.out, out);
    if (c_rec->parsed()) emit(run_recover(rec), rec.out, out);
    if (c_cons->parsed()) emit(run_consistency(cons), cons.out, out);
    if (c_cont->parsed()) emit(run_continuous(cont), cont.out, out);
    if (c_lip->parsed()) emit(run_lipschitz(lip), lip.out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: Parse: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace covfield
