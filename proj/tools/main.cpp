// ohrr command-line front end: validate / solve / trace / certify /
// converse / simulate / oracle over JSON instance files.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ohrr/io.hpp"
#include "ohrr/matcore.hpp"

namespace {

using namespace ohrr;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ParseError:
      return 2;
    case ErrorKind::InvalidMatrix:
    case ErrorKind::JointCovarianceNotPSD:
    case ErrorKind::DistortionBlockNotPSD:
    case ErrorKind::DimMismatch:
      return 3;
    case ErrorKind::NoConvergedStart:
      return 4;
    case ErrorKind::SupportDetectionFailed:
    case ErrorKind::DeltaInconsistent:
    case ErrorKind::DeltaNotPsd:
    case ErrorKind::DeltaZero:
    case ErrorKind::RankConditionViolated:
    case ErrorKind::ConstructionStalled:
    case ErrorKind::ProjectionIdentityFailed:
    case ErrorKind::EnhancementIdentityFailed:
      return 5;
    case ErrorKind::BoundGapExceedsTolerance:
      return 6;
    case ErrorKind::DimensionTooLarge:
      return 7;
    default:
      return 1;
  }
}

struct CommonOpts {
  std::string instance_path;
  double mu = 2.0;
  bool has_mu = false;
  std::string mu_grid = "default";
  double tol = 0.0;  // 0 = library default
  std::uint64_t seed = 1;
  long samples = 200000;
  int starts = 16;
  std::string out;
  bool certify_flag = false;
};

TolPolicy make_tol(const CommonOpts& o) {
  TolPolicy t;
  if (o.tol > 0.0) t.eps_residual = o.tol;
  return t;
}

SolverConfig make_cfg(const CommonOpts& o) {
  SolverConfig c;
  c.seed = o.seed;
  c.num_starts = o.starts;
  return c;
}

// Report file plus its manifest; stdout and stderr in streaming mode.
void emit(const CommonOpts& o, const std::string& command,
          const std::string& report, double wall_s) {
  RunManifest mf;
  mf.command = command;
  mf.instance_path = o.instance_path;
  mf.output_path = o.out;
  mf.wall_time_s = wall_s;
  char buf[64];
  auto add = [&](const std::string& k, const std::string& v) {
    mf.parameters.emplace_back(k, v);
  };
  if (o.has_mu) {
    std::snprintf(buf, sizeof buf, "%.17g", o.mu);
    add("mu", buf);
  }
  if (command == "trace") add("mu_grid", o.mu_grid);
  if (o.tol > 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", o.tol);
    add("tol", buf);
  }
  add("seed", std::to_string(o.seed));
  if (command == "simulate") add("samples", std::to_string(o.samples));
  if (command == "solve" || command == "certify" || command == "converse")
    add("starts", std::to_string(o.starts));

  if (!o.out.empty()) {
    write_file(o.out, report);
    write_file(o.out + ".manifest.json", manifest_to_json(mf));
  } else {
    std::cout << report;
    std::cerr << manifest_to_json(mf);
  }
}

int cmd_validate(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  std::ostringstream os;
  const bool trivial = detect_trivial(inst, tol);
  const auto dir = assumption_check(inst, tol);
  os << "{\n  \"valid\": true,\n  \"m\": " << inst.m
     << ",\n  \"trivial_region\": " << (trivial ? "true" : "false")
     << ",\n  \"rank_K_X\": " << rank_kx(inst, tol)
     << ",\n  \"rank_K_Y\": " << rank_ky(inst, tol)
     << ",\n  \"assumption_direction\": ";
  if (dir) {
    os << matrix_to_json(*dir);
  } else {
    os << "null";
  }
  os << "\n}\n";
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "validate", os.str(), wall);
  return 0;
}

int cmd_solve(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  const DispatchResult res = solve_dispatch(inst, o.mu, make_cfg(o), tol);
  std::optional<CertificateReport> cert;
  if (o.certify_flag && res.path == SolvePath::PG2 && res.solution) {
    const ReducedInstance red = reduce_singular_kx(inst, tol);
    cert = certify(red.inner, o.mu, res.solution->params, tol);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "solve", dispatch_to_json(res, o.mu, cert ? &*cert : nullptr), wall);
  return 0;
}

int cmd_trace(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  std::vector<double> grid;
  if (o.mu_grid == "default") {
    grid = default_mu_grid();
  } else {
    std::stringstream ss(o.mu_grid);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
  }
  bool any_failed = false;
  std::vector<RatePoint> pts;
  for (const double mu : grid) {
    try {
      pts.push_back(solve_dispatch(inst, mu, make_cfg(o), tol).point);
    } catch (const Error&) {
      RatePoint p;
      p.mu = mu;
      p.r1 = p.r2 = p.v = std::nan("");
      pts.push_back(p);
      any_failed = true;
    }
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "trace", rate_points_to_csv(pts), wall);
  return any_failed ? 1 : 0;
}

int cmd_certify(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  if (o.mu <= 1.0) {
    std::cerr << "certify requires --mu > 1 (the P_G2 branch)\n";
    return 1;
  }
  const ReducedInstance red = reduce_singular_kx(inst, tol);
  if (red.status != ReductionStatus::Regular) {
    std::cerr << "instance is " << reduction_status_name(red.status)
              << "; nothing to certify\n";
    return 1;
  }
  const SolverSolution sol = solve_pg2(red.inner, o.mu, make_cfg(o));
  const CertificateReport rep = certify(red.inner, o.mu, sol.params, tol);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "certify", certificate_to_json(rep), wall);
  return rep.pass ? 0 : 5;
}

int cmd_converse(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  if (o.mu <= 1.0) {
    std::cerr << "converse requires --mu > 1 (use solve for the pt-pt branch)\n";
    return 1;
  }
  const ReducedInstance red = reduce_singular_kx(inst, tol);
  if (red.status != ReductionStatus::Regular) {
    std::cerr << "instance is " << reduction_status_name(red.status) << "\n";
    return 1;
  }
  const ConverseReport rep = run_converse(red.inner, o.mu, make_cfg(o), tol);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "converse", converse_to_json(rep), wall);
  if (!rep.certificate.pass) return 5;
  if (!rep.bound.pass) return 6;
  return 0;
}

int cmd_simulate(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  const ReducedInstance red = reduce_singular_kx(inst, tol);
  CanonicalInstance work = red.inner;
  SchemeParams params{SymMat::zero(work.m), SymMat::zero(work.m)};
  if (red.status == ReductionStatus::InfiniteRate)
    throw Error(ErrorKind::InfiniteRate, "rate region empty; nothing to simulate");
  if (red.status == ReductionStatus::Regular) {
    const DispatchResult res = solve_dispatch(work, o.mu, make_cfg(o), tol);
    if (res.path == SolvePath::PG2PerturbedKy) {
      work = perturb_singular_ky(work, res.schedule->ns.back(), tol);
      params = res.solution->params;
    } else if (res.params_original) {
      params = *res.params_original;
    }
  }
  const TestChannels ch = build_test_channels(work, params, tol);
  SimConfig sim;
  sim.num_samples = o.samples;
  sim.seed = o.seed;
  const SimReport rep = simulate_scheme(work, ch, work.d, sim);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "simulate", sim_report_to_json(rep), wall);
  if (!o.out.empty()) write_file(o.out + ".slack.csv", sim_slack_to_csv(rep));
  return rep.pass ? 0 : 1;
}

int cmd_oracle(const CommonOpts& o) {
  const TolPolicy tol = make_tol(o);
  const auto t0 = std::chrono::steady_clock::now();
  const CanonicalInstance inst = load_instance_file(o.instance_path, tol);
  const OracleResult res = grid_oracle_full(inst, o.mu);
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", o.mu);
  os << "{\n  \"mu\": " << buf << ",\n";
  std::snprintf(buf, sizeof buf, "%.17g", res.value);
  os << "  \"value\": " << buf << ",\n";
  os << "  \"B1\": " << matrix_to_json(res.argmin.b1.mat()) << ",\n";
  os << "  \"B2\": " << matrix_to_json(res.argmin.b2.mat()) << "\n}\n";
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(o, "oracle", os.str(), wall);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate region of the vector Gaussian one-helper source-coding "
               "problem: solver, converse verification, and Monte Carlo checks"};
  app.require_subcommand(1);

  CommonOpts o;
  const auto add_common = [&](CLI::App* sub, bool needs_mu) {
    sub->add_option("instance", o.instance_path, "instance JSON file")
        ->required();
    auto* mu_opt = sub->add_option("--mu", o.mu, "weight of R1 in mu*R1 + R2");
    if (needs_mu) mu_opt->required();
    sub->add_option("--tol", o.tol, "residual tolerance override");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--samples", o.samples, "Monte Carlo sample count");
    sub->add_option("--starts", o.starts, "solver multi-start count");
    sub->add_option("--out", o.out, "write the report to this path");
    return mu_opt;
  };

  auto* validate = app.add_subcommand("validate", "parse and check an instance");
  add_common(validate, false);

  auto* solve = app.add_subcommand("solve", "minimum weighted sum rate at mu");
  add_common(solve, true);
  solve->add_flag("--certify", o.certify_flag, "include a KKT certificate summary");

  auto* trace = app.add_subcommand("trace", "trace the region boundary (CSV)");
  add_common(trace, false);
  trace->add_option("--mu-grid", o.mu_grid,
                    "comma-separated mu values or \"default\"");

  auto* certify = app.add_subcommand("certify", "KKT certificate at the optimum");
  add_common(certify, true);

  auto* converse =
      app.add_subcommand("converse", "full converse pipeline and bound gap");
  add_common(converse, true);

  auto* simulate =
      app.add_subcommand("simulate", "Monte Carlo validation of the scheme");
  add_common(simulate, true);

  auto* oracle = app.add_subcommand("oracle", "brute-force grid oracle (m <= 2)");
  add_common(oracle, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(solve)) {
      o.has_mu = true;
      return cmd_solve(o);
    }
    if (app.got_subcommand(validate)) return cmd_validate(o);
    if (app.got_subcommand(trace)) return cmd_trace(o);
    if (app.got_subcommand(certify)) {
      o.has_mu = true;
      return cmd_certify(o);
    }
    if (app.got_subcommand(converse)) {
      o.has_mu = true;
      return cmd_converse(o);
    }
    if (app.got_subcommand(simulate)) {
      o.has_mu = true;
      return cmd_simulate(o);
    }
    if (app.got_subcommand(oracle)) {
      o.has_mu = true;
      return cmd_oracle(o);
    }
  } catch (const ohrr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
