#include "ohrr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ohrr {

using Json = nlohmann::ordered_json;

namespace {

Matrix parse_matrix(const Json& j, const std::string& name, int rows, int cols) {
  if (!j.is_array())
    throw Error(ErrorKind::ParseError, name + " must be an array of arrays");
  const int r = static_cast<int>(j.size());
  if (r == 0) throw Error(ErrorKind::ParseError, name + " is empty");
  if (rows > 0 && r != rows)
    throw Error(ErrorKind::ParseError, name + " has wrong row count");
  int c = -1;
  for (const auto& row : j) {
    if (!row.is_array())
      throw Error(ErrorKind::ParseError, name + " rows must be arrays");
    if (c < 0) c = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != c)
      throw Error(ErrorKind::ParseError, name + " is ragged");
  }
  if (cols > 0 && c != cols)
    throw Error(ErrorKind::ParseError, name + " has wrong column count");
  Matrix a(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) {
      const auto& v = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      if (!v.is_number())
        throw Error(ErrorKind::ParseError, name + " has a non-numeric entry");
      const double x = v.get<double>();
      if (!std::isfinite(x))
        throw Error(ErrorKind::ParseError, name + " has a non-finite entry");
      a(i, k) = x;
    }
  return a;
}

Json matrix_json(const Matrix& a) {
  Json rows = Json::array();
  for (int i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

SymMat parse_sym(const Json& j, const std::string& name, int dim) {
  const Matrix a = parse_matrix(j, name, dim, dim);
  try {
    return SymMat(a);
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, name + ": " + e.what());
  }
}

}  // namespace

CanonicalInstance parse_instance_json(const std::string& text,
                                      const TolPolicy& tol) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw Error(ErrorKind::ParseError, "instance file must be a JSON object");

  static const char* allowed[] = {"m", "K_X", "K_Y", "K_XY", "K_N", "D"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::ParseError, "unknown field \"" + key + "\"");
  }
  if (!j.contains("m") || !j["m"].is_number_integer())
    throw Error(ErrorKind::ParseError, "missing integer field \"m\"");
  const int m = j["m"].get<int>();
  if (m < 1) throw Error(ErrorKind::ParseError, "m must be positive");
  if (!j.contains("K_X") || !j.contains("D"))
    throw Error(ErrorKind::ParseError, "K_X and D are required");

  const SymMat kx = parse_sym(j["K_X"], "K_X", m);
  const SymMat d = parse_sym(j["D"], "D", m);

  const bool has_kn = j.contains("K_N");
  const bool has_ky = j.contains("K_Y");
  const bool has_kxy = j.contains("K_XY");
  if (has_kn == (has_ky || has_kxy))
    throw Error(ErrorKind::ParseError,
                "provide either K_N or the pair (K_Y, K_XY), not both");
  if (has_kn) {
    const SymMat kn = parse_sym(j["K_N"], "K_N", m);
    return canonical_from_kn(kx, kn, d, tol);
  }
  if (!has_ky || !has_kxy)
    throw Error(ErrorKind::ParseError, "K_Y and K_XY must come together");
  if (!j["K_Y"].is_array() || j["K_Y"].empty())
    throw Error(ErrorKind::ParseError, "K_Y must be a nonempty matrix");
  const int k = static_cast<int>(j["K_Y"].size());
  RawInstance raw;
  raw.m = m;
  raw.k = k;
  raw.kx = kx;
  raw.d = d;
  raw.ky = parse_sym(j["K_Y"], "K_Y", k);
  raw.kxy = parse_matrix(j["K_XY"], "K_XY", m, k);
  return canonicalize(raw, tol);
}

CanonicalInstance load_instance_file(const std::string& path,
                                     const TolPolicy& tol) {
  return parse_instance_json(read_file(path), tol);
}

std::string instance_to_json(const CanonicalInstance& inst) {
  Json j;
  j["m"] = inst.m;
  j["K_X"] = matrix_json(inst.kx.mat());
  j["K_N"] = matrix_json(inst.kn.mat());
  j["D"] = matrix_json(inst.d.mat());
  return j.dump(2) + "\n";
}

std::string matrix_to_json(const Matrix& a) { return matrix_json(a).dump(); }

std::string rate_points_to_csv(const std::vector<RatePoint>& pts) {
  std::ostringstream os;
  os << "mu,R1,R2,v\n";
  char buf[128];
  for (const RatePoint& p : pts) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.mu, p.r1,
                  p.r2, p.v);
    os << buf;
  }
  return os.str();
}

namespace {

Json dispatch_json(const DispatchResult& res, double mu) {
  Json j;
  j["mu"] = mu;
  j["path"] = solve_path_name(res.path);
  j["value"] = res.point.v;
  j["R1"] = res.point.r1;
  j["R2"] = res.point.r2;
  if (res.params_original) {
    j["B1"] = matrix_json(res.params_original->b1.mat());
    j["B2"] = matrix_json(res.params_original->b2.mat());
  }
  Json diag;
  diag["reduction_status"] = reduction_status_name(res.reduction);
  diag["reduced_dim"] = res.reduced_dim;
  if (res.solution) {
    diag["converged"] = res.solution->converged;
    diag["start_index"] = res.solution->start_index;
    diag["kkt_grad_residual"] = res.solution->kkt_grad_residual;
  }
  if (res.ptpt) {
    diag["barrier_residual"] = res.ptpt->barrier_residual;
    diag["duality_measure"] = res.ptpt->duality_measure;
  }
  if (res.schedule) {
    Json sch;
    sch["n"] = res.schedule->ns;
    sch["values"] = res.schedule->values;
    sch["extrapolated"] = res.schedule->extrapolated;
    sch["uncertainty"] = res.schedule->uncertainty;
    diag["perturbation_schedule"] = std::move(sch);
  }
  j["diagnostics"] = std::move(diag);
  return j;
}

Json certificate_json(const CertificateReport& rep) {
  Json j;
  Json resid;
  resid["KKT1"] = rep.residuals.kkt1;
  resid["KKT2"] = rep.residuals.kkt2;
  resid["KKT3a"] = rep.residuals.kkt3a;
  resid["KKT3b"] = rep.residuals.kkt3b;
  resid["KKT4"] = rep.residuals.kkt4;
  resid["KKT5"] = rep.residuals.kkt5;
  resid["scale"] = rep.residuals.scale;
  j["residuals"] = std::move(resid);
  j["residuals_pass"] = rep.residuals.pass;
  j["delta"] = matrix_json(rep.delta.mat());
  j["r"] = rep.split.r;
  j["p"] = rep.split.p;
  j["q"] = rep.split.q;
  j["rank_ambiguous"] = rep.split.rank_ambiguous;
  if (rep.split.rank_ambiguous) j["r_alt"] = rep.split.r_alt;
  j["S"] = matrix_json(rep.split.s);
  j["alpha"] = std::vector<double>(rep.split.alpha.begin(), rep.split.alpha.end());
  j["beta"] = std::vector<double>(rep.split.beta.begin(), rep.split.beta.end());
  j["active_residual"] = rep.active_residual;
  j["pass"] = rep.pass;
  return j;
}

Json bound_json(const BoundReport& b) {
  Json j;
  j["v_p1"] = b.v_p1;
  j["v_p2"] = b.v_p2;
  j["lower_bound"] = b.lower_bound;
  j["v_pg2"] = b.v_pg2;
  j["gap"] = b.gap;
  j["oohama5_residual"] = b.oohama5_residual;
  j["pass"] = b.pass;
  return j;
}

}  // namespace

std::string dispatch_to_json(const DispatchResult& res, double mu,
                             const CertificateReport* cert) {
  Json j = dispatch_json(res, mu);
  if (cert) {
    Json c = certificate_json(*cert);
    Json summary;
    summary["pass"] = c["pass"];
    summary["residuals"] = c["residuals"];
    summary["r"] = c["r"];
    summary["p"] = c["p"];
    summary["q"] = c["q"];
    j["certificate"] = std::move(summary);
  }
  return j.dump(2) + "\n";
}

std::string certificate_to_json(const CertificateReport& rep) {
  return certificate_json(rep).dump(2) + "\n";
}

std::string converse_to_json(const ConverseReport& rep) {
  Json j;
  j["value"] = rep.solution.value;
  j["certificate"] = certificate_json(rep.certificate);
  Json proj;
  proj["r"] = rep.certificate.split.r;
  proj["cond_ST"] = rep.bundle.cond_st;
  proj["cond_SW"] = rep.bundle.cond_sw;
  proj["ill_conditioned"] = rep.bundle.ill_conditioned;
  proj["orth_residual"] = rep.bundle.orth_residual;
  proj["srcenh1_residual"] = rep.bundle.srcenh1_residual;
  proj["srcenh2_residual"] = rep.bundle.srcenh2_residual;
  proj["srcenh3_residual"] = rep.bundle.srcenh3_residual;
  proj["convingr9_residual"] = rep.bundle.convingr9_residual;
  j["projection"] = std::move(proj);
  Json enh;
  enh["srcenh4"] = rep.enhancement.r_srcenh4;
  enh["srcenh5"] = rep.enhancement.r_srcenh5;
  enh["srcenh6"] = rep.enhancement.r_srcenh6;
  enh["srcenh7"] = rep.enhancement.r_srcenh7;
  enh["srcenh10"] = rep.enhancement.r_srcenh10;
  enh["srcenh11"] = rep.enhancement.r_srcenh11;
  enh["appeng3"] = rep.enhancement.r_appeng3;
  j["enhancement"] = std::move(enh);
  j["bound"] = bound_json(rep.bound);
  if (rep.bound_alt_rank) j["bound_alt_rank"] = bound_json(*rep.bound_alt_rank);
  return j.dump(2) + "\n";
}

std::string sim_report_to_json(const SimReport& rep) {
  Json j;
  j["n"] = rep.covs.n;
  j["emp_err_cov"] = matrix_json(rep.emp_err_cov.mat());
  Json slack = Json::array();
  for (const auto& ds : rep.directional_slack) {
    Json s;
    s["direction"] = std::vector<double>(ds.direction.begin(), ds.direction.end());
    s["slack"] = ds.slack;
    s["stderr"] = ds.stderr_;
    slack.push_back(std::move(s));
  }
  j["directional_slack"] = std::move(slack);
  j["emp_K_Y_given_V"] = matrix_json(rep.emp_ky_given_v.mat());
  j["emp_K_X_given_UV"] = matrix_json(rep.emp_kx_given_uv.mat());
  j["R1_emp"] = rep.r1_emp;
  j["R2_emp"] = rep.r2_emp;
  j["pass"] = rep.pass;
  return j.dump(2) + "\n";
}

std::string sim_slack_to_csv(const SimReport& rep) {
  std::ostringstream os;
  const int m = rep.emp_err_cov.dim();
  os << "index";
  for (int i = 0; i < m; ++i) os << ",z" << i;
  os << ",slack,stderr\n";
  char buf[64];
  for (std::size_t k = 0; k < rep.directional_slack.size(); ++k) {
    const auto& ds = rep.directional_slack[k];
    os << k;
    for (int i = 0; i < m; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", ds.direction(i));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", ds.slack, ds.stderr_);
    os << buf;
  }
  return os.str();
}

std::string manifest_to_json(const RunManifest& mf) {
  Json j;
  j["command"] = mf.command;
  j["instance"] = mf.instance_path;
  Json params;
  for (const auto& [k, v] : mf.parameters) params[k] = v;
  j["parameters"] = std::move(params);
  j["output"] = mf.output_path;
  j["tool_version"] = mf.tool_version;
  j["wall_time_s"] = mf.wall_time_s;
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::ParseError, "cannot open " + path + " for writing");
  os << content;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace ohrr
