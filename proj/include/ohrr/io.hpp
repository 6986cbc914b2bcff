#pragma once

#include <string>
#include <vector>

#include "ohrr/certificate.hpp"
#include "ohrr/converse.hpp"
#include "ohrr/instance.hpp"
#include "ohrr/mcsim.hpp"
#include "ohrr/region.hpp"

namespace ohrr {

/// Instance file: JSON object with "m", "K_X", "D" and either "K_N" or
/// both "K_Y" (k x k) and "K_XY" (m x k). Matrices are row-major arrays
/// of arrays of finite doubles. Unknown fields are rejected.
CanonicalInstance parse_instance_json(const std::string& text,
                                      const TolPolicy& tol = {});

CanonicalInstance load_instance_file(const std::string& path,
                                     const TolPolicy& tol = {});

/// Serialized canonical instance (K_N form), parseable by the functions
/// above; round-trips to equal in-memory values.
std::string instance_to_json(const CanonicalInstance& inst);

std::string matrix_to_json(const Matrix& a);

std::string rate_points_to_csv(const std::vector<RatePoint>& pts);

std::string dispatch_to_json(const DispatchResult& res, double mu,
                             const CertificateReport* cert = nullptr);
std::string certificate_to_json(const CertificateReport& rep);
std::string converse_to_json(const ConverseReport& rep);
std::string sim_report_to_json(const SimReport& rep);

/// Per-direction distortion slack as CSV (direction components, slack,
/// standard error).
std::string sim_slack_to_csv(const SimReport& rep);

struct RunManifest {
  std::string command;
  std::string instance_path;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::string output_path;
  std::string tool_version = "0.1.0";
  double wall_time_s = 0.0;
};

std::string manifest_to_json(const RunManifest& mf);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ohrr
