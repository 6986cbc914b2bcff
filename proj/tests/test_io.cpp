#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ohrr/io.hpp"
#include "test_util.hpp"

using namespace ohrr;

TEST_CASE("instance JSON round trip") {
  const CanonicalInstance i2 = testutil::inst2();
  const std::string text = instance_to_json(i2);
  const CanonicalInstance back = parse_instance_json(text);
  CHECK((back.kx.mat() - i2.kx.mat()).norm() == 0.0);
  CHECK((back.ky.mat() - i2.ky.mat()).norm() == 0.0);
  CHECK((back.kn.mat() - i2.kn.mat()).norm() == 0.0);
  CHECK((back.d.mat() - i2.d.mat()).norm() == 0.0);
}

TEST_CASE("instance JSON accepts the K_XY + K_Y form") {
  const std::string text = R"({
    "m": 1,
    "K_X": [[1.0]],
    "K_Y": [[1.0]],
    "K_XY": [[0.7]],
    "D": [[0.4]]
  })";
  const CanonicalInstance inst = parse_instance_json(text);
  CHECK(inst.ky(0, 0) == doctest::Approx(0.49));
  CHECK(inst.kn(0, 0) == doctest::Approx(0.51));
}

TEST_CASE("instance JSON rejections") {
  const auto expect_parse_error = [](const std::string& text) {
    try {
      parse_instance_json(text);
      return false;
    } catch (const Error& e) {
      return e.kind() == ErrorKind::ParseError;
    }
  };
  CHECK(expect_parse_error("not json"));
  CHECK(expect_parse_error(R"({"m":1,"K_X":[[1]],"K_N":[[0.5]],"D":[[0.3]],"extra":1})"));
  CHECK(expect_parse_error(R"({"m":1,"K_X":[[1]],"D":[[0.3]]})"));  // no K_N/K_Y
  CHECK(expect_parse_error(
      R"({"m":1,"K_X":[[1]],"K_N":[[0.5]],"K_Y":[[0.5]],"K_XY":[[0.5]],"D":[[0.3]]})"));
  CHECK(expect_parse_error(R"({"m":2,"K_X":[[1,0],[0]],"K_N":[[1,0],[0,1]],"D":[[1,0],[0,1]]})"));
  CHECK(expect_parse_error(R"({"m":1,"K_X":[[1e999]],"K_N":[[0.5]],"D":[[0.3]]})"));
  CHECK(expect_parse_error(R"({"m":0,"K_X":[],"K_N":[],"D":[]})"));
}

TEST_CASE("CSV format: header, LF endings, 17 significant digits") {
  std::vector<RatePoint> pts(2);
  pts[0] = {1.0 / 3.0, 0.1, 0.123456789012345678, 2.0};
  pts[1] = {0.0, 0.0, 0.0, 4.0};
  const std::string csv = rate_points_to_csv(pts);
  CHECK(csv.rfind("mu,R1,R2,v\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);

  // Round-trip: every field reparses to the exact double.
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  std::getline(is, line);
  std::istringstream row(line);
  std::string field;
  std::getline(row, field, ',');
  CHECK(std::stod(field) == pts[0].mu);
  std::getline(row, field, ',');
  CHECK(std::stod(field) == pts[0].r1);
  std::getline(row, field, ',');
  CHECK(std::stod(field) == pts[0].r2);
  std::getline(row, field, ',');
  CHECK(std::stod(field) == pts[0].v);
}

TEST_CASE("manifest serialization carries the run parameters") {
  RunManifest mf;
  mf.command = "solve";
  mf.instance_path = "inst.json";
  mf.parameters = {{"mu", "2"}, {"seed", "1"}};
  mf.output_path = "out.json";
  mf.wall_time_s = 0.25;
  const std::string text = manifest_to_json(mf);
  CHECK(text.find("\"command\": \"solve\"") != std::string::npos);
  CHECK(text.find("\"mu\": \"2\"") != std::string::npos);
  CHECK(text.find("\"tool_version\": \"0.1.0\"") != std::string::npos);
}
