#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = OHRR_CLI_PATH;

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ohrr_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string cmd =
      kCli + " " + args + " > " + out.string() + " 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = WEXITSTATUS(rc);
  r.out = slurp(out);
  return r;
}

fs::path inst1_path() {
  const fs::path p = work_dir() / "inst1.json";
  write(p, R"({"m":1,"K_X":[[1.0]],"K_N":[[0.5]],"D":[[0.3]]})");
  return p;
}

double json_number(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  REQUIRE(pos != std::string::npos);
  const auto colon = text.find(':', pos);
  return std::stod(text.substr(colon + 1));
}

}  // namespace

TEST_CASE("validate: valid, trivial notice, and structural rejections") {
  const RunResult ok = run("validate " + inst1_path().string());
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\"valid\": true") != std::string::npos);
  CHECK(ok.out.find("\"trivial_region\": false") != std::string::npos);

  const fs::path triv = work_dir() / "trivial.json";
  write(triv, R"({"m":1,"K_X":[[1.0]],"K_N":[[0.5]],"D":[[2.0]]})");
  const RunResult t = run("validate " + triv.string());
  CHECK(t.code == 0);
  CHECK(t.out.find("\"trivial_region\": true") != std::string::npos);

  const fs::path nonpsd = work_dir() / "nonpsd.json";
  write(nonpsd,
        R"({"m":2,"K_X":[[1.0,2.0],[2.0,1.0]],"K_N":[[0.1,0.0],[0.0,0.1]],"D":[[1.0,0.0],[0.0,1.0]]})");
  CHECK(run("validate " + nonpsd.string()).code == 3);

  const fs::path garbage = work_dir() / "garbage.json";
  write(garbage, "{ not json");
  CHECK(run("validate " + garbage.string()).code == 2);
}

TEST_CASE("solve: trivial region, oracle agreement, branch continuity") {
  const fs::path triv = work_dir() / "trivial2.json";
  write(triv, R"({"m":1,"K_X":[[1.0]],"K_N":[[0.5]],"D":[[1.0]]})");
  for (const char* mu : {"0", "0.5", "1", "2"}) {
    const RunResult r = run("solve " + triv.string() + " --mu " + mu);
    CHECK(r.code == 0);
    CHECK(json_number(r.out, "value") == doctest::Approx(0.0));
  }

  const RunResult solved = run("solve " + inst1_path().string() + " --mu 2");
  const RunResult oracled = run("oracle " + inst1_path().string() + " --mu 2");
  CHECK(solved.code == 0);
  CHECK(oracled.code == 0);
  CHECK(std::abs(json_number(solved.out, "value") -
                 json_number(oracled.out, "value")) <= 1e-4);

  const RunResult v1 = run("solve " + inst1_path().string() + " --mu 1");
  const RunResult v1p =
      run("solve " + inst1_path().string() + " --mu 1.000001");
  CHECK(std::abs(json_number(v1.out, "value") -
                 json_number(v1p.out, "value")) <= 1e-3);
}

TEST_CASE("solve --certify embeds a passing certificate summary") {
  const RunResult r =
      run("solve " + inst1_path().string() + " --mu 2 --certify");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"certificate\"") != std::string::npos);
  CHECK(r.out.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("trace: default grid rows and NaN propagation") {
  const RunResult r = run("trace " + inst1_path().string());
  CHECK(r.code == 0);
  std::istringstream is(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 27);  // header + 25 log-spaced + mu = 1
  CHECK(lines[0] == "mu,R1,R2,v");

  double prev = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto last_comma = lines[i].rfind(',');
    const double v = std::stod(lines[i].substr(last_comma + 1));
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
}

TEST_CASE("exit codes: solver failure, oracle dimension, converse pass") {
  CHECK(run("solve " + inst1_path().string() + " --mu 2 --starts 0").code == 4);

  const fs::path m3 = work_dir() / "m3.json";
  write(m3,
        R"({"m":3,"K_X":[[1,0,0],[0,1,0],[0,0,1]],"K_N":[[0.5,0,0],[0,0.5,0],[0,0,0.5]],"D":[[0.5,0,0],[0,0.5,0],[0,0,0.5]]})");
  CHECK(run("oracle " + m3.string() + " --mu 2").code == 7);

  CHECK(run("converse " + inst1_path().string() + " --mu 2").code == 0);
  const RunResult sim =
      run("simulate " + inst1_path().string() + " --mu 2 --seed 20250809");
  CHECK(sim.code == 0);
}

TEST_CASE("trace propagates per-row failures as NaN with nonzero exit") {
  // Singular K_X whose reduced distortion block is singular: infinite rate.
  const fs::path p = work_dir() / "infinite.json";
  write(p,
        R"({"m":2,"K_X":[[1.0,0.0],[0.0,0.0]],"K_N":[[0.5,0.0],[0.0,0.0]],"D":[[0.0,0.0],[0.0,0.1]]})");
  const RunResult r = run("trace " + p.string() + " --mu-grid 1,2");
  CHECK(r.code == 1);
  CHECK(r.out.find("nan") != std::string::npos);
}

TEST_CASE("outputs reproduce bit-identically under --out") {
  const fs::path a = work_dir() / "a.json";
  const fs::path b = work_dir() / "b.json";
  for (const std::string& cmd :
       {std::string("solve "), std::string("oracle "),
        std::string("converse ")}) {
    run(cmd + inst1_path().string() + " --mu 2 --seed 7 --out " + a.string());
    run(cmd + inst1_path().string() + " --mu 2 --seed 7 --out " + b.string());
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
    CHECK(fs::exists(a.string() + ".manifest.json"));
  }
  run("simulate " + inst1_path().string() +
      " --mu 2 --seed 11 --samples 20000 --out " + a.string());
  run("simulate " + inst1_path().string() +
      " --mu 2 --seed 11 --samples 20000 --out " + b.string());
  CHECK(slurp(a) == slurp(b));
  run("trace " + inst1_path().string() + " --out " + a.string());
  run("trace " + inst1_path().string() + " --out " + b.string());
  CHECK(slurp(a) == slurp(b));
}
