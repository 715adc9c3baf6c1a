#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return RUCLAB_CLI_PATH; }

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ruclab_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

} // namespace

TEST_CASE("check sb-gb on the coupled 2x2 generator") {
  const fs::path dir = fresh_dir("sbgb");
  write_file(dir / "gen.json", R"({"matrix": [[-2.0, 1.0], [1.0, -2.0]]})");
  const int code =
      run("check sb-gb --generator " + (dir / "gen.json").string() + " --out " + dir.string());
  REQUIRE(code == 0);

  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report.at("spectral").at("s_A").get<double>() == Catch::Approx(-1.0));
  REQUIRE(report.at("spectral").at("discrepancy").get<double>() < 1e-2);
  REQUIRE(fs::exists(dir / "table_fit.csv"));
}

TEST_CASE("check theorem21 on the identity semigroup") {
  const fs::path dir = fresh_dir("thm21");
  write_file(dir / "cfg.json",
             R"({"semigroup": {"kind": "matrix", "generator": {"matrix": [[0.0, 0.0], [0.0, 0.0]]}},
                 "samples": [[1.0, -2.0]], "t0": 1.0, "time_points": 64})");
  const int code =
      run("check theorem21 --config " + (dir / "cfg.json").string() + " --out " + dir.string());
  REQUIRE(code == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report.at("conditions").at("i").at("certified").get<bool>());
  REQUIRE(report.at("conditions").at("iv").at("certified").get<bool>());
}

TEST_CASE("malformed config exits 2 without outputs") {
  const fs::path dir = fresh_dir("badcfg");
  write_file(dir / "cfg.json", R"({"smaples": []})");
  const int code =
      run("check theorem21 --config " + (dir / "cfg.json").string() + " --out " + dir.string());
  REQUIRE(code == 2);
  REQUIRE_FALSE(fs::exists(dir / "report.json"));
}

TEST_CASE("uob estimate flags work without a config file") {
  const fs::path dir = fresh_dir("uob");
  write_file(dir / "ops.json",
             R"({"operators": [{"matrix": [[1.0, 0.0], [0.0, 1.0]]},
                               {"matrix": [[0.0, 1.0], [1.0, 0.0]]}]})");
  const int code = run("uob estimate --family " + (dir / "ops.json").string() +
                       " --norm-in l1 --norm-out l1 --budget 2000 --seed 7 --out " +
                       dir.string());
  REQUIRE(code == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report.at("M_lower").get<double>() == Catch::Approx(2.0));
}

TEST_CASE("reruns with the same seed are byte-identical") {
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  write_file(dir_a / "cfg.json",
             R"({"net": {"family": "moving_spike", "dim": 3, "levels": 20}})");
  fs::copy_file(dir_a / "cfg.json", dir_b / "cfg.json");

  REQUIRE(run("net cofinal-witness --config " + (dir_a / "cfg.json").string() + " --seed 7 --out " +
              dir_a.string()) == 0);
  REQUIRE(run("net cofinal-witness --config " + (dir_b / "cfg.json").string() + " --seed 7 --out " +
              dir_b.string()) == 0);
  REQUIRE(slurp(dir_a / "report.json") == slurp(dir_b / "report.json"));
  REQUIRE(slurp(dir_a / "table_envelope.csv") == slurp(dir_b / "table_envelope.csv"));
}

TEST_CASE("overrides reach nested config fields") {
  const fs::path dir = fresh_dir("override");
  write_file(dir / "cfg.json",
             R"({"net": {"family": "moving_spike", "dim": 3, "levels": 20}})");
  const int code = run("net cofinal-witness --config " + (dir / "cfg.json").string() +
                       " --override net.dim=4 --out " + dir.string());
  REQUIRE(code == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report.at("config").at("net").at("dim").get<int>() == 4);
  REQUIRE(report.at("y").size() == 4);
}
