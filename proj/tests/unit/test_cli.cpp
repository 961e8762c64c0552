#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "htclt/commands.hpp"
#include "htclt/config.hpp"
#include "htclt/errors.hpp"
#include "htclt/mcstats.hpp"
#include "htclt/svg.hpp"

using namespace htclt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("htclt_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& cmd, const std::string& ini, const fs::path& out, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  CommandContext ctx{AppConfig::parse(ini, "test.ini"), out, log};
  const int code = run_command(cmd, ctx, err);
  if (err_text) *err_text = err.str();
  return code;
}

const char* kMinimal =
    "[run]\nseed = 5\nthreads = 1\n"
    "[ensemble]\nfamily = standard_wigner\n"
    "[experiment]\ndims = 4\nreplicas = 2\nstatistic = moment\norders = 2\n";

}  // namespace

TEST_CASE("complex and list parsing") {
  CHECK(parse_complex("2i") == cplx(0.0, 2.0));
  CHECK(parse_complex("1+1i") == cplx(1.0, 1.0));
  CHECK(parse_complex(" -0.5 - 2i ") == cplx(-0.5, -2.0));
  CHECK(parse_complex("3") == cplx(3.0, 0.0));
  CHECK(parse_complex("-i") == cplx(0.0, -1.0));
  CHECK(parse_complex("1e-1+2e+0j") == cplx(0.1, 2.0));
  CHECK_THROWS_AS(parse_complex("abc"), ConfigError);
  CHECK(parse_int_list("200, 400,800") == std::vector<int>{200, 400, 800});
  CHECK(parse_complex_list("2i; 1+1i").size() == 2);
  const auto atoms = parse_atoms("0:0.5, 2:1.5");
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[1].x == 2.0);
  CHECK(atoms[1].w == 1.5);
  CHECK_THROWS_AS(parse_atoms("2"), ConfigError);
}

TEST_CASE("config schema is enforced") {
  CHECK_THROWS_AS(AppConfig::parse("[ensemble]\nfamilly = levy\n"), ConfigError);
  CHECK_THROWS_AS(AppConfig::parse("[nonsense]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(AppConfig::parse("seed = 1\n"), ConfigError);
  const AppConfig c = AppConfig::parse("[ensemble]\nfamily = levy\nalpha = 1.5\n[run]\nseed = 12\n");
  CHECK(c.ensemble().family == Family::Levy);
  CHECK(c.ensemble().alpha == 1.5);
  CHECK(c.seed() == 12);
  CHECK_THROWS_AS(AppConfig::parse("[ensemble]\nfamily = levy\nalpha = 2.5\n").ensemble(), ConfigError);
  CHECK_THROWS_AS(AppConfig::parse("[run]\nseed = many\n").seed(), ConfigError);
  CHECK_THROWS_AS(AppConfig::parse("[ensemble]\nalpha = 1\n").ensemble(), ConfigError);
  const AppConfig s = AppConfig::parse("[run]\nseed=1\n[ensemble]\nfamily=levy\n");
  CHECK(s.snapshot() == "ensemble.family=levy\nrun.seed=1\n");
}

TEST_CASE("minimal sample run") {
  const fs::path out = scratch("minimal");
  REQUIRE(run("sample", kMinimal, out) == kExitOk);
  std::istringstream in(slurp(out / "samples.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 'N') ++rows;
  CHECK(rows == 2);
  CHECK(slurp(out / "samples.csv").find('\r') == std::string::npos);
}

TEST_CASE("manifest lists every file with its hash and reruns reproduce them") {
  const char* ini =
      "[run]\nseed = 3\n[ensemble]\nfamily = erdos_renyi\np = 2\n"
      "[experiment]\ndims = 30\nreplicas = 40\nstatistic = moment\norders = 2, 4\nbootstrap = 20\n"
      "gaussianity_bootstrap = 20\n";
  const fs::path a = scratch("manifest_a"), b = scratch("manifest_b");
  REQUIRE(run("moments-clt", ini, a) == kExitOk);
  REQUIRE(run("moments-clt", ini, b) == kExitOk);
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  CHECK(ma["subcommand"] == "moments-clt");
  CHECK(ma["artifacts"] == mb["artifacts"]);
  std::size_t listed = 0;
  for (const auto& art : ma["artifacts"]) {
    const fs::path f = a / art["path"].get<std::string>();
    CHECK(art["sha256"] == sha256_hex(slurp(f)));
    ++listed;
  }
  std::size_t present = 0;
  for (const auto& e : fs::directory_iterator(a)) present += e.path().filename() != "manifest.json";
  CHECK(listed == present);
  CHECK(slurp(a / "moments_clt.csv").rfind("# schema=1\nN,feature_a,feature_b,empirical,bootstrap_se,predicted\n", 0) == 0);
  CHECK(slurp(a / "moments_hist.svg").find("<svg") != std::string::npos);
}

TEST_CASE("cookbook sample matches the frozen table") {
  const fs::path out = scratch("golden");
  const AppConfig cfg = AppConfig::load(HTCLT_SOURCE_DIR "/configs/er_small.ini");
  std::ostringstream log, err;
  CommandContext ctx{cfg, out, log};
  REQUIRE(run_command("sample", ctx, err) == kExitOk);
  CHECK(slurp(out / "samples.csv") == slurp(HTCLT_SOURCE_DIR "/tests/golden/er_small_samples.csv"));
}

TEST_CASE("exit codes") {
  std::string err;
  CHECK(run("sample", "[ensemble]\nfamily = nope\n[experiment]\ndims = 4\norders = 2\n", scratch("bad"), &err) == kExitConfig);
  CHECK(err.find("nope") != std::string::npos);
  CHECK(run("sample", "[ensemble]\nfamily = standard_wigner\n", scratch("nodims")) == kExitConfig);
  CHECK(run("frobnicate", kMinimal, scratch("unknown")) == kExitConfig);
  const char* stalled = "[ensemble]\nfamily = erdos_renyi\n[solver]\nz = 0.1i\nmax_iterations = 3\n";
  CHECK(run("solve", stalled, scratch("stall")) == kExitSolver);
  CHECK(run("verify", "[verify]\ncriteria = 2\n", scratch("verify")) == kExitOk);
  CHECK(run("verify", "[verify]\ncriteria = 12\n", scratch("verify_bad")) == kExitConfig);
}

TEST_CASE("solve writes tables and plots") {
  const fs::path out = scratch("solve");
  const char* ini =
      "[ensemble]\nfamily = standard_wigner\n[solver]\nz = 2i, 1+1i\npanels = 8\ndensity_points = 11\n";
  REQUIRE(run("solve", ini, out) == kExitOk);
  for (const char* f : {"stieltjes.csv", "rho_0.csv", "rho_1.csv", "rho.svg", "density.csv", "density.svg"})
    CHECK(fs::exists(out / f));
  std::istringstream in(slurp(out / "density.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "# schema=1");
}

TEST_CASE("SVG output is deterministic") {
  auto draw = [] {
    SvgPlot p("t <title>", "x", "y");
    p.add_line("curve", {{0.0, 1.0}, {1.0, 2.0}, {2.0, 0.5}}, "#000");
    p.add_bars({0.0, 1.0}, 1.0, {0.3, 0.6}, "#888");
    return p.render();
  };
  const std::string s = draw();
  CHECK(s == draw());
  CHECK(s.rfind("<?xml", 0) == 0);
  CHECK(s.find("version=\"1.1\"") != std::string::npos);
  CHECK(s.find("&lt;title&gt;") != std::string::npos);
}
