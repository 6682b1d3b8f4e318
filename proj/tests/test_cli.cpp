#include <catch2/catch_amalgamated.hpp>

#include <qong/config.hpp>
#include <qong/constants.hpp>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path make_tmpdir() {
  static int counter = 0;
  fs::path d = fs::temp_directory_path() /
               ("qong_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
  fs::create_directories(d);
  return d;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args) {
  fs::path dir = make_tmpdir();
  fs::path op = dir / "stdout.txt";
  fs::path ep = dir / "stderr.txt";
  std::string cmd = std::string(QONG_CLI_PATH) + " " + args + " > " +
                    op.string() + " 2> " + ep.string();
  int st = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = read_file(op);
  r.err = read_file(ep);
  return r;
}

std::string cfg_path(const std::string& name) {
  return (fs::path(QONG_CONFIG_DIR) / name).string();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("evaluate reports the reference point and exits zero") {
  CliRun r = run_cli("evaluate --config " + cfg_path("schemeA.cfg"));
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["report"]["feasible"].get<bool>());
  CHECK(j["report"]["mdr_deg_per_hour"].get<double>() ==
        Catch::Approx(0.004606328056973792).epsilon(1e-6));
  CHECK(j["report"]["reanchored"].get<bool>());
  CHECK(j["seed"].get<int>() == 1);
  CHECK(j.contains("version"));
  CHECK(j["format_version"].get<int>() == 1);
  // currents vanish at rest up to the solver noise floor
  CHECK(std::abs(j["report"]["i1_mean_A"].get<double>()) <= 1e-18);
  CHECK(std::abs(j["report"]["i2_mean_A"].get<double>()) <= 1e-18);
}

TEST_CASE("evaluate --out writes the same record to disk") {
  fs::path dir = make_tmpdir();
  CliRun r = run_cli("evaluate --config " + cfg_path("schemeB.cfg") + " --out " +
                     dir.string());
  REQUIRE(r.code == 0);
  json from_stdout = json::parse(r.out);
  json from_file = json::parse(read_file(dir / "evaluate.json"));
  CHECK(from_file["report"] == from_stdout["report"]);
  CHECK(from_file["report"]["mdr_deg_per_hour"].get<double>() ==
        Catch::Approx(0.08809750817775165).epsilon(1e-6));
}

TEST_CASE("an infeasible point exits with code two") {
  fs::path dir = make_tmpdir();
  fs::path cfg = dir / "below.cfg";
  write_file(cfg,
             "P2 = 10 mW\n"
             "Qc1 = 1.018e5\n"
             "Qc2 = 5.462e5\n");
  CliRun r = run_cli("evaluate --config " + cfg.string());
  REQUIRE(r.code == 2);
  json j = json::parse(r.out);
  CHECK_FALSE(j["report"]["feasible"].get<bool>());
  CHECK(j["report"]["stage"].get<std::string>() == "steady");
  CHECK(j["report"]["reason"].get<std::string>() == "unstable");
}

TEST_CASE("config errors exit with code one") {
  fs::path dir = make_tmpdir();
  fs::path cfg = dir / "bad.cfg";
  write_file(cfg, "P1 = 1 mW\nbogus = 3\n");
  CliRun r = run_cli("evaluate --config " + cfg.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("error") != std::string::npos);

  CliRun missing = run_cli("evaluate --config /nonexistent/x.cfg");
  CHECK(missing.code == 1);

  // a dimensioned quantity without its unit is rejected
  fs::path cfg2 = dir / "nounit.cfg";
  write_file(cfg2, "P1 = 1\n");
  CHECK(run_cli("evaluate --config " + cfg2.string()).code == 1);
}

TEST_CASE("sweep writes the grid in outer-major order") {
  fs::path dir = make_tmpdir();
  fs::path cfg = dir / "grid.cfg";
  write_file(cfg,
             "P1 = 0.945 uW\n"
             "Qc1 = 6.747e6\n"
             "Qc2 = 6.675e7\n"
             "sweep.axis1 = Omega 0 rad_s 1e-3 rad_s 2 lin\n"
             "sweep.axis2 = Qc1 1e6 1e7 2 log\n");
  CliRun r = run_cli("sweep --config " + cfg.string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  auto lines = lines_of(read_file(dir / "sweep.csv"));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "Omega,Qc1,mdr_deg_per_hour,fisher,i1_mean_A,i2_mean_A,"
        "squeezing_db_fund_phase,squeezing_db_sh_amp,feasible");
  // inner axis (Qc1) varies fastest
  CHECK(lines[1].substr(0, 2) == "0,");
  CHECK(lines[2].substr(0, 2) == "0,");
  CHECK(lines[1].find(",1000000,") != std::string::npos);
  CHECK(lines[2].find(",10000000,") != std::string::npos);
  CHECK(lines[3].substr(0, 6) == "0.001,");
  // every feasible row ends in 1
  for (size_t i = 1; i < lines.size(); ++i)
    CHECK(lines[i].back() == '1');

  json manifest = json::parse(read_file(dir / "sweep_manifest.json"));
  CHECK(manifest["axes"].size() == 2);
  CHECK(manifest["axes"][0]["name"].get<std::string>() == "Omega");
  CHECK(manifest["axes"][1]["count"].get<int>() == 2);
  CHECK(manifest["feasible_cells"].get<int>() == 4);
}

TEST_CASE("sweep output does not depend on the worker count") {
  fs::path d1 = make_tmpdir();
  fs::path d4 = make_tmpdir();
  std::string cfg = cfg_path("sweep_omega.cfg");
  REQUIRE(run_cli("sweep --config " + cfg + " --jobs 1 --out " + d1.string())
              .code == 0);
  REQUIRE(run_cli("sweep --config " + cfg + " --jobs 4 --out " + d4.string())
              .code == 0);
  CHECK(read_file(d1 / "sweep.csv") == read_file(d4 / "sweep.csv"));
}

TEST_CASE("optimize writes a reproducible trace and a loadable best point") {
  fs::path d1 = make_tmpdir();
  fs::path d2 = make_tmpdir();
  std::string cfg = cfg_path("optimize_B.cfg");
  CliRun r1 = run_cli("optimize --config " + cfg + " --out " + d1.string());
  REQUIRE(r1.code == 0);
  CliRun r2 = run_cli("optimize --config " + cfg + " --out " + d2.string());
  REQUIRE(r2.code == 0);

  auto lines = lines_of(read_file(d1 / "trace.csv"));
  REQUIRE(lines.size() == 17);  // header + budget rows
  CHECK(lines[0] == "iteration,P1,Qc1,Qc2,objective,feasible,best_so_far");
  double prev = 1e300;
  for (size_t i = 1; i < lines.size(); ++i) {
    auto cols = lines[i];
    auto pos = cols.rfind(',');
    double best = std::stod(cols.substr(pos + 1));
    CHECK(best <= prev + 1e-300);
    prev = best;
  }
  // byte-identical reruns
  CHECK(read_file(d1 / "trace.csv") == read_file(d2 / "trace.csv"));
  CHECK(read_file(d1 / "best.cfg") == read_file(d2 / "best.cfg"));

  json best = json::parse(read_file(d1 / "best.json"));
  double best_mdr = best["report"]["mdr_deg_per_hour"].get<double>();
  CHECK(std::log10(best_mdr) ==
        Catch::Approx(best["best_objective_log10_deg_h"].get<double>())
            .epsilon(1e-12));

  // the exported best point reproduces its own report through evaluate
  CliRun ev = run_cli("evaluate --config " + (d1 / "best.cfg").string());
  REQUIRE(ev.code == 0);
  json j = json::parse(ev.out);
  CHECK(j["report"]["mdr_deg_per_hour"].get<double>() ==
        Catch::Approx(best_mdr).epsilon(1e-12));

  json manifest = json::parse(read_file(d1 / "optimize_manifest.json"));
  CHECK(manifest["budget"].get<int>() == 16);
  CHECK(manifest["dims"].size() == 3);
}

TEST_CASE("stability locates the oscillation threshold") {
  CliRun r = run_cli("stability --config " + cfg_path("stability_A.cfg"));
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["pump"].get<std::string>() == "P2");
  CHECK(j["Pc_W"].get<double>() ==
        Catch::Approx(0.014098587036132815).epsilon(1e-6));
  CHECK(j["max_re_low"].get<double>() < 0.0);
  CHECK(j["max_re_high"].get<double>() > 0.0);
}

TEST_CASE("linear baseline compares engine and closed form") {
  CliRun r = run_cli("linear-baseline --config " + cfg_path("linear.cfg"));
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["closed_form_mdr_deg_per_hour"].get<double>() ==
        Catch::Approx(87.48171772472402).epsilon(1e-9));
  CHECK(j["engine_mdr_deg_per_hour"].get<double>() ==
        Catch::Approx(10.937816242509287).epsilon(1e-6));
  CHECK(j["engine_over_closed_form"].get<double>() ==
        Catch::Approx(10.937816242509287 / 87.48171772472402).epsilon(1e-6));
}

TEST_CASE("config serialization is a fixed point of parsing") {
  for (const char* name :
       {"schemeA.cfg", "schemeB.cfg", "schemeC.cfg", "sweep_omega.cfg",
        "optimize_B.cfg", "stability_A.cfg"}) {
    qong::RunConfig c1 = qong::parse_config_file(cfg_path(name));
    std::string s1 = qong::serialize_config(c1);
    std::istringstream is(s1);
    qong::RunConfig c2 = qong::parse_config(is);
    std::string s2 = qong::serialize_config(c2);
    CHECK(s1 == s2);
    CHECK(c1.params.P1 == c2.params.P1);
    CHECK(c1.params.P2 == c2.params.P2);
    CHECK(c1.params.Qc1 == c2.params.Qc1);
    CHECK(c1.params.Omega == c2.params.Omega);
    CHECK(c1.seed == c2.seed);
  }
}

TEST_CASE("unit suffixes scale into SI") {
  fs::path dir = make_tmpdir();
  fs::path cfg = dir / "units.cfg";
  write_file(cfg,
             "P1 = 945 nW\n"
             "P2 = 0 W\n"
             "Qc1 = 6.747e6\n"
             "Omega = 100 deg_per_hour\n"
             "lambda1 = 1590 nm\n");
  qong::RunConfig c = qong::parse_config_file(cfg.string());
  CHECK(c.params.P1 == Catch::Approx(0.945e-6).epsilon(1e-12));
  CHECK(c.params.Omega ==
        Catch::Approx(100.0 * qong::deg_per_hour).epsilon(1e-12));
  CHECK(c.params.lambda1 == Catch::Approx(1590e-9).epsilon(1e-12));

  // material parameters define the coupling rate when given together
  fs::path cfg2 = dir / "material.cfg";
  write_file(cfg2,
             "P1 = 1 uW\n"
             "chi2 = 30 pm_V\n"
             "zeta = 1.18 per_um\n");
  qong::RunConfig c2 = qong::parse_config_file(cfg2.string());
  CHECK(c2.params.chi == Catch::Approx(1.26e6).epsilon(0.05));

  // chi together with the material pair is contradictory
  fs::path cfg3 = dir / "conflict.cfg";
  write_file(cfg3,
             "P1 = 1 uW\n"
             "chi = 1.26e6 rad_s\n"
             "chi2 = 30 pm_V\n"
             "zeta = 1.18 per_um\n");
  CHECK_THROWS_AS(qong::parse_config_file(cfg3.string()), qong::ConfigError);
}
