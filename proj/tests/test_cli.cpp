#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dqso/dqso.hpp"

using namespace dqso;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(DQSO_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string fixture(const std::string& name) {
  return std::string(DQSO_FIXTURE_DIR) + "/" + name + ".json";
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "dqso_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string last_line(const std::string& text) {
  auto end = text.find_last_not_of('\n');
  auto start = text.rfind('\n', end);
  return text.substr(start + 1, end - start);
}

}  // namespace

TEST(Cli, OutputMatchesLibrary) {
  // The CLI is a thin shell: its bytes equal the rendered library report.
  RunOptions opt;
  opt.seed = 5;
  opt.samples = 3000;
  opt.restarts = 4;
  opt.steps = 200;
  const auto ex1 = fixture("example1");
  const auto flags = std::string(" --seed 5 --samples 3000 --restarts 4 --steps 200");
  const auto json = [](const Report& r) { return render_report(r, ReportFormat::Json); };
  EXPECT_EQ(cli("check " + ex1 + flags).out, json(run_check(resolve_operator(ex1), opt)));
  EXPECT_EQ(cli("audit catalog:example2" + flags).out,
            json(run_audit(resolve_operator("catalog:example2"), opt)));
  EXPECT_EQ(cli("classify " + ex1 + flags).out, json(run_classify(resolve_operator(ex1), opt)));
  EXPECT_EQ(cli("fixed-points " + ex1 + flags).out,
            json(run_fixed_points(resolve_operator(ex1), opt)));
  EXPECT_EQ(cli("simulate " + ex1 + flags).out, json(run_simulate(resolve_operator(ex1), opt)));
  EXPECT_EQ(cli("cesaro " + ex1 + flags + " --format csv").out,
            render_report(run_cesaro(resolve_operator(ex1), opt), ReportFormat::Csv));
  opt.x0 = std::vector<double>{0.1, 0.2, 0.3, 0.4};
  opt.burn_in = 150;
  EXPECT_EQ(cli("omega catalog:example2 --x0 0.1,0.2,0.3,0.4 --burn-in 150" + flags).out,
            json(run_omega(resolve_operator("catalog:example2"), opt)));
  RunOptions g = opt;
  g.partition = std::vector<std::size_t>{1, 2, 0, 0};
  g.m = 4;
  EXPECT_EQ(cli("generate --partition 2,3,1,1" + flags).out, json(run_generate(g)));
  EXPECT_EQ(cli("catalog").out, json(run_catalog()));
}

TEST(Cli, ByteIdenticalAcrossRuns) {
  const auto a = cli("check catalog:basic --seed 11 --samples 2000");
  const auto b = cli("check catalog:basic --seed 11 --samples 2000");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto c = cli("generate --m 4 --partition 1,1,2,2 --seed 3 --samples 1000");
  const auto d = cli("generate --m 4 --partition 1,1,2,2 --seed 3 --samples 1000");
  EXPECT_EQ(c.out, d.out);
  EXPECT_NE(c.out, cli("generate --m 4 --partition 1,1,2,2 --seed 4 --samples 1000").out);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("validate " + fixture("basic")).code, 0);
  EXPECT_EQ(cli("check catalog:volterra").code, 2);
  EXPECT_EQ(cli("check catalog:example2").code, 0);
  EXPECT_EQ(cli("classify /nonexistent.json").code, 1);
  EXPECT_EQ(cli("classify catalog:volterra").code, 1);  // not canonical
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("audit catalog:basic --format csv").code, 1);  // no series
  EXPECT_EQ(cli("simulate catalog:basic --x0 0.5,0.5").code, 1);

  // A row sum of 0.9 is a validation failure, both for validate and on load.
  auto t = basic_example();
  t.set(0, 1, 1, 0.4);
  const auto bad = (temp_dir() / "rowsum.json").string();
  save_operator(bad, t);
  const auto v = cli("validate " + bad);
  EXPECT_EQ(v.code, 1);
  EXPECT_NE(v.out.find("\"row-sum\""), std::string::npos);
  EXPECT_EQ(cli("classify " + bad).code, 1);

  // With no retries some seed exhausts the budget.
  bool exhausted = false;
  for (int seed = 0; seed < 50 && !exhausted; ++seed) {
    const auto r = cli("generate --partition 3,3,3,3 --max-rejections 0 --samples 2000 "
                       "--restarts 5 --seed " + std::to_string(seed));
    ASSERT_TRUE(r.code == 0 || r.code == 3) << r.code;
    exhausted = r.code == 3;
  }
  EXPECT_TRUE(exhausted);
}

TEST(Cli, OutFileAndFormats) {
  const auto path = (temp_dir() / "sim.csv").string();
  fs::remove(path);
  const auto r = cli("simulate catalog:example3 --steps 5 --format csv --out " + path);
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  const auto j = cli("simulate catalog:example3 --steps 5 --format csv");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), j.out);
  EXPECT_EQ(j.out.substr(0, 22), "step,x1,x2,x3,gap,phi\n");
}

TEST(Cli, SimulateZeroSteps) {
  const auto r = cli("simulate catalog:basic --steps 0 --format csv --x0 0.2,0.3,0.5");
  EXPECT_EQ(r.code, 0);
  // Vx = (0.69, 0.16, 0.15); sorted prefix margins 0.19 and 0.05.
  const std::string head = "step,x1,x2,x3,gap,phi\n0,0.2,0.3,0.5,";
  ASSERT_EQ(r.out.substr(0, head.size()), head);
  const auto tail = r.out.substr(head.size());
  EXPECT_NEAR(std::stod(tail), 0.05, 1e-12);
  EXPECT_EQ(tail.substr(tail.find(',')), ",0.2\n");  // phi = x1, the only recurrent index
}

TEST(Cli, BasicExampleSimulationApproachesE1Slowly) {
  // The vertex is neutral to first order: 1 - x1 ~ 1/k, so the final row sits
  // at about 1 - 1e-5 after the full 1e5-step budget, not within 1e-6.
  const auto r = cli("simulate catalog:basic --steps 100000 --format csv");
  ASSERT_EQ(r.code, 0);
  const auto row = last_line(r.out);
  std::istringstream is(row);
  std::string step, x1;
  std::getline(is, step, ',');
  std::getline(is, x1, ',');
  EXPECT_EQ(step, "100000");
  const double v = std::stod(x1);
  EXPECT_GT(v, 1 - 1.1e-5);
  EXPECT_LT(v, 1 - 0.9e-5);
}

TEST(Cli, ClassifyExample3) {
  const auto r = cli("classify " + fixture("example3"));
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["results"]["fixed_points"]["kind"], "Unique");
  EXPECT_EQ(j["results"]["fixed_points"]["point"], (Json{0.5, 0.0, 0.5}));
}

TEST(Cli, GenerateSavesLoadableOperator) {
  const auto path = (temp_dir() / "gen.json").string();
  const auto r = cli("generate --partition 2,3,1 --seed 8 --save-operator " + path);
  ASSERT_EQ(r.code, 0);
  const auto t = load_operator(path);
  EXPECT_EQ(classify(t).verdict, Classification::Verdict::Regular);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(parse_operator(j["results"]["operator"]).tensor, t);
}

TEST(Cli, CatalogExportReproducesFixtures) {
  const auto dir = temp_dir() / "export";
  fs::create_directories(dir);
  ASSERT_EQ(cli("catalog --export " + dir.string()).code, 0);
  for (const auto& [name, e] : catalog()) {
    std::ifstream a(dir / (name + ".json")), b(fixture(name));
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << name;
  }
}

TEST(Cli, SweepSmall) {
  const auto r = cli("sweep-m3 --draws 1 --samples 2000 --restarts 4");
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["results"]["rows"].size(), 27u);
  EXPECT_EQ(j["results"]["exceptions_nonlinear"], 0);
  EXPECT_EQ(j["results"]["budget_exhausted"], 0);
}
