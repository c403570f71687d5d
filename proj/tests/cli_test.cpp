#include <doctest.h>

#include "testutil.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace faultloc;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(FAULTLOC_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    res.output.append(buf.data(), n);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() /
                 ("faultloc_cli_" + tag + "_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kNet34 = testutil::data_file("ieee34.net");
const std::string kFig1 = testutil::data_file("fig1.net");
const std::string kFig2 = testutil::data_file("fig2.net");

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits cleanly, bad invocations exit with 2") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("matrices").exit_code == 2);  // --network is required
  CHECK(run_cli("--network " + kFig1).exit_code == 2);  // subcommand required
  CHECK(run_cli("--network " + kFig1 + " --no-such-flag matrices").exit_code == 2);

  RunResult missing = run_cli("--network /no/such/file.net matrices");
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("cannot open network file") != std::string::npos);
}

TEST_CASE("matrices writes the admittance and impedance of the model") {
  fs::path dir = fresh_dir("matrices");
  RunResult res = run_cli("--network " + kFig1 + " --out " + dir.string() +
                          " matrices");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("M=4") != std::string::npos);
  REQUIRE(fs::exists(dir / "Y.csv"));
  REQUIRE(fs::exists(dir / "Z.csv"));

  // The exported Z round-trips to the library's matrix exactly.
  NetworkModel m = load_network_file(kFig1);
  ImpedanceMatrix imp = invert_to_impedance(build_admittance(m));
  std::istringstream in(slurp(dir / "Z.csv"));
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string f;
    int col = 0;
    double parts[8];
    while (std::getline(fields, f, ',')) parts[col++] = std::stod(f);
    REQUIRE(col == 8);
    for (int c = 0; c < 4; ++c) {
      CHECK(parts[2 * c] == imp.Z(row, c).real());
      CHECK(parts[2 * c + 1] == imp.Z(row, c).imag());
    }
    ++row;
  }
  CHECK(row == 4);
}

TEST_CASE("matrices with a placement also writes the partition blocks") {
  fs::path dir = fresh_dir("blocks");
  RunResult res = run_cli("--network " + kNet34 +
                          " --placement 800,830,848,832,862 --out " +
                          dir.string() + " matrices");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("K=15") != std::string::npos);
  CHECK(res.output.find("coupling rank=15") != std::string::npos);
  for (const char* f : {"Z_aa.csv", "Z_au.csv", "Y_aa.csv", "Y_au.csv", "Y_uu.csv"})
    CHECK(fs::exists(dir / f));
}

TEST_CASE("simulate needs a fault and writes the phasor snapshot") {
  fs::path dir = fresh_dir("simulate");
  CHECK(run_cli("--network " + kFig2 + " --out " + dir.string() + " simulate")
            .exit_code == 2);

  RunResult res = run_cli("--network " + kFig2 + " --fault AG@4 --fault-z 1 " +
                          "--placement 2,5 --out " + dir.string() + " simulate");
  CHECK(res.exit_code == 0);
  std::string snap = slurp(dir / "snapshot.csv");
  int lines = 0;
  for (char c : snap) lines += c == '\n';
  CHECK(lines == 7);  // header + six node-phases
  std::string meas = slurp(dir / "measurements.csv");
  int mlines = 0;
  for (char c : meas) mlines += c == '\n';
  CHECK(mlines == 3);  // header + two monitored node-phases
}

TEST_CASE("localize reproduces the benchmark ambiguity sets") {
  fs::path dir = fresh_dir("localize");
  RunResult res = run_cli("--network " + kNet34 +
                          " --placement 800,830,848,832,862 --fault LLL@816 "
                          "--out " + dir.string() + " localize");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("candidates: 26") != std::string::npos);
  // The whitened near-minimal set is exactly {814, 816, 850}.
  auto pos = res.output.find("whitened ambiguity set");
  REQUIRE(pos != std::string::npos);
  std::string tail = res.output.substr(pos, res.output.find('\n', pos) - pos);
  for (const char* bus : {"814", "816", "850"})
    CHECK(tail.find(bus) != std::string::npos);
  CHECK(tail.find("824") == std::string::npos);
  REQUIRE(fs::exists(dir / "ranking_raw.csv"));
  REQUIRE(fs::exists(dir / "ranking_whitened.csv"));
  CHECK(slurp(dir / "ranking_whitened.csv").find("# metric=whitened") !=
        std::string::npos);
}

TEST_CASE("noisy localization is reproducible for a fixed seed") {
  fs::path d1 = fresh_dir("noise1");
  fs::path d2 = fresh_dir("noise2");
  std::string common = "--network " + kNet34 +
                       " --placement 800,830,848,832,862 --fault AG@822 "
                       "--noise-mag 0.01 --noise-ang 0.01 --seed 7 ";
  CHECK(run_cli(common + "--out " + d1.string() + " localize").exit_code == 0);
  CHECK(run_cli(common + "--out " + d2.string() + " localize").exit_code == 0);
  CHECK(slurp(d1 / "ranking_whitened.csv") == slurp(d2 / "ranking_whitened.csv"));
  CHECK(slurp(d1 / "ranking_raw.csv") == slurp(d2 / "ranking_raw.csv"));

  fs::path d3 = fresh_dir("noise3");
  CHECK(run_cli("--network " + kNet34 +
                " --placement 800,830,848,832,862 --fault AG@822 "
                "--noise-mag 0.01 --noise-ang 0.01 --seed 8 --out " +
                d3.string() + " localize")
            .exit_code == 0);
  CHECK(slurp(d1 / "ranking_whitened.csv") != slurp(d3 / "ranking_whitened.csv"));
}

TEST_CASE("an open fault is reported as undetectable") {
  fs::path dir = fresh_dir("nofault");
  RunResult res = run_cli("--network " + kFig2 +
                          " --placement 1,2,5 --fault AG@4 --fault-z inf "
                          "--out " + dir.string() + " localize");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("no detectable fault") != std::string::npos);
}

TEST_CASE("communities writes per-phase artifacts") {
  fs::path dir = fresh_dir("comm");
  RunResult res = run_cli("--network " + kNet34 +
                          " --placement 800,830,848,832,862 --out " +
                          dir.string() + " communities");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("phase A: communities=5") != std::string::npos);
  CHECK(res.output.find("phase B: communities=3") != std::string::npos);
  CHECK(res.output.find("phase C: communities=4") != std::string::npos);
  CHECK(res.output.find("unlocatable node-phases: 0") != std::string::npos);
  for (const char* f : {"correlation_A.csv", "adjacency_A.csv", "heatmap_A.svg",
                        "correlation_B.csv", "correlation_C.csv",
                        "communities.csv"})
    CHECK(fs::exists(dir / f));

  CHECK(run_cli("--network " + kNet34 +
                " --placement 800,830,848,832,862 --tau 1.5 --out " +
                dir.string() + " communities")
            .exit_code == 2);
}

TEST_CASE("the raw sensing matrix is an alternative community source") {
  fs::path dir = fresh_dir("commraw");
  RunResult res = run_cli("--network " + kFig2 +
                          " --placement 2,5 --source-matrix raw --out " +
                          dir.string() + " communities");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("source=raw") != std::string::npos);
}

TEST_CASE("placement search prints greedy scores and a baseline comparison") {
  fs::path dir = fresh_dir("placement");
  RunResult res = run_cli("--network " + kFig2 + " --n-sensors 2 --out " +
                          dir.string() + " placement");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("chosen: 1,") != std::string::npos);
  CHECK(res.output.find("greedy: K=") != std::string::npos);
  CHECK(res.output.find("worst_community=") != std::string::npos);

  RunResult cmp = run_cli("--network " + kFig2 +
                          " --n-sensors 2 --baseline 1,2 --out " +
                          dir.string() + " placement");
  CHECK(cmp.exit_code == 0);
  CHECK(cmp.output.find("baseline: K=") != std::string::npos);
  bool verdict =
      cmp.output.find("matches or beats") != std::string::npos ||
      cmp.output.find("baseline beats") != std::string::npos;
  CHECK(verdict);
}

TEST_CASE("options can come from a config file") {
  fs::path dir = fresh_dir("config");
  fs::path cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "# stored run configuration\n";
    out << "network=" << kFig2 << "\n";
    out << "placement=1,5\n";
    out << "fault=AG@4\n";
    out << "fault-z=1\n";
    out << "out=" << dir.string() << "\n";
  }
  RunResult res = run_cli("--config " + cfg.string() + " localize");
  CHECK(res.exit_code == 0);
  REQUIRE(fs::exists(dir / "ranking_whitened.csv"));

  // Command-line flags override the stored values.
  fs::path dir2 = fresh_dir("config2");
  RunResult res2 = run_cli("--config " + cfg.string() + " --out " +
                           dir2.string() + " localize");
  CHECK(res2.exit_code == 0);
  CHECK(fs::exists(dir2 / "ranking_whitened.csv"));
}

}  // TEST_SUITE
