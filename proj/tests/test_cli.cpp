#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "startrek/graphgen.hpp"
#include "startrek/harness.hpp"
#include "startrek/io.hpp"
#include "startrek/quantile.hpp"

using namespace startrek;
namespace fs = std::filesystem;

namespace {

const std::string kCli = STARTREK_CLI_PATH;

int run(const std::string& args, const std::string& capture = "/dev/null") {
  std::string cmd = kCli + " " + args + " >" + capture + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// drop the wall-clock line so that deterministic runs compare byte-equal
std::string mask_timestamp(std::string text) {
  return std::regex_replace(text, std::regex("\"generated_at\": \"[^\"]*\""),
                            "\"generated_at\": \"X\"");
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "startrek_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string make_data_csv(const Workspace& ws, const std::string& name) {
  auto model = graphgen::generate_graph(graphgen::GraphKind::hub, 12, 2, {}, 7);
  Matrix X = harness::sample_ggm_data(model.precision, 120, 99);
  std::string p = ws.path(name);
  io::save_matrix(p, X);
  return p;
}

}  // namespace

TEST_CASE("cli: help exits 0") {
  CHECK(run("--help") == 0);
  CHECK(run("select --help") == 0);
}

TEST_CASE("cli: usage errors exit 2 and name the missing flag") {
  Workspace ws;
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("") == 2);
  std::string cap = ws.path("err.txt");
  CHECK(run("select --data x.csv --out " + ws.path("o"), cap) == 2);
  std::string err = slurp(cap);
  CHECK(err.find("--k-tau") != std::string::npos);
  CHECK(run("graphgen --out " + ws.path("g"), cap) == 2);
  CHECK(slurp(cap).find("--d") != std::string::npos);
}

TEST_CASE("cli: runtime errors exit 1") {
  Workspace ws;
  CHECK(run("select --data /nonexistent/nope.csv --k-tau 3 --out " + ws.path("o")) == 1);
}

TEST_CASE("cli: bad option values exit 2") {
  Workspace ws;
  std::string data = make_data_csv(ws, "d.csv");
  CHECK(run("select --data " + data + " --k-tau 3 --lambda banana --out " + ws.path("o")) == 2);
  CHECK(run("ccb-verify --case banana --d 5 --samples 1000 --out " + ws.path("c")) == 2);
}

TEST_CASE("cli select: outputs exist and are deterministic across thread counts") {
  Workspace ws;
  std::string data = make_data_csv(ws, "d.csv");
  std::string base = " select --data " + data +
                     " --k-tau 3 --q 0.2 --boot 300 --seed 11 --lambda 0.2 --out ";
  CHECK(run("--threads 1" + base + ws.path("o1")) == 0);
  CHECK(run("--threads 4" + base + ws.path("o2")) == 0);

  auto s1 = slurp(ws.dir / "o1" / "selection.json");
  auto s2 = slurp(ws.dir / "o2" / "selection.json");
  CHECK(!s1.empty());
  CHECK(mask_timestamp(s1) == mask_timestamp(s2));
  CHECK(slurp(ws.dir / "o1" / "alpha.csv") == slurp(ws.dir / "o2" / "alpha.csv"));
  CHECK(s1.find("\"lambda_used\": 0.2") != std::string::npos);
}

TEST_CASE("cli graphgen: writes graph.json and a loadable precision matrix") {
  Workspace ws;
  CHECK(run("graphgen --kind knn --d 20 --groups 4 --seed 3 --out " + ws.path("g")) == 0);
  auto gj = slurp(ws.dir / "g" / "graph.json");
  CHECK(gj.find("\"kind\": \"knn\"") != std::string::npos);
  DataMatrix prec = io::load_matrix((ws.dir / "g" / "precision.csv").string());
  CHECK(prec.d() == 20);
  CHECK(prec.n() == 20);
  // same seed, same artifacts
  CHECK(run("graphgen --kind knn --d 20 --groups 4 --seed 3 --out " + ws.path("g2")) == 0);
  CHECK(slurp(ws.dir / "g2" / "graph.json") == gj);
}

TEST_CASE("cli simulate: strict config schema") {
  Workspace ws;
  {
    std::ofstream cfg(ws.path("bad.json"));
    cfg << "{\"spec_version\": 1, \"mystery_knob\": true}\n";
  }
  std::string cap = ws.path("err.txt");
  CHECK(run("simulate --config " + ws.path("bad.json") + " --out " + ws.path("s"), cap) == 2);
  CHECK(slurp(cap).find("mystery_knob") != std::string::npos);
  {
    std::ofstream cfg(ws.path("ok.json"));
    cfg << "{\"spec_version\": 1, \"mode\": \"ggm\", \"graph_kind\": \"hub\", \"d\": 12,"
           " \"p_groups\": 2, \"n\": 80, \"B\": 100, \"replicates\": 2, \"q\": 0.2,"
           " \"lambda_policy\": \"fixed\", \"lambda_fixed\": 0.2, \"seed\": 4}\n";
  }
  CHECK(run("simulate --config " + ws.path("ok.json") + " --out " + ws.path("s")) == 0);
  auto report = slurp(ws.dir / "s" / "report.json");
  CHECK(report.find("\"mean_fdp\"") != std::string::npos);
  std::ifstream csv(ws.dir / "s" / "replicates.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "replicate,fdp,power,n_selected,d0,runtime_ms");
}

TEST_CASE("cli ccb-verify: identical case reports zero deviation") {
  Workspace ws;
  CHECK(run("ccb-verify --case identical --d 6 --samples 20000 --seed 2 --out " +
            ws.path("c")) == 0);
  auto j = slurp(ws.dir / "c" / "ccb.json");
  CHECK(j.find("\"sup_ratio_dev\": 0.0") != std::string::npos);
  std::ifstream csv(ws.dir / "c" / "ccb.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,p_num,p_den,ratio_dev,se,stable");
}

TEST_CASE("cli ensemble-cache: cache file loads with the requested draw count") {
  Workspace ws;
  std::string data = make_data_csv(ws, "d.csv");
  std::string cache = ws.path("ens.stkb");
  CHECK(run("ensemble-cache --data " + data + " --lambda 0.2 --boot 128 --seed 5 --out " +
            cache) == 0);
  auto ens = quantile::load_ensemble(cache);
  CHECK(ens.B() == 128);
  CHECK(ens.n_edges() == 12 * 11 / 2);
}
