#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "saoi/config.hpp"
#include "saoi/experiment.hpp"

using namespace saoi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("saoi_cfg_" + name);
  fs::remove_all(d);
  return d;
}

ConfigDoc tiny_doc() {
  return parse_config_text(
      "horizon = 6\nepisodes = 1\ntrain_horizon = 4\nupdate_every = 4\n"
      "schemes = MaxAoI, LyaHiPPO\nseeds = 1, 2\n[ppo]\nhidden = 8\n");
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty document gives the defaults") {
  const ExperimentConfig c = resolve_config({});
  const SystemParams& p = c.sim.params;
  CHECK(p.M == 3);
  CHECK(p.K == 5);
  CHECK(p.t_max == 2.0);
  CHECK(p.v_max == 30.0);
  CHECK(p.d_min == 30.0);
  CHECK(p.H == 100.0);
  CHECK(p.p_gu == doctest::Approx(3.1623).epsilon(1e-4));
  CHECK(p.a_max == 5.0);
  CHECK(p.V == 100.0);
  CHECK(c.sim.D_min == 1e6);
  CHECK(c.sim.D_max == 1e7);
  CHECK(c.sim.horizon == 500);
  CHECK(c.seeds.size() == 5);
  CHECK(c.schemes.size() == 5);
  CHECK(c.jobs == 1);
  CHECK(dbm_to_watt(35.0) == doctest::Approx(3.16227766));
  CHECK(watt_to_dbm(dbm_to_watt(12.5)) == doctest::Approx(12.5));
}

TEST_CASE("overrides are applied and per-GU vectors follow K") {
  const ExperimentConfig c = resolve_config(parse_config_text("K = 10\nV = 7\np_uav_dbm = 30"));
  CHECK(c.sim.params.K == 10);
  CHECK(c.sim.params.V == 7.0);
  CHECK(c.sim.params.B1.size() == 10);
  CHECK(c.sim.params.p_uav == doctest::Approx(1.0));
  const ExperimentConfig j = resolve_config(
      parse_config_text(R"({"t_max": 3, "ppo": {"lr": 0.001}, "seeds": [4, 9]})"));
  CHECK(j.sim.params.t_max == 3.0);
  CHECK(j.sim.ppo.lr == 0.001);
  CHECK(j.seeds == std::vector<std::uint64_t>{4, 9});
}

TEST_CASE("schema violations name the key") {
  auto message = [](const std::string& text) -> std::string {
    try {
      resolve_config(parse_config_text(text));
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("t_max = -1").rfind("t_max", 0) == 0);
  CHECK(message("bogus = 1").rfind("bogus", 0) == 0);
  CHECK(message("K = abc").rfind("K", 0) == 0);
  CHECK(message("p_gu = 1\np_gu_dbm = 30").find("p_gu") != std::string::npos);
  CHECK(message("schemes = Nope").rfind("schemes", 0) == 0);
  CHECK(message("jobs = 0").rfind("jobs", 0) == 0);
  CHECK_THROWS_AS(parse_config_text("V = 1\nV = 2"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("novalues"), ConfigError);
  const SweepSpec s = parse_sweep("D_max=3e6,1e7");
  CHECK(s.key == "D_max");
  CHECK(s.values == std::vector<std::string>{"3e6", "1e7"});
}

TEST_CASE("manifest round trip") {
  const ExperimentConfig a = resolve_config(parse_config_text(
      "K = 4\nhorizon = 20\nsweep = forced_depth=0.3,0.6\nB1 = 1e8,2e8,3e8,4e8\nlayout_seed = 7"));
  const std::string j1 = config_to_json(a);
  const ExperimentConfig b = resolve_config(parse_config_text(j1));
  CHECK(config_to_json(b) == j1);
  CHECK(b.sim.params.B1 == a.sim.params.B1);
  CHECK(b.sweep.values == a.sweep.values);
  CHECK(b.sim.layout_seed == a.sim.layout_seed);
}

TEST_CASE("experiment writes one csv per cell plus summary and manifest") {
  const fs::path d = scratch("exp");
  const auto cells = run_experiment(tiny_doc(), d.string());
  CHECK(cells.size() == 4);
  for (const char* f : {"MaxAoI_1.csv", "MaxAoI_2.csv", "LyaHiPPO_1.csv", "LyaHiPPO_2.csv",
                        "summary.csv", "manifest.json"})
    CHECK(fs::exists(d / f));
  std::istringstream sum(slurp(d / "summary.csv"));
  std::string line;
  std::getline(sum, line);
  CHECK(line == summary_header());
  int rows = 0;
  while (std::getline(sum, line)) ++rows;
  CHECK(rows == 4);

  // Rerun from the manifest reproduces the summary byte for byte.
  const fs::path d2 = scratch("exp_rerun");
  run_experiment(load_config_doc((d / "manifest.json").string()), d2.string());
  CHECK(slurp(d / "summary.csv") == slurp(d2 / "summary.csv"));
  CHECK(slurp(d / "LyaHiPPO_2.csv") == slurp(d2 / "LyaHiPPO_2.csv"));

  // Job count does not change the output.
  ConfigDoc par = tiny_doc();
  par["jobs"] = "3";
  const fs::path d3 = scratch("exp_jobs");
  run_experiment(par, d3.string());
  CHECK(slurp(d / "summary.csv") == slurp(d3 / "summary.csv"));
  fs::remove_all(d);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("sweep cells land in their own directories") {
  ConfigDoc doc = tiny_doc();
  doc["schemes"] = "NoExtraction";
  doc["seeds"] = "1";
  doc["sweep"] = "D_max=2e6,1e7";
  const fs::path d = scratch("sweep");
  const auto cells = run_experiment(doc, d.string());
  REQUIRE(cells.size() == 2);
  CHECK(fs::exists(d / "D_max=2e6" / "NoExtraction_1.csv"));
  CHECK(fs::exists(d / "D_max=1e7" / "NoExtraction_1.csv"));
  CHECK(cells[0].sweep_value == "2e6");
  // Larger packets take longer to move, so the mean AoI does not drop.
  CHECK(cells[1].mean_aoi >= cells[0].mean_aoi);
  fs::remove_all(d);
}

TEST_CASE("unwritable output directory raises an IO error") {
  CHECK_THROWS_AS(run_experiment(tiny_doc(), "/proc/saoi_no_such_dir"), IoError);
}

}  // TEST_SUITE
