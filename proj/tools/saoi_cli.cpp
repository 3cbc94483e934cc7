#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "saoi/config.hpp"
#include "saoi/experiment.hpp"

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic AoI simulator: runs scheme x seed experiments"};
  std::string config_path, out_dir = "out", sweep, horizon, episodes, jobs;
  std::vector<std::string> schemes, seeds;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON or key = value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--scheme", schemes, "scheme names (repeat or comma separate)")
      ->delimiter(',');
  app.add_option("--seed,--seeds", seeds, "seeds (repeat or comma separate)")
      ->delimiter(',');
  app.add_option("--horizon", horizon, "evaluation slots");
  app.add_option("--episodes", episodes, "training episodes for PPO schemes");
  app.add_option("--sweep", sweep, "key=v1,v2,...");
  app.add_option("--jobs", jobs, "worker threads");
  app.add_flag("--print-config", print_config,
               "print the resolved config as JSON and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    saoi::ConfigDoc doc;
    if (!config_path.empty()) doc = saoi::load_config_doc(config_path);
    if (!schemes.empty()) doc["schemes"] = join(schemes);
    if (!seeds.empty()) doc["seeds"] = join(seeds);
    if (!horizon.empty()) doc["horizon"] = horizon;
    if (!episodes.empty()) doc["episodes"] = episodes;
    if (!sweep.empty()) doc["sweep"] = sweep;
    if (!jobs.empty()) doc["jobs"] = jobs;
    const saoi::ExperimentConfig cfg = saoi::resolve_config(doc);
    if (print_config) {
      std::cout << saoi::config_to_json(cfg) << '\n';
      return 0;
    }
    const auto results = saoi::run_experiment(doc, out_dir);
    for (const auto& r : results) {
      const std::string cell =
          r.sweep_key.empty() ? "" : r.sweep_key + "=" + r.sweep_value + " ";
      std::printf("%s%-16s seed %-4llu aoi %.4f value %.4f saoi %.4f\n",
                  cell.c_str(), saoi::scheme_name(r.scheme),
                  static_cast<unsigned long long>(r.seed), r.mean_aoi,
                  r.mean_value, r.mean_saoi);
    }
    return 0;
  } catch (const saoi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const saoi::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
