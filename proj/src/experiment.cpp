#include "saoi/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace saoi {

namespace fs = std::filesystem;

namespace {

struct Cell {
  ExperimentConfig cfg;
  std::string key, value;
  SchemeId scheme;
  std::uint64_t seed;
  std::string rel_path;
};

void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string summary_header() {
  return "sweep_key,sweep_value,scheme,seed,mean_aoi,mean_value,mean_saoi,"
         "mean_reward,slots";
}

std::vector<CellResult> run_experiment(const ConfigDoc& doc,
                                       const std::string& out_dir) {
  const ExperimentConfig base = resolve_config(doc);
  std::vector<Cell> cells;
  auto add_cells = [&](const ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
    const std::string dir = key.empty() ? "" : key + "=" + value + "/";
    for (SchemeId s : cfg.schemes)
      for (std::uint64_t seed : cfg.seeds)
        cells.push_back({cfg, key, value, s, seed,
                         dir + scheme_name(s) + "_" + std::to_string(seed) + ".csv"});
  };
  if (base.sweep.key.empty()) {
    add_cells(base, "", "");
  } else {
    for (const std::string& v : base.sweep.values) {
      ConfigDoc d = doc;
      d.erase("sweep");
      d[base.sweep.key] = v;
      add_cells(resolve_config(d), base.sweep.key, v);
    }
  }

  const fs::path root(out_dir);
  {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  }
  write_file(root / "manifest.json", config_to_json(base) + "\n");

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (error) return;
      }
      try {
        const Cell& c = cells[i];
        const MetricLog log = run_scheme(c.cfg.sim, c.scheme, c.seed);
        std::ostringstream os;
        log.write_csv(os);
        write_file(root / c.rel_path, os.str());
        CellResult& r = results[i];
        r.sweep_key = c.key;
        r.sweep_value = c.value;
        r.scheme = c.scheme;
        r.seed = c.seed;
        r.mean_aoi = log.mean_aoi();
        r.mean_value = log.mean_value();
        r.mean_saoi = log.mean_saoi();
        r.mean_reward = log.mean_reward();
        r.slots = static_cast<int>(log.rows.size());
        r.csv_path = c.rel_path;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const int n = std::max(1, std::min<int>(base.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  std::ostringstream os;
  os << summary_header() << '\n';
  for (const CellResult& r : results) {
    os << r.sweep_key << ',' << r.sweep_value << ',' << scheme_name(r.scheme)
       << ',' << r.seed << ',' << num(r.mean_aoi) << ',' << num(r.mean_value)
       << ',' << num(r.mean_saoi) << ',' << num(r.mean_reward) << ','
       << r.slots << '\n';
  }
  write_file(root / "summary.csv", os.str());
  return results;
}

}  // namespace saoi
