#ifndef SAOI_EXPERIMENT_HPP_
#define SAOI_EXPERIMENT_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "saoi/config.hpp"
#include "saoi/sim.hpp"

namespace saoi {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CellResult {
  std::string sweep_key;
  std::string sweep_value;
  SchemeId scheme = SchemeId::LyaHiPPO;
  std::uint64_t seed = 0;
  double mean_aoi = 0.0;
  double mean_value = 0.0;
  double mean_saoi = 0.0;
  double mean_reward = 0.0;
  int slots = 0;
  std::string csv_path;  // relative to the output directory
};

// Writes {scheme}_{seed}.csv per cell (inside "key=value/" for sweeps),
// summary.csv and manifest.json. Cells run on cfg.jobs worker threads; the
// output does not depend on the job count. Throws IoError.
std::vector<CellResult> run_experiment(const ConfigDoc& doc,
                                       const std::string& out_dir);

std::string summary_header();

}  // namespace saoi

#endif  // SAOI_EXPERIMENT_HPP_
