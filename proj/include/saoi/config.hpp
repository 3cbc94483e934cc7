#ifndef SAOI_CONFIG_HPP_
#define SAOI_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "saoi/sim.hpp"

namespace saoi {

// Schema violation; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  std::string key;                  // empty: no sweep
  std::vector<std::string> values;  // as written, also used in directory names
};

struct ExperimentConfig {
  SimConfig sim;
  std::vector<SchemeId> schemes = all_schemes();
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  SweepSpec sweep;
  int jobs = 1;
};

// Key assignments in textual form. Nested JSON objects and INI sections are
// flattened to dotted keys ("ppo.lr"); lists are joined with commas.
using ConfigDoc = std::map<std::string, std::string>;

// JSON when the first non-blank character is '{', otherwise key = value lines
// with '#' comments and comma separated lists. Throws ConfigError.
ConfigDoc parse_config_text(const std::string& text);
ConfigDoc load_config_doc(const std::string& path);

// Applies the document on top of the defaults and validates the result.
ExperimentConfig resolve_config(const ConfigDoc& doc);
ExperimentConfig load_config(const std::string& path);

// "key=v1,v2,..." as given on the command line.
SweepSpec parse_sweep(const std::string& text);

// Canonical JSON of every resolved key. Feeding it back to parse_config_text
// and resolve_config reproduces the same configuration.
std::string config_to_json(const ExperimentConfig& cfg);

// Every accepted key, in canonical order.
std::vector<std::string> config_keys();

double dbm_to_watt(double dbm);
double watt_to_dbm(double w);

}  // namespace saoi

#endif  // SAOI_CONFIG_HPP_
