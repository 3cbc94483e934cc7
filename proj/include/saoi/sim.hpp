#ifndef SAOI_SIM_HPP_
#define SAOI_SIM_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "saoi/ao.hpp"
#include "saoi/ppo.hpp"
#include "saoi/types.hpp"

namespace saoi {

enum class SchemeId { LyaHiPPO, ConventionalPPO, MaxAoI, MaxValue, NoExtraction };

const char* scheme_name(SchemeId s);
// Throws std::invalid_argument on an unknown name.
SchemeId parse_scheme(const std::string& name);
std::vector<SchemeId> all_schemes();
bool is_learning(SchemeId s);

struct SimConfig {
  SystemParams params = default_params();
  double D_min = 1e6;             // bits
  double D_max = 1e7;             // bits
  double p_gen = 1.0;
  double R_cov = 400.0;           // m
  int horizon = 500;              // evaluation slots
  int episodes = 100;             // training episodes for learning schemes
  int train_horizon = 50;         // slots per training episode
  int update_every = 128;         // minimum transitions per PPO update
  double reward_scale = 1e-3;
  std::optional<std::uint64_t> layout_seed;
  double forced_depth = 0.0;      // > 0: fixed effective depth
  int ao_max_outer = 10;
  bool move_uavs = true;
  PpoHyper ppo;

  // Throws std::invalid_argument naming the field.
  void validate() const;
};

// Named RNG sub-streams of one (seed, episode stream) pair.
struct RngStreams {
  RngStreams(std::uint64_t seed, std::uint64_t stream);
  std::mt19937_64 layout;
  std::mt19937_64 fading;
  std::mt19937_64 arrivals;
  std::mt19937_64 policy;
};

std::vector<Vec2> initial_uav_positions(const SystemParams& params);

class Environment {
 public:
  // stream 0 is the evaluation episode, stream e+1 training episode e.
  Environment(const SimConfig& cfg, std::uint64_t seed, std::uint64_t stream);

  // Packet arrivals and fading draws for the current slot.
  void begin_slot();

  struct StepResult {
    SlotAction action;  // as executed
    SlotOutcome outcome;
    std::vector<double> queue_next;
    double saoi = 0.0;  // mean over GUs of w1*a' - w2*v
    bool drift_ok = true;
    int descheduled = 0;
    bool held = false;  // trajectory rejected, positions held
  };

  // Sanitizes the action, evaluates it and advances the state.
  StepResult step(const SlotAction& proposed);

  const WorldState& state() const { return state_; }
  WorldState& mutable_state() { return state_; }
  const SimConfig& config() const { return cfg_; }
  RngStreams& rng() { return rng_; }

 private:
  SimConfig cfg_;
  RngStreams rng_;
  WorldState state_;
};

// Removes stale or missing packets, budget violations and infeasible moves.
SlotAction sanitize_action(const WorldState& state, const SlotAction& proposed,
                           const SystemParams& params, int* descheduled,
                           bool* held);

// UAVs in index order take the unclaimed GU with the highest AoI within R_cov.
// Ties go to the lower GU index; nothing in range means idle.
Association baseline_assoc_max_aoi(const WorldState& state,
                                   const SystemParams& params, double R_cov);
// Same claiming rule ranked by 1 - exp(-B5*D).
Association baseline_assoc_max_value(const WorldState& state,
                                     const SystemParams& params, double R_cov);
// Global ranking by 1 - exp(-B5*D) without a coverage limit; the M best
// GUs are matched to UAVs in index order.
Association baseline_assoc_top_value(const WorldState& state,
                                     const SystemParams& params);

AoOptions ao_options_for(SchemeId scheme, const SimConfig& cfg);

// Depths and positions for a non-learning scheme given its association.
SlotAction scheme_continuous_vars(SchemeId scheme, const WorldState& state,
                                  const Association& assoc,
                                  const SimConfig& cfg);

struct SlotRow {
  std::int64_t slot = 0;
  std::vector<double> aoi;      // a_k(i+1)
  std::vector<double> value;
  std::vector<double> queue;    // Q_k(i+1)
  std::vector<double> rho_l;
  std::vector<double> rho_u;    // of the serving UAV
  std::vector<double> t_total;
  std::vector<Vec2> uav_pos;
  std::vector<int> assoc;       // per UAV, -1 idle
  double saoi = 0.0;
  double reward = 0.0;          // -U
  double objective_u = 0.0;
  double b_const = 0.0;
  bool drift_ok = true;
  int descheduled = 0;
};

struct MetricLog {
  int K = 0;
  int M = 0;
  std::vector<SlotRow> rows;

  double mean_aoi() const;
  double mean_value() const;
  double mean_saoi() const;
  double mean_reward() const;
  // Per GU time average of a_k(i+1).
  std::vector<double> gu_mean_aoi() const;

  void write_csv(std::ostream& os) const;
};

// Fixed CSV header for K GUs and M UAVs.
std::string csv_header(int K, int M);

struct TrainStats {
  std::vector<double> episode_reward;  // mean -U per slot
  int updates = 0;
  int nan_aborts = 0;
};

// Trains a PPO agent for the learning schemes over cfg.episodes episodes.
PpoAgent train_agent(SchemeId scheme, const SimConfig& cfg, std::uint64_t seed,
                     TrainStats* stats = nullptr);

// Runs one episode over the evaluation stream. agent is required for the
// learning schemes and used greedily with a frozen normalizer.
MetricLog run_episode(const SimConfig& cfg, SchemeId scheme,
                      std::uint64_t seed, int horizon,
                      const PpoAgent* agent = nullptr);

// Trains when needed, then evaluates.
MetricLog run_scheme(const SimConfig& cfg, SchemeId scheme, std::uint64_t seed,
                     TrainStats* stats = nullptr);

}  // namespace saoi

#endif  // SAOI_SIM_HPP_
