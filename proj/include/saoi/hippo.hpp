#ifndef SAOI_HIPPO_HPP_
#define SAOI_HIPPO_HPP_

#include <random>
#include <vector>

#include "saoi/ao.hpp"
#include "saoi/ppo.hpp"
#include "saoi/types.hpp"

namespace saoi {

struct HierDecision {
  SlotAction action;
  std::vector<double> nobs;
  std::vector<int> choice;
  std::vector<std::vector<double>> logits;
  double logprob = 0.0;
  double value = 0.0;
  AoResult ao;
  bool fallback = false;  // AO threw; zero depths and held positions used
};

// Association from the policy, depths and positions from the AO solver.
// nobs is the normalized observation of state.
HierDecision decide_hierarchical(const WorldState& state, const PpoAgent& agent,
                                 const std::vector<double>& nobs,
                                 const SystemParams& params,
                                 std::mt19937_64& rng, bool greedy,
                                 const AoOptions& ao_opts = {});

// Number of continuous outputs of the flat policy: rho_l, rho_u, dx, dy per UAV.
inline int conventional_cont_dim(int M) { return 4 * M; }

struct ConvDecision {
  SlotAction action;
  std::vector<double> nobs;
  std::vector<int> choice;
  std::vector<double> cont;  // raw Gaussian sample
  std::vector<std::vector<double>> logits;
  std::vector<double> mu;
  double logprob = 0.0;
  double value = 0.0;
  double penalty = 0.0;  // added to -U in the reward, <= 0
  std::vector<int> descheduled;
};

// Squashes the raw continuous sample into depths and a displacement.
// rho values go through a sigmoid; the smaller one is zeroed (ties zero rho_u)
// and the survivor is clamped to >= rho_min. The displacement is
// radius*tanh(|u|)*u/|u|, then projected for collision and area.
SlotAction squash_conventional(const WorldState& state,
                               const std::vector<int>& choice,
                               const std::vector<double>& cont,
                               const SystemParams& params);

ConvDecision decide_conventional(const WorldState& state, const PpoAgent& agent,
                                 const std::vector<double>& nobs,
                                 const SystemParams& params,
                                 std::mt19937_64& rng, bool greedy);

}  // namespace saoi

#endif  // SAOI_HIPPO_HPP_
