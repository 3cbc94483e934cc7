#ifndef SAOI_AO_HPP_
#define SAOI_AO_HPP_

#include <vector>

#include "saoi/depth_opt.hpp"
#include "saoi/deploy_opt.hpp"
#include "saoi/types.hpp"

namespace saoi {

enum class DepthMode {
  Optimize,  // Lagrangian depth solver
  Forced,    // fixed effective depth, branch picked by cost
  Relay,     // raw relay, no extraction
};

struct AoOptions {
  int max_outer = 10;
  double rel_tol = 1e-3;
  double penalty_weight = 1e3;
  DepthMode mode = DepthMode::Optimize;
  double forced_rho = 1.0;
  bool move = true;  // run the deployment block
};

struct AoResult {
  SlotAction action;
  std::vector<double> trace;  // penalized objective per outer iteration
  int outer_iterations = 0;
  bool converged = false;
  bool depth_flag = false;   // depth solver did not converge
  bool deploy_flag = false;  // deployment infeasible or descent check failed
  std::vector<int> descheduled;
};

// Fixed effective depth rho: each GU takes the cheaper of local or edge
// extraction that fits the budget, otherwise it is marked infeasible.
DepthSolution forced_depths(const DepthProblem& problem, double rho);
DepthSolution relay_depths(const DepthProblem& problem);

// U plus penalty_weight * sum max(0, t - t_max)^2 over scheduled GUs.
double penalized_objective(const WorldState& state, const SlotAction& action,
                           const SystemParams& params, double penalty_weight);

AoResult alternate(const WorldState& state, const Association& assoc,
                   const std::vector<Vec2>& init_positions,
                   const SystemParams& params, const AoOptions& opts = {});

}  // namespace saoi

#endif  // SAOI_AO_HPP_
