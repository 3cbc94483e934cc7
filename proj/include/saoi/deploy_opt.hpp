#ifndef SAOI_DEPLOY_OPT_HPP_
#define SAOI_DEPLOY_OPT_HPP_

#include <vector>

#include "saoi/types.hpp"

namespace saoi {

// Affine lower bound of a link rate in s = |l - node|^2 (horizontal).
struct RateTangent {
  Vec2 node;
  double r0 = 0.0;
  double slope = 0.0;  // d rate / d s at the anchor, <= 0
  double s0 = 0.0;

  double eval(const Vec2& l) const { return r0 + slope * (dist2(l, node) - s0); }
  Vec2 grad(const Vec2& l) const { return (l - node) * (2.0 * slope); }
};

RateTangent linearize_rate(const Vec2& anchor_pos, const Vec2& node_pos,
                           double anchor_rate, double anchor_snr, double H,
                           double W_bw);

// -|D|^2 + 2 D.(l_m - l_m'), D = anchor_m - anchor_m'. Coincident anchors are
// separated by 1e-3 m along x first.
double linearize_collision(const Vec2& anchor_m, const Vec2& anchor_mp,
                           const Vec2& pos_m, const Vec2& pos_mp);

struct DeployLink {
  int m = 0;
  int k = 0;
  double w = 0.0;       // Q_k + V*w1
  double phi3 = 0.0;    // uploaded bits
  double phi4 = 0.0;    // forwarded bits
  double chi3 = 0.0;    // compute time, s
  double coeff_s = 0.0; // uplink snr * d^2
  double coeff_f = 0.0; // forward snr * d^2
  Vec2 gu_pos;
};

struct DeployProblem {
  int M = 0;
  std::vector<DeployLink> links;
  std::vector<Vec2> old_pos;
  Vec2 bs_pos;
  double radius = 0.0;  // t_max * v_max
  double d_min = 0.0;
  double H = 0.0;
  double W_bw = 1.0;
  double area_w = 0.0;
  double area_h = 0.0;
  double t_max = 1.0;
  double penalty_weight = 1e3;
  double rate_eps = 1e-3;
  int max_pgd_iters = 5000;
  double step_tol = 1e-6;
  int sca_iters = 20;
  double sca_tol = 1e-4;
};

struct SubproblemResult {
  std::vector<Vec2> positions;
  double surrogate = 0.0;
  int pgd_iterations = 0;
  bool infeasible = false;
};

struct DeploySolution {
  std::vector<Vec2> positions;
  double surrogate = 0.0;
  double objective = 0.0;             // exact rates, with budget penalty
  std::vector<double> objective_trace;
  int sca_iterations = 0;
  bool converged = false;
  bool infeasible = false;
  std::vector<int> budget_violations;  // GU indices
};

DeployProblem build_deploy_problem(const WorldState& state,
                                   const SlotAction& action,
                                   const SystemParams& params);

// Weighted transfer time plus budget penalty at exact rates.
double deploy_objective(const DeployProblem& p, const std::vector<Vec2>& pos);
std::vector<double> link_times(const DeployProblem& p,
                               const std::vector<Vec2>& pos);

SubproblemResult solve_sca_subproblem(const DeployProblem& p,
                                      const std::vector<Vec2>& anchor);

// Projects x onto the speed balls around p.old_pos, the collision halfspaces
// linearized at p.old_pos and the area box. Links in p are ignored.
bool project_positions(const DeployProblem& p, std::vector<Vec2>* x);

DeploySolution solve_deployment(const DeployProblem& p,
                                const std::vector<Vec2>& init);

}  // namespace saoi

#endif  // SAOI_DEPLOY_OPT_HPP_
