#include "saoi/ao.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "saoi/model.hpp"
#include "saoi/slot.hpp"

namespace saoi {

namespace {

DepthSolution empty_solution(const DepthProblem& p) {
  DepthSolution s;
  s.rho_l.assign(p.K, 0.0);
  s.rho_u.assign(p.M, std::vector<double>(p.K, 0.0));
  s.varrho.assign(p.M, std::vector<double>(p.K, 0.0));
  s.lambda1.assign(p.K, 0.0);
  s.lambda2.assign(p.M, std::vector<double>(p.K, 0.0));
  s.relay.assign(p.K, false);
  s.infeasible.assign(p.K, false);
  s.converged = true;
  return s;
}

}  // namespace

DepthSolution forced_depths(const DepthProblem& problem, double rho) {
  DepthSolution s = empty_solution(problem);
  for (const DepthCoeffs& c : problem.links) {
    const double r = std::clamp(rho, c.rho_min, 1.0);
    const double tl = link_time(r, 0.0, c), te = link_time(0.0, r, c);
    const double cl = tl <= c.t_max ? link_cost(r, 0.0, c)
                                    : std::numeric_limits<double>::infinity();
    const double ce = te <= c.t_max ? link_cost(0.0, r, c)
                                    : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cl) && !std::isfinite(ce)) {
      s.infeasible[c.k] = true;
    } else if (cl <= ce) {
      s.rho_l[c.k] = r;
      s.relay[c.k] = c.relay_ok && r == 1.0;
    } else {
      s.rho_u[c.m][c.k] = r;
    }
  }
  return s;
}

DepthSolution relay_depths(const DepthProblem& problem) {
  DepthSolution s = empty_solution(problem);
  for (const DepthCoeffs& c : problem.links) {
    if (c.psi2s + c.psi2f > c.t_max) {
      s.infeasible[c.k] = true;
      continue;
    }
    s.rho_l[c.k] = 1.0;
    s.relay[c.k] = true;
  }
  return s;
}

double penalized_objective(const WorldState& state, const SlotAction& action,
                           const SystemParams& params, double penalty_weight) {
  const SlotOutcome out = evaluate_slot(state, action, params);
  double f = out.objective_u;
  for (int k = 0; k < params.K; ++k) {
    if (!action.assoc.scheduled(k)) continue;
    const double v = std::max(0.0, out.timing[k].total() - params.t_max);
    f += penalty_weight * v * v;
  }
  return f;
}

namespace {

SlotAction make_action(const Association& assoc, const DepthSolution& d,
                       const std::vector<Vec2>& pos, const SystemParams& params) {
  SlotAction a = SlotAction::idle(params.M, params.K, pos);
  a.assoc = assoc;
  for (int k = 0; k < params.K; ++k) {
    if (!assoc.scheduled(k)) continue;
    if (d.infeasible[k]) {
      a.assoc.unassign_gu(k);
      continue;
    }
    const int m = assoc.uav_of(k);
    a.rho_l[k] = d.rho_l[k];
    a.rho_u[m][k] = d.rho_u[m][k];
    a.relay[k] = d.relay[k];
  }
  return a;
}

DepthSolution depths_at(const WorldState& state, const Association& assoc,
                        const std::vector<Vec2>& pos, const SystemParams& params,
                        const AoOptions& opts) {
  const LinkRates rates = compute_rates(state, pos, params);
  const DepthProblem prob = build_depth_problem(state, assoc, rates, params);
  switch (opts.mode) {
    case DepthMode::Forced:
      return forced_depths(prob, opts.forced_rho);
    case DepthMode::Relay:
      return relay_depths(prob);
    case DepthMode::Optimize:
      break;
  }
  return solve_depths(prob);
}

}  // namespace

AoResult alternate(const WorldState& state, const Association& assoc,
                   const std::vector<Vec2>& init_positions,
                   const SystemParams& params, const AoOptions& opts) {
  AoResult res;
  const double pw = opts.penalty_weight;
  if (assoc.num_scheduled() == 0) {
    res.action = SlotAction::idle(params.M, params.K, init_positions);
    res.trace.push_back(penalized_objective(state, res.action, params, pw));
    res.outer_iterations = 1;
    res.converged = true;
    return res;
  }

  std::vector<Vec2> pos = init_positions;
  DepthSolution d = depths_at(state, assoc, pos, params, opts);
  res.depth_flag = !d.converged;
  SlotAction act = make_action(assoc, d, pos, params);
  double J = penalized_objective(state, act, params, pw);
  res.trace.push_back(J);

  for (int it = 1; it <= opts.max_outer; ++it) {
    res.outer_iterations = it;
    std::vector<Vec2> next = pos;
    if (opts.move) {
      DeployProblem dp = build_deploy_problem(state, act, params);
      dp.penalty_weight = pw;
      try {
        const DeploySolution ds = solve_deployment(dp, pos);
        if (ds.infeasible) res.deploy_flag = true;
        next = ds.positions;
      } catch (const std::logic_error&) {
        res.deploy_flag = true;
      }
      if (!check_trajectory(state.uav_pos, next, params).ok()) {
        res.deploy_flag = true;
        next = pos;
      }
    }

    const SlotAction prev = act;
    SlotAction keep = act;
    keep.uav_pos_next = next;
    const double J_keep = penalized_objective(state, keep, params, pw);

    const DepthSolution d2 = depths_at(state, assoc, next, params, opts);
    const SlotAction fresh = make_action(assoc, d2, next, params);
    const double J_fresh = penalized_objective(state, fresh, params, pw);

    double J_new;
    if (J_fresh <= J_keep) {
      act = fresh;
      J_new = J_fresh;
      res.depth_flag = res.depth_flag || !d2.converged;
    } else {
      act = keep;
      J_new = J_keep;
    }
    // Guard against a deployment step that made things worse.
    if (J_new > J) {
      act = prev;
      J_new = J;
      res.deploy_flag = true;
    }
    pos = act.uav_pos_next;
    res.trace.push_back(J_new);
    const double rel = std::abs(J - J_new) / std::max(std::abs(J), 1e-12);
    J = J_new;
    if (rel < opts.rel_tol) {
      res.converged = true;
      break;
    }
  }

  const SlotOutcome out = evaluate_slot(state, act, params);
  for (int k = 0; k < params.K; ++k) {
    if (act.assoc.scheduled(k) && out.timing[k].total() > params.t_max) {
      const int m = act.assoc.uav_of(k);
      act.rho_l[k] = 0.0;
      act.rho_u[m][k] = 0.0;
      act.relay[k] = false;
      act.assoc.unassign_gu(k);
      res.descheduled.push_back(k);
    }
  }
  res.action = act;
  return res;
}

}  // namespace saoi
