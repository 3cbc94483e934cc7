#include "saoi/hippo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "saoi/deploy_opt.hpp"
#include "saoi/model.hpp"
#include "saoi/slot.hpp"

namespace saoi {

HierDecision decide_hierarchical(const WorldState& state, const PpoAgent& agent,
                                 const std::vector<double>& nobs,
                                 const SystemParams& params,
                                 std::mt19937_64& rng, bool greedy,
                                 const AoOptions& ao_opts) {
  HierDecision d;
  d.nobs = nobs;
  const PolicyOutput out = policy_forward(agent, nobs);
  d.logits = out.logits;
  d.value = out.value;
  const MaskedSample s =
      greedy ? greedy_masked(out.logits) : sample_masked(out.logits, rng);
  d.choice = s.choice;
  d.logprob = s.logprob;
  const Association assoc = Association::from_choices(s.choice, params.K);
  try {
    d.ao = alternate(state, assoc, state.uav_pos, params, ao_opts);
    d.action = d.ao.action;
  } catch (const std::exception&) {
    d.fallback = true;
    d.action = SlotAction::idle(params.M, params.K, state.uav_pos);
  }
  return d;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

SlotAction squash_conventional(const WorldState& state,
                               const std::vector<int>& choice,
                               const std::vector<double>& cont,
                               const SystemParams& params) {
  const int M = params.M;
  SlotAction a = SlotAction::idle(M, params.K, state.uav_pos);
  a.assoc = Association::from_choices(choice, params.K);
  const double R = params.t_max * params.v_max;
  for (int m = 0; m < M; ++m) {
    const double* u = cont.data() + 4 * m;
    const int k = choice[m];
    if (k != kIdle) {
      double rl = sigmoid(u[0]), ru = sigmoid(u[1]);
      if (rl > ru)
        ru = 0.0;
      else
        rl = 0.0;
      a.rho_l[k] = rl > 0.0 ? std::max(rl, params.rho_min) : 0.0;
      a.rho_u[m][k] = ru > 0.0 ? std::max(ru, params.rho_min) : 0.0;
    }
    const Vec2 v{u[2], u[3]};
    const double n = v.norm();
    const Vec2 step = n > 0.0 ? v * (R * std::tanh(n) / n) : Vec2{};
    a.uav_pos_next[m] = state.uav_pos[m] + step;
  }
  DeployProblem p;
  p.M = M;
  p.old_pos = state.uav_pos;
  p.radius = R;
  p.d_min = params.d_min;
  p.area_w = params.area_w;
  p.area_h = params.area_h;
  std::vector<Vec2> x = a.uav_pos_next;
  if (project_positions(p, &x) &&
      check_trajectory(state.uav_pos, x, params).ok())
    a.uav_pos_next = x;
  else
    a.uav_pos_next = state.uav_pos;
  return a;
}

ConvDecision decide_conventional(const WorldState& state, const PpoAgent& agent,
                                 const std::vector<double>& nobs,
                                 const SystemParams& params,
                                 std::mt19937_64& rng, bool greedy) {
  ConvDecision d;
  d.nobs = nobs;
  const PolicyOutput out = policy_forward(agent, nobs);
  d.logits = out.logits;
  d.mu = out.mu;
  d.value = out.value;
  const MaskedSample s =
      greedy ? greedy_masked(out.logits) : sample_masked(out.logits, rng);
  d.choice = s.choice;
  d.cont = out.mu;
  if (!greedy) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t i = 0; i < d.cont.size(); ++i)
      d.cont[i] += std::exp(agent.log_std[i]) * nd(rng);
  }
  d.logprob = s.logprob + gaussian_logprob(d.cont, out.mu, agent.log_std);

  d.action = squash_conventional(state, d.choice, d.cont, params);
  const SlotOutcome o = evaluate_slot(state, d.action, params);
  double weight = 0.0;
  for (int k = 0; k < params.K; ++k) {
    if (!d.action.assoc.scheduled(k)) continue;
    if (o.timing[k].total() > params.t_max) {
      const int m = d.action.assoc.uav_of(k);
      d.action.rho_l[k] = 0.0;
      d.action.rho_u[m][k] = 0.0;
      d.action.assoc.unassign_gu(k);
      d.descheduled.push_back(k);
    }
  }
  if (!d.descheduled.empty()) {
    for (int k = 0; k < params.K; ++k)
      weight += state.queue[k] + params.V * params.w1;
    d.penalty = -10.0 * params.t_max * weight;
  }
  return d;
}

}  // namespace saoi
