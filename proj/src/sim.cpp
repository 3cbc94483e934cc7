#include "saoi/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "saoi/hippo.hpp"
#include "saoi/lyapunov.hpp"
#include "saoi/model.hpp"
#include "saoi/slot.hpp"

namespace saoi {

const char* scheme_name(SchemeId s) {
  switch (s) {
    case SchemeId::LyaHiPPO: return "LyaHiPPO";
    case SchemeId::ConventionalPPO: return "ConventionalPPO";
    case SchemeId::MaxAoI: return "MaxAoI";
    case SchemeId::MaxValue: return "MaxValue";
    case SchemeId::NoExtraction: return "NoExtraction";
  }
  return "?";
}

SchemeId parse_scheme(const std::string& name) {
  for (SchemeId s : all_schemes())
    if (name == scheme_name(s)) return s;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::vector<SchemeId> all_schemes() {
  return {SchemeId::LyaHiPPO, SchemeId::ConventionalPPO, SchemeId::MaxAoI,
          SchemeId::MaxValue, SchemeId::NoExtraction};
}

bool is_learning(SchemeId s) {
  return s == SchemeId::LyaHiPPO || s == SchemeId::ConventionalPPO;
}

void SimConfig::validate() const {
  params.validate();
  auto bad = [](const std::string& f, const std::string& w) {
    throw std::invalid_argument(f + ": " + w);
  };
  if (!(D_min > 0.0)) bad("D_min", "must be > 0");
  if (!(D_max >= D_min)) bad("D_max", "must be >= D_min");
  if (!(p_gen >= 0.0 && p_gen <= 1.0)) bad("p_gen", "must lie in [0,1]");
  if (!(R_cov >= 0.0)) bad("R_cov", "must be >= 0");
  if (horizon < 1) bad("horizon", "must be >= 1");
  if (episodes < 0) bad("episodes", "must be >= 0");
  if (train_horizon < 1) bad("train_horizon", "must be >= 1");
  if (update_every < 1) bad("update_every", "must be >= 1");
  if (!(reward_scale > 0.0)) bad("reward_scale", "must be > 0");
  if (forced_depth < 0.0 || forced_depth > 1.0)
    bad("forced_depth", "must lie in [0,1]");
  if (ao_max_outer < 1) bad("ao_max_outer", "must be >= 1");
  if (!(ppo.clip_eps > 0.0 && ppo.clip_eps < 1.0))
    bad("ppo.clip_eps", "must lie in (0,1)");
  if (ppo.epochs < 1) bad("ppo.epochs", "must be >= 1");
  if (ppo.minibatch < 1) bad("ppo.minibatch", "must be >= 1");
  if (ppo.hidden < 1 || ppo.layers < 1) bad("ppo.hidden", "must be >= 1");
}

namespace {

enum StreamId : std::uint32_t { kLayout = 0, kFading = 1, kArrivals = 2, kPolicy = 3, kAgent = 4 };

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream,
                            std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), id};
  return std::mt19937_64(seq);
}

}  // namespace

RngStreams::RngStreams(std::uint64_t seed, std::uint64_t stream)
    : layout(make_stream(seed, 0, kLayout)),
      fading(make_stream(seed, stream, kFading)),
      arrivals(make_stream(seed, stream, kArrivals)),
      policy(make_stream(seed, stream, kPolicy)) {}

std::vector<Vec2> initial_uav_positions(const SystemParams& params) {
  std::vector<Vec2> pos(params.M);
  const double gap = 2.0 * params.d_min;
  for (int m = 0; m < params.M; ++m) {
    Vec2 p = params.bs_pos;
    p.x -= gap;
    p.y += (m - 0.5 * (params.M - 1)) * gap;
    p.x = std::clamp(p.x, 0.0, params.area_w);
    p.y = std::clamp(p.y, 0.0, params.area_h);
    pos[m] = p;
  }
  return pos;
}

Environment::Environment(const SimConfig& cfg, std::uint64_t seed,
                         std::uint64_t stream)
    : cfg_(cfg), rng_(seed, stream) {
  cfg_.validate();
  const SystemParams& p = cfg_.params;
  std::mt19937_64 layout =
      cfg_.layout_seed ? make_stream(*cfg_.layout_seed, 0, kLayout) : rng_.layout;
  std::uniform_real_distribution<double> ux(0.0, p.area_w), uy(0.0, p.area_h);
  state_.gu_pos.resize(p.K);
  for (auto& g : state_.gu_pos) {
    g.x = ux(layout);
    g.y = uy(layout);
  }
  state_.uav_pos = initial_uav_positions(p);
  state_.aoi.assign(p.K, 0.0);
  state_.queue.assign(p.K, 0.0);
  state_.packet.assign(p.K, DataPacket{0.0, 0, true});
  state_.fading.assign(p.M, std::vector<Complex>(p.K + 1, Complex(1.0, 0.0)));
  state_.slot = 0;
}

void Environment::begin_slot() {
  const SystemParams& p = cfg_.params;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < p.K; ++k) {
    const double g = u01(rng_.arrivals);
    const double u = u01(rng_.arrivals);
    if (g < cfg_.p_gen) {
      state_.packet[k].size_bits = cfg_.D_min + u * (cfg_.D_max - cfg_.D_min);
      state_.packet[k].gen_slot = state_.slot;
      state_.packet[k].delivered = false;
    }
  }
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  for (auto& row : state_.fading)
    for (auto& f : row) {
      const double re = nd(rng_.fading);
      const double im = nd(rng_.fading);
      f = Complex(re, im);
    }
}

SlotAction sanitize_action(const WorldState& state, const SlotAction& proposed,
                           const SystemParams& params, int* descheduled,
                           bool* held) {
  SlotAction a = proposed;
  int drop = 0;
  auto unassign = [&](int k) {
    a.assoc.unassign_gu(k);
    ++drop;
  };
  for (int k = 0; k < params.K; ++k) {
    if (!a.assoc.scheduled(k)) continue;
    const DataPacket& pk = state.packet[k];
    const int m = a.assoc.uav_of(k);
    const double rl = a.rho_l[k], ru = a.rho_u[m][k];
    if (pk.delivered || !(pk.size_bits > 0.0) || !(rl + ru > 0.0) ||
        rl < 0.0 || ru < 0.0 || rl > 1.0 || ru > 1.0 || rl * ru > 1e-4)
      unassign(k);
  }
  bool h = false;
  FeasibilityFlags tf = check_trajectory(state.uav_pos, a.uav_pos_next, params);
  bool inside = true;
  for (const Vec2& p : a.uav_pos_next) inside = inside && params.inside_area(p, 1e-6);
  if (!tf.ok() || !inside) {
    a.uav_pos_next = state.uav_pos;
    h = true;
  }
  const LinkRates rates = compute_rates(state, a.uav_pos_next, params);
  for (int k = 0; k < params.K; ++k) {
    if (!a.assoc.scheduled(k)) continue;
    const TimingBreakdown t =
        gu_timing(a, k, state.packet[k].size_bits, rates, params);
    if (t.total() > params.t_max * (1.0 + 1e-9)) unassign(k);
  }
  for (int k = 0; k < params.K; ++k) {
    if (a.assoc.scheduled(k)) continue;
    a.rho_l[k] = 0.0;
    a.relay[k] = false;
    for (int m = 0; m < params.M; ++m) a.rho_u[m][k] = 0.0;
  }
  if (descheduled) *descheduled = drop;
  if (held) *held = h;
  return a;
}

Environment::StepResult Environment::step(const SlotAction& proposed) {
  const SystemParams& p = cfg_.params;
  StepResult r;
  r.action = sanitize_action(state_, proposed, p, &r.descheduled, &r.held);
  r.outcome = evaluate_slot(state_, r.action, p);
  r.queue_next = queue_step(state_.queue, r.outcome.aoi_next, p.a_max);
  r.drift_ok = drift_plus_penalty_check(state_.queue, r.queue_next,
                                        r.outcome.objective_u, r.outcome.b_const,
                                        r.outcome.aoi_next, r.outcome.value, p);
  double s = 0.0;
  for (int k = 0; k < p.K; ++k)
    s += p.w1 * r.outcome.aoi_next[k] - p.w2 * r.outcome.value[k];
  r.saoi = s / p.K;
  for (int k = 0; k < p.K; ++k)
    if (r.action.assoc.scheduled(k)) state_.packet[k].delivered = true;
  state_.aoi = r.outcome.aoi_next;
  state_.queue = r.queue_next;
  state_.uav_pos = r.action.uav_pos_next;
  ++state_.slot;
  return r;
}

namespace {

template <typename Score>
Association claim_in_range(const WorldState& state, const SystemParams& params,
                           double R_cov, bool use_range, Score score) {
  Association a(params.M, params.K);
  std::vector<bool> taken(params.K, false);
  for (int m = 0; m < params.M; ++m) {
    int best = kIdle;
    double best_s = 0.0;
    for (int k = 0; k < params.K; ++k) {
      if (taken[k] || state.packet[k].delivered) continue;
      if (use_range && dist(state.uav_pos[m], state.gu_pos[k]) > R_cov) continue;
      const double s = score(k);
      if (best == kIdle || s > best_s) {
        best = k;
        best_s = s;
      }
    }
    if (best != kIdle) {
      a.assign(m, best);
      taken[best] = true;
    }
  }
  return a;
}

}  // namespace

Association baseline_assoc_max_aoi(const WorldState& state,
                                   const SystemParams& params, double R_cov) {
  return claim_in_range(state, params, R_cov, true,
                        [&](int k) { return state.aoi[k]; });
}

Association baseline_assoc_max_value(const WorldState& state,
                                     const SystemParams& params, double R_cov) {
  return claim_in_range(state, params, R_cov, true, [&](int k) {
    return 1.0 - std::exp(-params.B5[k] * state.packet[k].size_bits);
  });
}

Association baseline_assoc_top_value(const WorldState& state,
                                     const SystemParams& params) {
  return claim_in_range(state, params, 0.0, false, [&](int k) {
    return 1.0 - std::exp(-params.B5[k] * state.packet[k].size_bits);
  });
}

AoOptions ao_options_for(SchemeId scheme, const SimConfig& cfg) {
  AoOptions o;
  o.max_outer = cfg.ao_max_outer;
  o.move = cfg.move_uavs;
  if (scheme == SchemeId::NoExtraction) {
    o.mode = DepthMode::Relay;
  } else if (cfg.forced_depth > 0.0) {
    o.mode = DepthMode::Forced;
    o.forced_rho = cfg.forced_depth;
  }
  return o;
}

SlotAction scheme_continuous_vars(SchemeId scheme, const WorldState& state,
                                  const Association& assoc,
                                  const SimConfig& cfg) {
  const AoResult r = alternate(state, assoc, state.uav_pos, cfg.params,
                               ao_options_for(scheme, cfg));
  return r.action;
}

// ---- metric log -------------------------------------------------------------

double MetricLog::mean_aoi() const {
  double s = 0.0;
  for (const auto& r : rows)
    for (double a : r.aoi) s += a;
  return rows.empty() ? 0.0 : s / (rows.size() * static_cast<double>(K));
}

double MetricLog::mean_value() const {
  double s = 0.0;
  for (const auto& r : rows)
    for (double v : r.value) s += v;
  return rows.empty() ? 0.0 : s / (rows.size() * static_cast<double>(K));
}

double MetricLog::mean_saoi() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.saoi;
  return rows.empty() ? 0.0 : s / rows.size();
}

double MetricLog::mean_reward() const {
  double s = 0.0;
  for (const auto& r : rows) s += r.reward;
  return rows.empty() ? 0.0 : s / rows.size();
}

std::vector<double> MetricLog::gu_mean_aoi() const {
  std::vector<double> m(K, 0.0);
  for (const auto& r : rows)
    for (int k = 0; k < K; ++k) m[k] += r.aoi[k];
  for (double& x : m) x /= std::max<std::size_t>(rows.size(), 1);
  return m;
}

std::string csv_header(int K, int M) {
  std::ostringstream os;
  os << "slot,mean_aoi,mean_value,saoi,reward,objective_u,b_const,drift_ok,"
        "descheduled";
  for (const char* tag : {"aoi", "value", "queue", "rho_l", "rho_u", "t_total"})
    for (int k = 0; k < K; ++k) os << ',' << tag << '_' << k;
  for (int m = 0; m < M; ++m)
    os << ",uav_x_" << m << ",uav_y_" << m << ",assoc_" << m;
  return os.str();
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  os << ',' << buf;
}

}  // namespace

void MetricLog::write_csv(std::ostream& os) const {
  os << csv_header(K, M) << '\n';
  for (const auto& r : rows) {
    double ma = 0.0, mv = 0.0;
    for (int k = 0; k < K; ++k) {
      ma += r.aoi[k];
      mv += r.value[k];
    }
    os << r.slot;
    put(os, ma / K);
    put(os, mv / K);
    put(os, r.saoi);
    put(os, r.reward);
    put(os, r.objective_u);
    put(os, r.b_const);
    os << ',' << (r.drift_ok ? 1 : 0) << ',' << r.descheduled;
    for (const auto* v : {&r.aoi, &r.value, &r.queue, &r.rho_l, &r.rho_u, &r.t_total})
      for (double x : *v) put(os, x);
    for (int m = 0; m < M; ++m) {
      put(os, r.uav_pos[m].x);
      put(os, r.uav_pos[m].y);
      os << ',' << r.assoc[m];
    }
    os << '\n';
  }
}

namespace {

SlotRow make_row(const WorldState& before, const Environment::StepResult& r,
                 double reward, const SystemParams& p) {
  SlotRow row;
  row.slot = before.slot;
  row.aoi = r.outcome.aoi_next;
  row.value = r.outcome.value;
  row.queue = r.queue_next;
  row.rho_l = r.action.rho_l;
  row.rho_u.assign(p.K, 0.0);
  row.t_total.assign(p.K, 0.0);
  for (int k = 0; k < p.K; ++k) {
    row.rho_u[k] = r.action.rho_u_of(k);
    row.t_total[k] = r.outcome.timing[k].total();
  }
  row.uav_pos = r.action.uav_pos_next;
  for (int m = 0; m < p.M; ++m) row.assoc.push_back(r.action.assoc.gu_of(m));
  row.saoi = r.saoi;
  row.reward = reward;
  row.objective_u = r.outcome.objective_u;
  row.b_const = r.outcome.b_const;
  row.drift_ok = r.drift_ok;
  row.descheduled = r.descheduled;
  return row;
}

int obs_dim(const SystemParams& p) { return p.M * p.K + 2 * p.M + p.K; }

}  // namespace

PpoAgent train_agent(SchemeId scheme, const SimConfig& cfg, std::uint64_t seed,
                     TrainStats* stats) {
  if (!is_learning(scheme))
    throw std::invalid_argument("train_agent: scheme has no policy");
  cfg.validate();
  const SystemParams& p = cfg.params;
  const bool conv = scheme == SchemeId::ConventionalPPO;
  std::mt19937_64 agent_rng = make_stream(seed, 0, kAgent);
  PpoAgent agent(obs_dim(p), p.M, p.K, conv ? conventional_cont_dim(p.M) : 0,
                 cfg.ppo, agent_rng());
  const AoOptions opts = ao_options_for(scheme, cfg);
  RolloutBuffer buf;
  TrainStats local;
  for (int e = 0; e < cfg.episodes; ++e) {
    Environment env(cfg, seed, static_cast<std::uint64_t>(e) + 1);
    double ep = 0.0;
    for (int t = 0; t < cfg.train_horizon; ++t) {
      env.begin_slot();
      const std::vector<double> raw = make_observation(env.state(), p);
      agent.norm.update(raw);
      Transition tr;
      tr.obs = agent.norm.normalize(raw);
      double reward;
      if (conv) {
        const ConvDecision d = decide_conventional(env.state(), agent, tr.obs,
                                                   p, env.rng().policy, false);
        const auto r = env.step(d.action);
        reward = -r.outcome.objective_u + d.penalty;
        tr.choice = d.choice;
        tr.cont = d.cont;
        tr.logprob = d.logprob;
        tr.value = d.value;
        tr.old_logits = d.logits;
        tr.old_mu = d.mu;
        tr.old_log_std = agent.log_std;
      } else {
        const HierDecision d = decide_hierarchical(
            env.state(), agent, tr.obs, p, env.rng().policy, false, opts);
        const auto r = env.step(d.action);
        reward = -r.outcome.objective_u;
        tr.choice = d.choice;
        tr.logprob = d.logprob;
        tr.value = d.value;
        tr.old_logits = d.logits;
      }
      ep += reward;
      tr.reward = reward * cfg.reward_scale;
      tr.done = t + 1 == cfg.train_horizon;
      buf.add(std::move(tr));
    }
    local.episode_reward.push_back(ep / cfg.train_horizon);
    const bool last = e + 1 == cfg.episodes;
    if (static_cast<int>(buf.size()) >= cfg.update_every || (last && buf.size() > 0)) {
      buf.compute_gae(cfg.ppo.gamma, cfg.ppo.lambda);
      buf.normalize_advantages();
      const UpdateStats us = ppo_update(&agent, &buf, agent_rng);
      ++local.updates;
      if (us.nan_abort) ++local.nan_aborts;
      buf.clear();
    }
  }
  agent.norm.frozen = true;
  if (stats) *stats = local;
  return agent;
}

MetricLog run_episode(const SimConfig& cfg, SchemeId scheme,
                      std::uint64_t seed, int horizon, const PpoAgent* agent) {
  const SystemParams& p = cfg.params;
  if (is_learning(scheme) && !agent)
    throw std::invalid_argument("run_episode: learning scheme needs an agent");
  Environment env(cfg, seed, 0);
  MetricLog log;
  log.K = p.K;
  log.M = p.M;
  const AoOptions opts = ao_options_for(scheme, cfg);
  for (int t = 0; t < horizon; ++t) {
    env.begin_slot();
    const WorldState before = env.state();
    SlotAction act;
    double penalty = 0.0;
    switch (scheme) {
      case SchemeId::LyaHiPPO: {
        const auto nobs = agent->norm.normalize(make_observation(before, p));
        act = decide_hierarchical(before, *agent, nobs, p, env.rng().policy,
                                  true, opts)
                  .action;
        break;
      }
      case SchemeId::ConventionalPPO: {
        const auto nobs = agent->norm.normalize(make_observation(before, p));
        const ConvDecision d = decide_conventional(before, *agent, nobs, p,
                                                   env.rng().policy, true);
        act = d.action;
        penalty = d.penalty;
        break;
      }
      case SchemeId::MaxAoI:
        act = scheme_continuous_vars(
            scheme, before, baseline_assoc_max_aoi(before, p, cfg.R_cov), cfg);
        break;
      case SchemeId::MaxValue:
        act = scheme_continuous_vars(
            scheme, before, baseline_assoc_max_value(before, p, cfg.R_cov), cfg);
        break;
      case SchemeId::NoExtraction:
        act = scheme_continuous_vars(
            scheme, before, baseline_assoc_top_value(before, p), cfg);
        break;
    }
    const auto r = env.step(act);
    log.rows.push_back(make_row(before, r, -r.outcome.objective_u + penalty, p));
  }
  return log;
}

MetricLog run_scheme(const SimConfig& cfg, SchemeId scheme, std::uint64_t seed,
                     TrainStats* stats) {
  if (!is_learning(scheme)) return run_episode(cfg, scheme, seed, cfg.horizon);
  const PpoAgent agent = train_agent(scheme, cfg, seed, stats);
  return run_episode(cfg, scheme, seed, cfg.horizon, &agent);
}

}  // namespace saoi
