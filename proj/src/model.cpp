#include "saoi/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace saoi {

void SystemParams::resize_with(double b0, double b1, double b2, double b3,
                               double b4, double b5, double c0, double c1,
                               double c2, double fl, double fu, double gbs) {
  B0.assign(K, b0);
  B1.assign(K, b1);
  B2.assign(K, b2);
  B3.assign(K, b3);
  B4.assign(K, b4);
  B5.assign(K, b5);
  C0.assign(M, c0);
  C1.assign(M, c1);
  C2.assign(M, c2);
  f_l.assign(K, fl);
  f_u.assign(M, std::vector<double>(K, fu));
  g_bs.assign(K, gbs);
}

namespace {

void require(bool cond, const std::string& field, const std::string& what) {
  if (!cond) throw std::invalid_argument(field + ": " + what);
}

void require_size(const std::vector<double>& v, int n, const std::string& f) {
  require(static_cast<int>(v.size()) == n, f,
          "expected " + std::to_string(n) + " entries, got " +
              std::to_string(v.size()));
}

void require_all_positive(const std::vector<double>& v, const std::string& f) {
  for (double x : v) require(x > 0.0 && std::isfinite(x), f, "must be > 0");
}

}  // namespace

void SystemParams::validate() const {
  require(K >= 1, "K", "must be >= 1");
  require(M >= 1, "M", "must be >= 1");
  require(t_max > 0.0, "t_max", "must be > 0");
  require(v_max >= 0.0, "v_max", "must be >= 0");
  require(d_min > 0.0, "d_min", "must be > 0");
  require(H >= 0.0, "H", "must be >= 0");
  require(area_w > 0.0 && area_h > 0.0, "area", "must be > 0");
  require(xi > 0.0, "xi", "must be > 0");
  require(g0 >= 0.0, "g0", "must be >= 0");
  require(sigma2_uav > 0.0, "sigma2_uav", "must be > 0");
  require(sigma2_bs > 0.0, "sigma2_bs", "must be > 0");
  require(p_gu > 0.0, "p_gu", "must be > 0");
  require(p_uav > 0.0, "p_uav", "must be > 0");
  require(W_bw > 0.0, "W_bw", "must be > 0");
  require(a_max > 0.0, "a_max", "must be > 0");
  require(V >= 0.0, "V", "must be >= 0");
  require(w1 >= 0.0, "w1", "must be >= 0");
  require(w2 >= 0.0, "w2", "must be >= 0");
  require(gamma_disc > 0.0 && gamma_disc < 1.0, "gamma_disc",
          "must lie in (0,1)");
  require(rho_min > 0.0 && rho_min < 1.0, "rho_min", "must lie in (0,1)");
  require(relay_size_bits >= 0.0, "relay_size_bits", "must be >= 0");
  for (const auto* v : {&B0, &B1, &B2, &B3, &B4, &B5, &f_l, &g_bs})
    require_size(*v, K, "per-GU coefficients");
  for (const auto* v : {&C0, &C1, &C2}) require_size(*v, M, "per-UAV coefficients");
  require(static_cast<int>(f_u.size()) == M, "f_u", "expected M rows");
  for (const auto& row : f_u) {
    require_size(row, K, "f_u");
    require_all_positive(row, "f_u");
  }
  require_all_positive(B0, "B0");
  require_all_positive(B1, "B1");
  require_all_positive(B3, "B3");
  require_all_positive(B4, "B4");
  require_all_positive(C0, "C0");
  require_all_positive(C1, "C1");
  require_all_positive(f_l, "f_l");
  require_all_positive(g_bs, "g_bs");
  for (double b : B2) require(b >= 1.0, "B2", "must be >= 1");
  for (double c : C2) require(c >= 1.0, "C2", "must be >= 1");
  for (double b : B5) require(b >= 0.0, "B5", "must be >= 0");
  require(inside_area(bs_pos), "bs_pos", "must lie inside the area");
}

SystemParams default_params() {
  SystemParams p;
  p.resize_with(50.0, 1e8, 2.0, 1e8, 1.0, 1e-6, 50.0, 1e8, 2.0, 1e9, 3e9,
                1e10);
  return p;
}

// ---- Association ----------------------------------------------------------

Association Association::from_matrix(
    const std::vector<std::vector<int>>& beta) {
  const int M = static_cast<int>(beta.size());
  const int K = M > 0 ? static_cast<int>(beta[0].size()) : 0;
  Association a(M, K);
  for (int m = 0; m < M; ++m) {
    if (static_cast<int>(beta[m].size()) != K)
      throw std::invalid_argument("association matrix is ragged");
    for (int k = 0; k < K; ++k) {
      if (beta[m][k] != 0 && beta[m][k] != 1)
        throw std::invalid_argument("association entries must be 0 or 1");
      if (beta[m][k] == 1) a.assign(m, k);
    }
  }
  return a;
}

Association Association::from_choices(const std::vector<int>& choice,
                                      int num_gus) {
  Association a(static_cast<int>(choice.size()), num_gus);
  for (int m = 0; m < static_cast<int>(choice.size()); ++m)
    if (choice[m] != kIdle) a.assign(m, choice[m]);
  return a;
}

void Association::assign(int m, int k) {
  if (m < 0 || m >= num_uavs() || k < 0 || k >= num_gus())
    throw std::out_of_range("association index out of range");
  if (gu_of_uav_[m] != kIdle && gu_of_uav_[m] != k)
    throw std::invalid_argument("UAV " + std::to_string(m) +
                                " already serves a GU");
  if (uav_of_gu_[k] != kIdle && uav_of_gu_[k] != m)
    throw std::invalid_argument("GU " + std::to_string(k) +
                                " already associated");
  gu_of_uav_[m] = k;
  uav_of_gu_[k] = m;
}

void Association::unassign_gu(int k) {
  const int m = uav_of_gu_.at(k);
  if (m == kIdle) return;
  gu_of_uav_[m] = kIdle;
  uav_of_gu_[k] = kIdle;
}

int Association::num_scheduled() const {
  return static_cast<int>(std::count_if(uav_of_gu_.begin(), uav_of_gu_.end(),
                                        [](int m) { return m != kIdle; }));
}

std::vector<std::vector<int>> Association::matrix() const {
  std::vector<std::vector<int>> b(num_uavs(), std::vector<int>(num_gus(), 0));
  for (int m = 0; m < num_uavs(); ++m)
    if (gu_of_uav_[m] != kIdle) b[m][gu_of_uav_[m]] = 1;
  return b;
}

SlotAction SlotAction::idle(int M, int K, const std::vector<Vec2>& hold) {
  SlotAction a;
  a.assoc = Association(M, K);
  a.rho_l.assign(K, 0.0);
  a.rho_u.assign(M, std::vector<double>(K, 0.0));
  a.relay.assign(K, false);
  a.uav_pos_next = hold;
  return a;
}

double SlotAction::rho_u_of(int k) const {
  const int m = assoc.uav_of(k);
  return m == kIdle ? 0.0 : rho_u[m][k];
}

double SlotAction::rho_eff(int k) const {
  if (!assoc.scheduled(k)) return 0.0;
  return rho_l[k] + rho_u_of(k);
}

// ---- channel ----------------------------------------------------------------

double air_ground_distance(const Vec2& uav_pos, const Vec2& node_pos,
                           double H) {
  return std::sqrt(dist2(uav_pos, node_pos) + H * H);
}

namespace {

Complex rician_mix(const Complex& fading, double g0) {
  if (std::isinf(g0)) return {1.0, 0.0};
  const double los = std::sqrt(g0 / (g0 + 1.0));
  const double nlos = std::sqrt(1.0 / (g0 + 1.0));
  return Complex(los, 0.0) + nlos * fading;
}

}  // namespace

Complex channel_gain(const Vec2& uav_pos, const Vec2& node_pos,
                     const Complex& fading, const SystemParams& params) {
  const double d = air_ground_distance(uav_pos, node_pos, params.H);
  if (!(d > 0.0)) throw std::domain_error("channel_gain: zero distance");
  return (std::sqrt(params.xi) / d) * rician_mix(fading, params.g0);
}

double snr(const Complex& h, double p_tx, double sigma2) {
  return p_tx * std::norm(h) / sigma2;
}

double link_rate(const Complex& h, double p_tx, double sigma2, double W_bw) {
  return W_bw * std::log2(1.0 + snr(h, p_tx, sigma2));
}

double snr_coefficient(const Complex& fading, double p_tx, double sigma2,
                       const SystemParams& params) {
  return p_tx * params.xi * std::norm(rician_mix(fading, params.g0)) / sigma2;
}

// ---- computation ------------------------------------------------------------

double extract_cycles_local(double D, double rho, double B0, double B1,
                            double B2) {
  return B0 * D + B1 * std::pow(1.0 - rho, B2);
}

double extract_cycles_edge(double D, double rho, double C0, double C1,
                           double C2) {
  return C0 * D + C1 * std::pow(1.0 - rho, C2);
}

double recovery_cycles(double rho_eff, double B3, double B4) {
  if (!(rho_eff > 0.0))
    throw std::domain_error("recovery_cycles: depth must be positive");
  return B3 * std::pow(rho_eff, -B4);
}

LinkRates compute_rates(const WorldState& state,
                        const std::vector<Vec2>& uav_pos,
                        const SystemParams& params) {
  LinkRates r;
  r.uplink.assign(params.M, std::vector<double>(params.K, 0.0));
  r.forward.assign(params.M, 0.0);
  for (int m = 0; m < params.M; ++m) {
    for (int k = 0; k < params.K; ++k) {
      const Complex h =
          channel_gain(uav_pos[m], state.gu_pos[k], state.fading[m][k], params);
      r.uplink[m][k] = link_rate(h, params.p_gu, params.sigma2_uav, params.W_bw);
    }
    const Complex h0 = channel_gain(uav_pos[m], params.bs_pos,
                                    state.fading[m][params.K], params);
    r.forward[m] = link_rate(h0, params.p_uav, params.sigma2_bs, params.W_bw);
  }
  return r;
}

bool relay_mode(const SlotAction& action, int k, double D,
                const SystemParams& params) {
  if (!action.assoc.scheduled(k)) return false;
  const bool raw = action.rho_l[k] == 1.0 && action.rho_u_of(k) == 0.0;
  return raw && (action.relay[k] || D <= params.relay_size_bits);
}

TimingBreakdown gu_timing(const SlotAction& action, int k, double D,
                          const LinkRates& rates, const SystemParams& params) {
  TimingBreakdown t;
  const int m = action.assoc.uav_of(k);
  if (m == kIdle) return t;
  const double rl = action.rho_l[k];
  const double ru = action.rho_u[m][k];
  const bool relay = relay_mode(action, k, D, params);

  if (!relay && rl > 0.0)
    t.t_le = extract_cycles_local(D, rl, params.B0[k], params.B1[k],
                                  params.B2[k]) /
             params.f_l[k];
  const double upload_bits = (params.physical_upload && ru > 0.0) ? D : rl * D;
  t.t_s = upload_bits / rates.uplink[m][k];
  if (!relay && ru > 0.0)
    t.t_ue = extract_cycles_edge(D, ru, params.C0[m], params.C1[m],
                                 params.C2[m]) /
             params.f_u[m][k];
  t.t_f = (rl + ru) * D / rates.forward[m];
  if (!relay)
    t.t_r = recovery_cycles(std::max(rl + ru, params.rho_min), params.B3[k],
                            params.B4[k]) /
            params.g_bs[k];
  return t;
}

std::vector<TimingBreakdown> timing_breakdown(const WorldState& state,
                                              const SlotAction& action,
                                              const LinkRates& rates,
                                              const SystemParams& params) {
  std::vector<TimingBreakdown> out(params.K);
  for (int k = 0; k < params.K; ++k)
    out[k] = gu_timing(action, k, state.packet[k].size_bits, rates, params);
  return out;
}

std::vector<double> information_value(const WorldState& state,
                                      const SlotAction& action,
                                      const SystemParams& params) {
  std::vector<double> v(params.K, 0.0);
  for (int k = 0; k < params.K; ++k) {
    if (!action.assoc.scheduled(k)) continue;
    const double D = state.packet[k].size_bits;
    v[k] = 1.0 - std::exp(-params.B5[k] * action.rho_eff(k) * D);
  }
  return v;
}

std::vector<double> aoi_step(const WorldState& state, const SlotAction& action,
                             const std::vector<TimingBreakdown>& timing,
                             const SystemParams& params) {
  std::vector<double> next(params.K);
  for (int k = 0; k < params.K; ++k) {
    if (action.assoc.scheduled(k)) {
      const double wait =
          static_cast<double>(state.slot - state.packet[k].gen_slot) *
          params.t_max;
      next[k] = wait + timing[k].total();
    } else {
      next[k] = state.aoi[k] + params.t_max;
    }
  }
  return next;
}

FeasibilityFlags check_trajectory(const std::vector<Vec2>& prev,
                                  const std::vector<Vec2>& next,
                                  const SystemParams& params, double tol) {
  FeasibilityFlags f;
  const int M = static_cast<int>(next.size());
  const double reach = params.t_max * params.v_max;
  for (int m = 0; m < M; ++m) {
    if (dist(next[m], prev[m]) > reach + tol) {
      f.speed = false;
      f.speed_violations.push_back(m);
    }
    for (int n = m + 1; n < M; ++n) {
      if (dist(next[m], next[n]) < params.d_min - tol) {
        f.collision = false;
        f.collisions.emplace_back(m, n);
      }
    }
  }
  return f;
}

FeasibilityFlags check_action(const WorldState& state, const SlotAction& action,
                              const std::vector<TimingBreakdown>& timing,
                              const SystemParams& params, double comp_tol) {
  FeasibilityFlags f =
      check_trajectory(state.uav_pos, action.uav_pos_next, params);
  for (const auto& p : action.uav_pos_next)
    if (!params.inside_area(p, 1e-6)) f.area = false;
  for (int k = 0; k < params.K; ++k) {
    const double rl = action.rho_l[k];
    if (rl < 0.0 || rl > 1.0) f.depth_range = false;
    for (int m = 0; m < params.M; ++m) {
      const double ru = action.rho_u[m][k];
      if (ru < 0.0 || ru > 1.0) f.depth_range = false;
      if (action.assoc.beta(m, k) && rl * ru > comp_tol)
        f.complementarity = false;
    }
    if (action.assoc.scheduled(k)) {
      if (action.rho_eff(k) <= 0.0) f.depth_range = false;
      if (timing[k].total() > params.t_max * (1.0 + 1e-9)) {
        f.budget = false;
        f.budget_violations.push_back(k);
      }
    }
  }
  return f;
}

}  // namespace saoi
