#include "saoi/deploy_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "saoi/model.hpp"

namespace saoi {

namespace {
constexpr double kLog2e = 1.4426950408889634;
}

RateTangent linearize_rate(const Vec2& anchor_pos, const Vec2& node_pos,
                           double anchor_rate, double anchor_snr, double H,
                           double W_bw) {
  RateTangent t;
  t.node = node_pos;
  t.s0 = dist2(anchor_pos, node_pos);
  t.r0 = anchor_rate;
  t.slope = -W_bw * kLog2e * anchor_snr /
            ((1.0 + anchor_snr) * (t.s0 + H * H));
  return t;
}

double linearize_collision(const Vec2& anchor_m, const Vec2& anchor_mp,
                           const Vec2& pos_m, const Vec2& pos_mp) {
  Vec2 d = anchor_m - anchor_mp;
  if (d.norm2() == 0.0) d = Vec2{1e-3, 0.0};
  return -d.norm2() + 2.0 * d.dot(pos_m - pos_mp);
}

DeployProblem build_deploy_problem(const WorldState& state,
                                   const SlotAction& action,
                                   const SystemParams& params) {
  DeployProblem p;
  p.M = params.M;
  p.old_pos = state.uav_pos;
  p.bs_pos = params.bs_pos;
  p.radius = params.t_max * params.v_max;
  p.d_min = params.d_min;
  p.H = params.H;
  p.W_bw = params.W_bw;
  p.area_w = params.area_w;
  p.area_h = params.area_h;
  p.t_max = params.t_max;
  // Unit rates give the compute-only part of the timing.
  LinkRates unit;
  unit.uplink.assign(params.M, std::vector<double>(params.K, 1.0));
  unit.forward.assign(params.M, 1.0);
  for (int k = 0; k < params.K; ++k) {
    const int m = action.assoc.uav_of(k);
    if (m == kIdle) continue;
    const double D = state.packet[k].size_bits;
    const TimingBreakdown t = gu_timing(action, k, D, unit, params);
    DeployLink l;
    l.m = m;
    l.k = k;
    l.w = state.queue[k] + params.V * params.w1;
    l.phi3 = t.t_s;  // bits at unit rate
    l.phi4 = t.t_f;
    l.chi3 = t.t_le + t.t_ue + t.t_r;
    l.coeff_s =
        snr_coefficient(state.fading[m][k], params.p_gu, params.sigma2_uav, params);
    l.coeff_f = snr_coefficient(state.fading[m][params.K], params.p_uav,
                                params.sigma2_bs, params);
    l.gu_pos = state.gu_pos[k];
    p.links.push_back(l);
  }
  return p;
}

namespace {

double rate_at(double coeff, const Vec2& l, const Vec2& node, double H,
               double W) {
  return rate_from_coefficient(coeff, dist2(l, node) + H * H, W);
}

}  // namespace

std::vector<double> link_times(const DeployProblem& p,
                               const std::vector<Vec2>& pos) {
  std::vector<double> out;
  for (const DeployLink& l : p.links) {
    const Vec2& x = pos[l.m];
    double t = l.chi3;
    if (l.phi3 > 0.0) t += l.phi3 / rate_at(l.coeff_s, x, l.gu_pos, p.H, p.W_bw);
    if (l.phi4 > 0.0) t += l.phi4 / rate_at(l.coeff_f, x, p.bs_pos, p.H, p.W_bw);
    out.push_back(t);
  }
  return out;
}

double deploy_objective(const DeployProblem& p, const std::vector<Vec2>& pos) {
  double f = 0.0;
  const std::vector<double> t = link_times(p, pos);
  for (std::size_t i = 0; i < p.links.size(); ++i) {
    const DeployLink& l = p.links[i];
    f += l.w * (t[i] - l.chi3);
    const double v = std::max(0.0, t[i] - p.t_max);
    f += p.penalty_weight * v * v;
  }
  return f;
}

namespace {

struct Ball {
  int m;
  Vec2 c;
  double r;
};

struct Half {
  int m, mp;
  Vec2 a;  // a.(l_m - l_mp) >= b
  double b;
};

struct Surrogate {
  const DeployProblem* p;
  std::vector<RateTangent> ts, tf;  // per link
  std::vector<Ball> balls;
  std::vector<Half> halves;

  double value(const std::vector<Vec2>& x) const {
    double f = 0.0;
    for (std::size_t i = 0; i < p->links.size(); ++i) {
      const DeployLink& l = p->links[i];
      double t = 0.0;
      if (l.phi3 > 0.0) {
        const double e = ts[i].eval(x[l.m]);
        if (e <= 0.0) return std::numeric_limits<double>::infinity();
        t += l.phi3 / e;
      }
      if (l.phi4 > 0.0) {
        const double e = tf[i].eval(x[l.m]);
        if (e <= 0.0) return std::numeric_limits<double>::infinity();
        t += l.phi4 / e;
      }
      f += l.w * t;
      const double v = std::max(0.0, t + l.chi3 - p->t_max);
      f += p->penalty_weight * v * v;
    }
    return f;
  }

  std::vector<Vec2> grad(const std::vector<Vec2>& x) const {
    std::vector<Vec2> g(x.size());
    for (std::size_t i = 0; i < p->links.size(); ++i) {
      const DeployLink& l = p->links[i];
      double t = 0.0;
      Vec2 dt;
      if (l.phi3 > 0.0) {
        const double e = ts[i].eval(x[l.m]);
        t += l.phi3 / e;
        dt += ts[i].grad(x[l.m]) * (-l.phi3 / (e * e));
      }
      if (l.phi4 > 0.0) {
        const double e = tf[i].eval(x[l.m]);
        t += l.phi4 / e;
        dt += tf[i].grad(x[l.m]) * (-l.phi4 / (e * e));
      }
      const double v = std::max(0.0, t + l.chi3 - p->t_max);
      g[l.m] += dt * (l.w + 2.0 * p->penalty_weight * v);
    }
    return g;
  }
};

Surrogate build_surrogate(const DeployProblem& p,
                          const std::vector<Vec2>& anchor) {
  Surrogate s;
  s.p = &p;
  for (const DeployLink& l : p.links) {
    const Vec2& a = anchor[l.m];
    const double gs = l.coeff_s / (dist2(a, l.gu_pos) + p.H * p.H);
    const double gf = l.coeff_f / (dist2(a, p.bs_pos) + p.H * p.H);
    s.ts.push_back(linearize_rate(a, l.gu_pos, p.W_bw * std::log2(1.0 + gs),
                                  gs, p.H, p.W_bw));
    s.tf.push_back(linearize_rate(a, p.bs_pos, p.W_bw * std::log2(1.0 + gf),
                                  gf, p.H, p.W_bw));
  }
  for (int m = 0; m < p.M; ++m) s.balls.push_back({m, p.old_pos[m], p.radius});
  for (std::size_t i = 0; i < p.links.size(); ++i) {
    const DeployLink& l = p.links[i];
    for (int which = 0; which < 2; ++which) {
      const double phi = which == 0 ? l.phi3 : l.phi4;
      const RateTangent& t = which == 0 ? s.ts[i] : s.tf[i];
      if (phi <= 0.0 || t.slope >= 0.0) continue;
      const double r2 = t.s0 + (t.r0 - p.rate_eps) / (-t.slope);
      if (r2 > 0.0) s.balls.push_back({l.m, t.node, std::sqrt(r2)});
    }
  }
  for (int m = 0; m < p.M; ++m) {
    for (int n = m + 1; n < p.M; ++n) {
      Vec2 d = anchor[m] - anchor[n];
      if (d.norm2() == 0.0) d = Vec2{1e-3, 0.0};
      s.halves.push_back({m, n, d * 2.0, p.d_min * p.d_min + d.norm2()});
    }
  }
  return s;
}

bool feasible(const Surrogate& s, const std::vector<Vec2>& x, double tol) {
  const DeployProblem& p = *s.p;
  for (const Ball& b : s.balls)
    if (dist(x[b.m], b.c) > b.r + tol) return false;
  for (const Half& h : s.halves)
    if (h.a.dot(x[h.m] - x[h.mp]) < h.b - tol * h.a.norm()) return false;
  for (const Vec2& v : x)
    if (v.x < -tol || v.y < -tol || v.x > p.area_w + tol ||
        v.y > p.area_h + tol)
      return false;
  return true;
}

// Dykstra's alternating projection onto balls, halfspaces and the area box.
bool project(const Surrogate& s, std::vector<Vec2>* x) {
  if (feasible(s, *x, 0.0)) return true;
  const DeployProblem& p = *s.p;
  const std::size_t nb = s.balls.size(), nh = s.halves.size();
  const std::size_t n = x->size();
  // Each set only moves the UAVs it constrains, so increments are kept per
  // touched coordinate.
  std::vector<Vec2> inc_ball(nb);
  std::vector<std::pair<Vec2, Vec2>> inc_half(nh);
  std::vector<Vec2> inc_box(n);
  std::vector<Vec2>& v = *x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    const std::vector<Vec2> prev = v;
    for (std::size_t i = 0; i < nb; ++i) {
      const Ball& b = s.balls[i];
      const Vec2 y = v[b.m] + inc_ball[i];
      Vec2 z = y;
      const Vec2 d = y - b.c;
      const double r = d.norm();
      if (r > b.r) z = b.c + d * (b.r / r);
      inc_ball[i] = y - z;
      v[b.m] = z;
    }
    for (std::size_t i = 0; i < nh; ++i) {
      const Half& h = s.halves[i];
      const Vec2 y1 = v[h.m] + inc_half[i].first;
      const Vec2 y2 = v[h.mp] + inc_half[i].second;
      Vec2 z1 = y1, z2 = y2;
      const double val = h.a.dot(y1 - y2);
      if (val < h.b) {
        const double step = (h.b - val) / (2.0 * h.a.norm2());
        z1 += h.a * step;
        z2 -= h.a * step;
      }
      inc_half[i] = {y1 - z1, y2 - z2};
      v[h.m] = z1;
      v[h.mp] = z2;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 y = v[j] + inc_box[j];
      const Vec2 z{std::clamp(y.x, 0.0, p.area_w), std::clamp(y.y, 0.0, p.area_h)};
      inc_box[j] = y - z;
      v[j] = z;
    }
    double ch = 0.0;
    for (std::size_t j = 0; j < n; ++j) ch = std::max(ch, dist(v[j], prev[j]));
    if (ch < 1e-8) break;
  }
  return feasible(s, *x, 1e-7);
}

}  // namespace

SubproblemResult solve_sca_subproblem(const DeployProblem& p,
                                      const std::vector<Vec2>& anchor) {
  SubproblemResult res;
  res.positions = anchor;
  const Surrogate s = build_surrogate(p, anchor);
  std::vector<Vec2> x = anchor;
  if (!project(s, &x)) {
    res.infeasible = true;
    res.surrogate = s.value(anchor);
    return res;
  }
  double f = s.value(x);
  double alpha = -1.0;
  const double c = 1e-4;
  int it = 0;
  for (; it < p.max_pgd_iters; ++it) {
    const std::vector<Vec2> g = s.grad(x);
    double gn = 0.0;
    for (const Vec2& v : g) gn += v.norm2();
    gn = std::sqrt(gn);
    if (gn == 0.0) break;
    double a = alpha < 0.0 ? 50.0 / gn : alpha * 2.0;
    bool accepted = false;
    bool tiny = false;
    std::vector<Vec2> xn;
    double fn = 0.0;
    for (int bt = 0; bt < 80; ++bt, a *= 0.5) {
      xn = x;
      for (std::size_t j = 0; j < x.size(); ++j) xn[j] -= g[j] * a;
      if (!project(s, &xn)) continue;
      double dd = 0.0, gd = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const Vec2 d = xn[j] - x[j];
        dd = std::max(dd, d.norm());
        gd += g[j].dot(d);
      }
      if (dd < p.step_tol) {
        tiny = true;
        break;
      }
      fn = s.value(xn);
      if (fn <= f + c * gd) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    alpha = a;
    double step = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      step = std::max(step, dist(xn[j], x[j]));
    x = xn;
    f = fn;
    if (tiny || step < p.step_tol) break;
  }
  res.positions = x;
  res.surrogate = f;
  res.pgd_iterations = it;
  return res;
}

bool project_positions(const DeployProblem& p, std::vector<Vec2>* x) {
  DeployProblem bare = p;
  bare.links.clear();
  const Surrogate s = build_surrogate(bare, bare.old_pos);
  return project(s, x);
}

DeploySolution solve_deployment(const DeployProblem& p,
                                const std::vector<Vec2>& init) {
  DeploySolution sol;
  std::vector<Vec2> anchor = init;
  double f_anchor = deploy_objective(p, anchor);
  sol.objective_trace.push_back(f_anchor);
  for (int it = 0; it < p.sca_iters; ++it) {
    sol.sca_iterations = it + 1;
    const SubproblemResult sub = solve_sca_subproblem(p, anchor);
    if (sub.infeasible) {
      sol.infeasible = true;
      break;
    }
    const Surrogate s = build_surrogate(p, anchor);
    const bool anchor_ok = feasible(s, anchor, 1e-7);
    if (anchor_ok && sub.surrogate > s.value(anchor)) break;
    const double f_new = deploy_objective(p, sub.positions);
    if (anchor_ok &&
        f_new > f_anchor + 1e-9 * std::max(1.0, std::abs(f_anchor)))
      throw std::logic_error("solve_deployment: SCA step increased objective");
    const double rel =
        (f_anchor - f_new) / std::max(std::abs(f_anchor), 1e-12);
    anchor = sub.positions;
    f_anchor = f_new;
    sol.objective_trace.push_back(f_new);
    sol.surrogate = sub.surrogate;
    if (anchor_ok && rel < p.sca_tol) {
      sol.converged = true;
      break;
    }
  }
  sol.positions = anchor;
  sol.objective = f_anchor;
  const std::vector<double> t = link_times(p, anchor);
  for (std::size_t i = 0; i < p.links.size(); ++i)
    if (t[i] > p.t_max * (1.0 + 1e-9)) sol.budget_violations.push_back(p.links[i].k);
  return sol;
}

}  // namespace saoi
