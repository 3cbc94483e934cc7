#include "saoi/depth_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saoi/model.hpp"

namespace saoi {

DepthProblem build_depth_problem(const WorldState& state,
                                 const Association& assoc,
                                 const LinkRates& rates,
                                 const SystemParams& params) {
  DepthProblem prob;
  prob.K = params.K;
  prob.M = params.M;
  for (int k = 0; k < params.K; ++k) {
    const int m = assoc.uav_of(k);
    if (m == kIdle) continue;
    const double D = state.packet[k].size_bits;
    DepthCoeffs c;
    c.k = k;
    c.m = m;
    c.w = state.queue[k] + params.V * params.w1;
    c.vw2 = params.V * params.w2;
    c.psi1 = params.B1[k] / params.f_l[k];
    c.B2 = params.B2[k];
    c.psi2s = D / rates.uplink[m][k];
    c.psi2f = D / rates.forward[m];
    c.psi3 = params.C1[m] / params.f_u[m][k];
    c.C2 = params.C2[m];
    c.psi4 = params.B3[k] / params.g_bs[k];
    c.B4 = params.B4[k];
    c.chi_l = params.B0[k] * D / params.f_l[k];
    c.chi_u = params.C0[m] * D / params.f_u[m][k];
    c.phi1 = params.B5[k] * D;
    c.t_max = params.t_max;
    c.rho_min = params.rho_min;
    c.relay_ok = D <= params.relay_size_bits;
    c.physical_upload = params.physical_upload;
    prob.links.push_back(c);
  }
  return prob;
}

namespace {

double recovery_term(double s, const DepthCoeffs& c) {
  return c.psi4 * std::pow(std::max(s, c.rho_min), -c.B4);
}

double recovery_slope(double s, const DepthCoeffs& c) {
  if (s <= c.rho_min) return 0.0;
  return -c.psi4 * c.B4 * std::pow(s, -c.B4 - 1.0);
}

}  // namespace

double gamma1(double rl, double ru, const DepthCoeffs& c) {
  const double t = c.psi1 * std::pow(1.0 - rl, c.B2) +
                   (c.psi2s + c.psi2f) * rl + c.psi2f * ru +
                   c.psi3 * std::pow(1.0 - ru, c.C2) + recovery_term(rl + ru, c);
  return c.beta * t;
}

double gamma2(double rl, double ru, const DepthCoeffs& c) {
  return c.beta * (1.0 - std::exp(-c.phi1 * (rl + ru)));
}

double phi_taylor(double rl, double ru, double anchor_l, double anchor_u) {
  const double d = anchor_l - anchor_u;
  const double s = rl + ru;
  return 0.25 * (s * s - d * d - 2.0 * d * (rl - ru - d));
}

double lagrangian(const DualPoint& x, const DepthCoeffs& c) {
  const double g1 = gamma1(x.rl, x.ru, c);
  const double g2 = gamma2(x.rl, x.ru, c);
  const double phi = phi_taylor(x.rl, x.ru, x.anchor_l, x.anchor_u);
  return c.w * g1 - c.vw2 * g2 + x.omega0 * x.varrho +
         x.lambda1 * (g1 + c.chi1() - c.t_max) +
         x.omega0 * x.lambda2 * (phi - x.varrho);
}

double grad_rho_l(const DualPoint& x, const DepthCoeffs& c) {
  const double s = x.rl + x.ru;
  const double dg1 = -c.psi1 * c.B2 * std::pow(1.0 - x.rl, c.B2 - 1.0) +
                     c.psi2s + c.psi2f + recovery_slope(s, c);
  const double dg2 = c.phi1 * std::exp(-c.phi1 * s);
  const double dphi = 0.5 * (s - (x.anchor_l - x.anchor_u));
  return c.beta * ((c.w + x.lambda1) * dg1 - c.vw2 * dg2) +
         x.omega0 * x.lambda2 * dphi;
}

double grad_rho_u(const DualPoint& x, const DepthCoeffs& c) {
  const double s = x.rl + x.ru;
  const double dg1 = -c.psi3 * c.C2 * std::pow(1.0 - x.ru, c.C2 - 1.0) +
                     c.psi2f + recovery_slope(s, c);
  const double dg2 = c.phi1 * std::exp(-c.phi1 * s);
  const double dphi = 0.5 * (s + (x.anchor_l - x.anchor_u));
  return c.beta * ((c.w + x.lambda1) * dg1 - c.vw2 * dg2) +
         x.omega0 * x.lambda2 * dphi;
}

double grad_varrho(const DualPoint& x) {
  return x.omega0 * (1.0 - x.lambda2);
}

double grad_lambda1(const DualPoint& x, const DepthCoeffs& c) {
  return gamma1(x.rl, x.ru, c) + c.chi1() - c.t_max;
}

double grad_lambda2(const DualPoint& x) {
  return phi_taylor(x.rl, x.ru, x.anchor_l, x.anchor_u) - x.varrho;
}

BisectResult bisect_stationary(const std::function<double(double)>& grad,
                               double lo, double hi, double tol) {
  BisectResult r;
  if (hi <= lo) {
    r.rho = lo;
    return r;
  }
  const double glo = grad(lo);
  const double ghi = grad(hi);
  if (glo > 0.0 && ghi < 0.0) {
    // Integrate the gradient on a grid and take the smallest primitive.
    r.flagged = true;
    const int n = 1000;
    const double h = (hi - lo) / n;
    double f = 0.0, best = 0.0, best_x = lo, gprev = glo;
    for (int i = 1; i <= n; ++i) {
      const double xi = lo + h * i;
      const double g = grad(xi);
      f += 0.5 * h * (g + gprev);
      gprev = g;
      if (f < best) {
        best = f;
        best_x = xi;
      }
    }
    r.rho = best_x;
    return r;
  }
  if (glo >= 0.0) {
    r.rho = lo;
    return r;
  }
  if (ghi <= 0.0) {
    r.rho = hi;
    return r;
  }
  double a = lo, b = hi;
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    if (grad(mid) < 0.0)
      a = mid;
    else
      b = mid;
  }
  r.rho = 0.5 * (a + b);
  return r;
}

double link_time(double rl, double ru, const DepthCoeffs& c) {
  if (c.relay_ok && rl == 1.0 && ru == 0.0) return c.psi2s + c.psi2f;
  double t = 0.0;
  if (rl > 0.0) t += c.chi_l + c.psi1 * std::pow(1.0 - rl, c.B2);
  t += c.psi2s * ((c.physical_upload && ru > 0.0) ? 1.0 : rl);
  if (ru > 0.0) t += c.chi_u + c.psi3 * std::pow(1.0 - ru, c.C2);
  t += c.psi2f * (rl + ru);
  t += recovery_term(rl + ru, c);
  return t;
}

double link_cost(double rl, double ru, const DepthCoeffs& c) {
  return c.w * link_time(rl, ru, c) -
         c.vw2 * (1.0 - std::exp(-c.phi1 * (rl + ru)));
}

namespace {

struct Candidate {
  double rl = 0.0;
  double ru = 0.0;
  bool relay = false;
  double cost = std::numeric_limits<double>::infinity();
};

// One exact branch: depth r on [rho_min, 1] with time t(r) convex.
// Returns false when no depth meets the budget.
bool solve_branch(const std::function<double(double)>& t,
                  const std::function<double(double)>& dt,
                  const std::function<double(double)>& df, double rho_min,
                  double t_max, double* out) {
  const double r_t = bisect_stationary(dt, rho_min, 1.0, 1e-13).rho;
  if (t(r_t) > t_max) return false;
  double a = rho_min, b = 1.0;
  if (t(a) > t_max) {
    double lo = rho_min, hi = r_t;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (t(mid) > t_max ? lo : hi) = mid;
    }
    a = hi;
  }
  if (t(b) > t_max) {
    double lo = r_t, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (t(mid) > t_max ? hi : lo) = mid;
    }
    b = lo;
  }
  double r = bisect_stationary(df, a, b, 1e-13).rho;
  r = std::clamp(r, a, b);
  if (t(r) > t_max) r = t(a) <= t(b) ? a : b;
  *out = r;
  return true;
}

Candidate local_branch(const DepthCoeffs& c) {
  Candidate cand;
  auto t = [&](double r) {
    return c.chi_l + c.psi1 * std::pow(1.0 - r, c.B2) +
           (c.psi2s + c.psi2f) * r + c.psi4 * std::pow(r, -c.B4);
  };
  auto dt = [&](double r) {
    return -c.psi1 * c.B2 * std::pow(1.0 - r, c.B2 - 1.0) + c.psi2s + c.psi2f -
           c.psi4 * c.B4 * std::pow(r, -c.B4 - 1.0);
  };
  auto df = [&](double r) {
    return c.w * dt(r) - c.vw2 * c.phi1 * std::exp(-c.phi1 * r);
  };
  double r;
  if (!solve_branch(t, dt, df, c.rho_min, c.t_max, &r)) return cand;
  cand.rl = r;
  cand.cost = link_cost(r, 0.0, c);
  if (link_time(r, 0.0, c) > c.t_max) cand.cost = std::numeric_limits<double>::infinity();
  return cand;
}

Candidate edge_branch(const DepthCoeffs& c) {
  Candidate cand;
  const double up = c.physical_upload ? c.psi2s : 0.0;
  auto t = [&](double r) {
    return up + c.chi_u + c.psi3 * std::pow(1.0 - r, c.C2) + c.psi2f * r +
           c.psi4 * std::pow(r, -c.B4);
  };
  auto dt = [&](double r) {
    return -c.psi3 * c.C2 * std::pow(1.0 - r, c.C2 - 1.0) + c.psi2f -
           c.psi4 * c.B4 * std::pow(r, -c.B4 - 1.0);
  };
  auto df = [&](double r) {
    return c.w * dt(r) - c.vw2 * c.phi1 * std::exp(-c.phi1 * r);
  };
  double r;
  if (!solve_branch(t, dt, df, c.rho_min, c.t_max, &r)) return cand;
  cand.ru = r;
  cand.cost = link_cost(0.0, r, c);
  if (link_time(0.0, r, c) > c.t_max) cand.cost = std::numeric_limits<double>::infinity();
  return cand;
}

void consider(Candidate* best, const Candidate& c) {
  if (c.cost < best->cost) *best = c;
}

}  // namespace

DepthSolution solve_depths(const DepthProblem& problem) {
  DepthSolution sol;
  const int K = problem.K, M = problem.M;
  sol.rho_l.assign(K, 0.0);
  sol.rho_u.assign(M, std::vector<double>(K, 0.0));
  sol.varrho.assign(M, std::vector<double>(K, 0.0));
  sol.lambda1.assign(K, 0.0);
  sol.lambda2.assign(M, std::vector<double>(K, 0.0));
  sol.relay.assign(K, false);
  sol.infeasible.assign(K, false);
  sol.converged = true;

  for (const DepthCoeffs& c : problem.links) {
    DualPoint x;
    x.rl = x.ru = 0.5;
    x.anchor_l = x.anchor_u = 0.5;
    x.omega0 = problem.omega0;
    bool conv = false;
    int it = 0;
    for (; it < problem.tau_max; ++it) {
      const double old_l = x.rl, old_u = x.ru;
      x.anchor_l = x.rl;
      x.anchor_u = x.ru;
      BisectResult bl = bisect_stationary(
          [&](double r) {
            DualPoint y = x;
            y.rl = r;
            return grad_rho_l(y, c);
          },
          std::max(0.0, c.rho_min - x.ru), 1.0);
      x.rl = bl.rho;
      BisectResult bu = bisect_stationary(
          [&](double r) {
            DualPoint y = x;
            y.ru = r;
            return grad_rho_u(y, c);
          },
          std::max(0.0, c.rho_min - x.rl), 1.0);
      x.ru = bu.rho;
      sol.bisection_flag = sol.bisection_flag || bl.flagged || bu.flagged;

      x.varrho = std::max(0.0, x.varrho - problem.step2 * grad_varrho(x));
      x.lambda1 = std::clamp(x.lambda1 + problem.step1 * grad_lambda1(x, c),
                             0.0, 1.0);
      x.lambda2 =
          std::clamp(x.lambda2 + problem.step2 * grad_lambda2(x), 0.0, 1.0);
      if (static_cast<int>(sol.omega0_trace.size()) < problem.tau_max)
        sol.omega0_trace.push_back(x.omega0);
      x.omega0 = std::min(problem.c * x.omega0, problem.omega0_cap);

      const double change =
          std::max(std::abs(x.rl - old_l), std::abs(x.ru - old_u));
      if (change < problem.tol && x.rl * x.ru <= problem.tol_comp) {
        conv = true;
        ++it;
        break;
      }
    }
    sol.iterations = std::max(sol.iterations, it);
    sol.converged = sol.converged && conv;

    Candidate best;
    if (x.rl * x.ru <= problem.tol_comp &&
        link_time(x.rl, x.ru, c) <= c.t_max) {
      best.rl = x.rl;
      best.ru = x.ru;
      best.cost = link_cost(x.rl, x.ru, c);
    }
    if (problem.polish) {
      consider(&best, local_branch(c));
      consider(&best, edge_branch(c));
      if (c.relay_ok && c.psi2s + c.psi2f <= c.t_max) {
        Candidate r;
        r.rl = 1.0;
        r.relay = true;
        r.cost = link_cost(1.0, 0.0, c);
        consider(&best, r);
      }
    }

    sol.lambda1[c.k] = x.lambda1;
    sol.lambda2[c.m][c.k] = x.lambda2;
    sol.varrho[c.m][c.k] = x.varrho;
    if (!std::isfinite(best.cost)) {
      sol.infeasible[c.k] = true;
      continue;
    }
    sol.rho_l[c.k] = best.rl;
    sol.rho_u[c.m][c.k] = best.ru;
    sol.relay[c.k] = best.relay;
  }
  return sol;
}

}  // namespace saoi
