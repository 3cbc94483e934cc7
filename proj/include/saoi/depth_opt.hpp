#ifndef SAOI_DEPTH_OPT_HPP_
#define SAOI_DEPTH_OPT_HPP_

#include <functional>
#include <vector>

#include "saoi/types.hpp"

namespace saoi {

// Coefficients of one scheduled (UAV m, GU k) pair. Times in seconds.
struct DepthCoeffs {
  int k = 0;
  int m = 0;
  double beta = 1.0;
  double w = 0.0;      // Q_k + V*w1
  double vw2 = 0.0;    // V*w2
  double psi1 = 0.0;   // B1/f_l
  double B2 = 2.0;
  double psi2s = 0.0;  // D/r_s
  double psi2f = 0.0;  // D/r_f
  double psi3 = 0.0;   // C1/f_u
  double C2 = 2.0;
  double psi4 = 0.0;   // B3/g_bs
  double B4 = 1.0;
  double chi_l = 0.0;  // B0*D/f_l
  double chi_u = 0.0;  // C0*D/f_u
  double phi1 = 0.0;   // B5*D
  double t_max = 1.0;
  double rho_min = 1e-3;
  bool relay_ok = false;
  bool physical_upload = false;

  double chi1() const { return beta * (chi_l + chi_u); }
};

struct DepthProblem {
  std::vector<DepthCoeffs> links;
  int K = 0;
  int M = 0;
  double omega0 = 1.0;
  double c = 2.0;
  double omega0_cap = 1e8;
  double step1 = 0.1;
  double step2 = 0.1;
  int tau_max = 200;
  double tol = 1e-6;
  double tol_comp = 1e-4;
  bool polish = true;
};

struct DepthSolution {
  std::vector<double> rho_l;                 // K
  std::vector<std::vector<double>> rho_u;    // [m][k]
  std::vector<std::vector<double>> varrho;   // [m][k]
  std::vector<double> lambda1;               // K
  std::vector<std::vector<double>> lambda2;  // [m][k]
  std::vector<bool> relay;                   // K
  std::vector<bool> infeasible;              // K, no depth meets the budget
  std::vector<double> omega0_trace;          // per dual iteration
  int iterations = 0;
  bool converged = false;
  bool bisection_flag = false;
};

// Builds the per-pair coefficients from link rates at the given positions.
DepthProblem build_depth_problem(const WorldState& state,
                                 const Association& assoc,
                                 const LinkRates& rates,
                                 const SystemParams& params);

double gamma1(double rl, double ru, const DepthCoeffs& c);
double gamma2(double rl, double ru, const DepthCoeffs& c);
double phi_taylor(double rl, double ru, double anchor_l, double anchor_u);

struct DualPoint {
  double rl = 0.0;
  double ru = 0.0;
  double varrho = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double anchor_l = 0.0;
  double anchor_u = 0.0;
  double omega0 = 1.0;
};

double lagrangian(const DualPoint& x, const DepthCoeffs& c);
double grad_rho_l(const DualPoint& x, const DepthCoeffs& c);
double grad_rho_u(const DualPoint& x, const DepthCoeffs& c);
double grad_varrho(const DualPoint& x);
double grad_lambda1(const DualPoint& x, const DepthCoeffs& c);
double grad_lambda2(const DualPoint& x);

struct BisectResult {
  double rho = 0.0;
  bool flagged = false;  // gradient not monotone on [lo, hi]
};

BisectResult bisect_stationary(const std::function<double(double)>& grad,
                               double lo, double hi, double tol = 1e-8);

// Exact slot time and weighted cost of one pair at the given depths.
double link_time(double rl, double ru, const DepthCoeffs& c);
double link_cost(double rl, double ru, const DepthCoeffs& c);

DepthSolution solve_depths(const DepthProblem& problem);

}  // namespace saoi

#endif  // SAOI_DEPTH_OPT_HPP_
