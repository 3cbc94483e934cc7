#ifndef SAOI_LYAPUNOV_HPP_
#define SAOI_LYAPUNOV_HPP_

#include <cstddef>
#include <vector>

#include "saoi/types.hpp"

namespace saoi {

// q' = max(q - a_max, 0) + a'
double queue_step(double q, double aoi_next, double a_max);
std::vector<double> queue_step(const std::vector<double>& q,
                               const std::vector<double>& aoi_next,
                               double a_max);

double lyapunov_value(const std::vector<double>& q);

struct PerSlotObjective {
  double u_value = 0.0;
  double b_const = 0.0;
  std::vector<double> per_gu_terms;
};

// Drift-plus-penalty upper bound terms for an action whose timing and value
// were already evaluated.
PerSlotObjective per_slot_objective(const WorldState& state,
                                    const SlotAction& action,
                                    const std::vector<TimingBreakdown>& timing,
                                    const std::vector<double>& value,
                                    const SystemParams& params);

// Realized L(q') - L(q) + V*sum(w1 a' - w2 v) against B + U.
double realized_drift_plus_penalty(const std::vector<double>& q,
                                   const std::vector<double>& q_next,
                                   const std::vector<double>& aoi_next,
                                   const std::vector<double>& value,
                                   const SystemParams& params);

bool drift_plus_penalty_check(const std::vector<double>& q,
                              const std::vector<double>& q_next, double u,
                              double b, const std::vector<double>& aoi_next,
                              const std::vector<double>& value,
                              const SystemParams& params, double tol = 1e-9);

// Running mean of w1*a' - w2*v over slots and GUs.
class SaoiAverage {
 public:
  SaoiAverage(double w1, double w2) : w1_(w1), w2_(w2) {}

  void add(const std::vector<double>& aoi_next,
           const std::vector<double>& value);
  std::size_t count() const { return n_; }
  // Throws std::logic_error when nothing was added.
  double mean() const;

 private:
  double w1_;
  double w2_;
  double sum_ = 0.0;
  std::size_t n_ = 0;
};

}  // namespace saoi

#endif  // SAOI_LYAPUNOV_HPP_
