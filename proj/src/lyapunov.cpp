#include "saoi/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace saoi {

double queue_step(double q, double aoi_next, double a_max) {
  return std::max(q - a_max, 0.0) + aoi_next;
}

std::vector<double> queue_step(const std::vector<double>& q,
                               const std::vector<double>& aoi_next,
                               double a_max) {
  if (q.size() != aoi_next.size())
    throw std::invalid_argument("queue_step: size mismatch");
  std::vector<double> out(q.size());
  for (std::size_t k = 0; k < q.size(); ++k)
    out[k] = queue_step(q[k], aoi_next[k], a_max);
  return out;
}

double lyapunov_value(const std::vector<double>& q) {
  double s = 0.0;
  for (double x : q) s += x * x;
  return 0.5 * s;
}

PerSlotObjective per_slot_objective(const WorldState& state,
                                    const SlotAction& action,
                                    const std::vector<TimingBreakdown>& timing,
                                    const std::vector<double>& value,
                                    const SystemParams& params) {
  PerSlotObjective out;
  out.per_gu_terms.assign(params.K, 0.0);
  for (int k = 0; k < params.K; ++k) {
    const double Q = state.queue[k];
    const double a = state.aoi[k];
    double age;
    if (action.assoc.scheduled(k)) {
      age = static_cast<double>(state.slot - state.packet[k].gen_slot) *
                params.t_max +
            timing[k].total();
    } else {
      age = a + params.t_max;
    }
    const double term =
        (Q + params.V * params.w1) * age - params.V * params.w2 * value[k];
    out.per_gu_terms[k] = term;
    out.u_value += term;
    const double grown = a + params.t_max;
    out.b_const += 0.5 * (params.a_max * params.a_max + grown * grown) -
                   Q * params.a_max;
  }
  return out;
}

double realized_drift_plus_penalty(const std::vector<double>& q,
                                   const std::vector<double>& q_next,
                                   const std::vector<double>& aoi_next,
                                   const std::vector<double>& value,
                                   const SystemParams& params) {
  double pen = 0.0;
  for (std::size_t k = 0; k < aoi_next.size(); ++k)
    pen += params.w1 * aoi_next[k] - params.w2 * value[k];
  return lyapunov_value(q_next) - lyapunov_value(q) + params.V * pen;
}

bool drift_plus_penalty_check(const std::vector<double>& q,
                              const std::vector<double>& q_next, double u,
                              double b, const std::vector<double>& aoi_next,
                              const std::vector<double>& value,
                              const SystemParams& params, double tol) {
  const double lhs =
      realized_drift_plus_penalty(q, q_next, aoi_next, value, params);
  const double rhs = b + u;
  return lhs <= rhs + tol * std::max(1.0, std::abs(rhs));
}

void SaoiAverage::add(const std::vector<double>& aoi_next,
                      const std::vector<double>& value) {
  for (std::size_t k = 0; k < aoi_next.size(); ++k) {
    sum_ += w1_ * aoi_next[k] - w2_ * value[k];
    ++n_;
  }
}

double SaoiAverage::mean() const {
  if (n_ == 0) throw std::logic_error("SaoiAverage: empty log");
  return sum_ / static_cast<double>(n_);
}

}  // namespace saoi
