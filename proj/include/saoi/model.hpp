#ifndef SAOI_MODEL_HPP_
#define SAOI_MODEL_HPP_

#include <vector>

#include "saoi/types.hpp"

namespace saoi {

// Distance between a UAV at altitude H and a ground node.
double air_ground_distance(const Vec2& uav_pos, const Vec2& node_pos, double H);

// Rician channel coefficient with unit-modulus, zero-phase LoS component.
// Throws std::domain_error on zero distance.
Complex channel_gain(const Vec2& uav_pos, const Vec2& node_pos,
                     const Complex& fading, const SystemParams& params);

double snr(const Complex& h, double p_tx, double sigma2);

// W_bw * log2(1 + p|h|^2 / sigma2), bits/s.
double link_rate(const Complex& h, double p_tx, double sigma2, double W_bw);

// Received SNR as a function of squared 3-D distance for a fixed fading draw:
// snr = coeff / d^2. Used wherever a rate must be re-evaluated as a UAV moves.
double snr_coefficient(const Complex& fading, double p_tx, double sigma2,
                       const SystemParams& params);

inline double rate_from_coefficient(double coeff, double d2, double W_bw) {
  return W_bw * std::log2(1.0 + coeff / d2);
}

double extract_cycles_local(double D, double rho, double B0, double B1,
                            double B2);
double extract_cycles_edge(double D, double rho, double C0, double C1,
                           double C2);

// B3 * rho_eff^-B4. Throws std::domain_error when rho_eff <= 0.
double recovery_cycles(double rho_eff, double B3, double B4);

LinkRates compute_rates(const WorldState& state,
                        const std::vector<Vec2>& uav_pos,
                        const SystemParams& params);

// True when the GU's pair runs in pure-relay mode (no extraction, no recovery).
bool relay_mode(const SlotAction& action, int k, double D,
                const SystemParams& params);

TimingBreakdown gu_timing(const SlotAction& action, int k, double D,
                          const LinkRates& rates, const SystemParams& params);

std::vector<TimingBreakdown> timing_breakdown(const WorldState& state,
                                              const SlotAction& action,
                                              const LinkRates& rates,
                                              const SystemParams& params);

std::vector<double> information_value(const WorldState& state,
                                      const SlotAction& action,
                                      const SystemParams& params);

std::vector<double> aoi_step(const WorldState& state, const SlotAction& action,
                             const std::vector<TimingBreakdown>& timing,
                             const SystemParams& params);

// Speed and collision diagnostics between consecutive position sets.
FeasibilityFlags check_trajectory(const std::vector<Vec2>& prev,
                                  const std::vector<Vec2>& next,
                                  const SystemParams& params,
                                  double tol = 1e-6);

// Depth range, complementarity, area, trajectory and slot-budget checks.
FeasibilityFlags check_action(const WorldState& state, const SlotAction& action,
                              const std::vector<TimingBreakdown>& timing,
                              const SystemParams& params,
                              double comp_tol = 1e-4);

}  // namespace saoi

#endif  // SAOI_MODEL_HPP_
