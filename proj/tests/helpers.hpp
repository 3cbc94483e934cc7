#ifndef SAOI_TEST_HELPERS_HPP_
#define SAOI_TEST_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "saoi/types.hpp"

namespace testing {

inline bool rel_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

inline double uni(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Random in-area state with fresh packets on every GU.
inline saoi::WorldState random_state(const saoi::SystemParams& p,
                                     std::mt19937_64& g, double D_lo = 1e6,
                                     double D_hi = 1e7) {
  saoi::WorldState s;
  s.slot = 10;
  for (int m = 0; m < p.M; ++m)
    s.uav_pos.push_back({uni(g, 0, p.area_w), uni(g, 0, p.area_h)});
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  for (int k = 0; k < p.K; ++k) {
    s.gu_pos.push_back({uni(g, 0, p.area_w), uni(g, 0, p.area_h)});
    s.aoi.push_back(uni(g, 0.1, 12.0));
    s.queue.push_back(uni(g, 0.0, 20.0));
    saoi::DataPacket pk;
    pk.size_bits = uni(g, D_lo, D_hi);
    pk.gen_slot = s.slot - static_cast<int>(uni(g, 0, 3));
    pk.delivered = false;
    s.packet.push_back(pk);
  }
  s.fading.assign(p.M, std::vector<saoi::Complex>(p.K + 1));
  for (auto& row : s.fading)
    for (auto& f : row) f = {nd(g), nd(g)};
  return s;
}

}  // namespace testing

#endif  // SAOI_TEST_HELPERS_HPP_
