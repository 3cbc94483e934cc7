#ifndef SAOI_TYPES_HPP_
#define SAOI_TYPES_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace saoi {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};

inline double dist2(const Vec2& a, const Vec2& b) { return (a - b).norm2(); }
inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

using Complex = std::complex<double>;

// Physical and algorithmic constants. Per-GU vectors have size K, per-UAV
// vectors size M, and f_u is indexed [m][k]. All quantities are SI.
struct SystemParams {
  int K = 5;
  int M = 3;
  double t_max = 2.0;          // s
  double v_max = 30.0;         // m/s
  double d_min = 30.0;         // m
  double H = 100.0;            // m
  double area_w = 1000.0;      // m
  double area_h = 1000.0;      // m
  double xi = 1e-3;            // linear gain at 1 m
  double g0 = 10.0;            // Rician factor, linear
  double sigma2_uav = 1e-12;   // W (-90 dBm)
  double sigma2_bs = 1e-12;    // W (-90 dBm)
  double p_gu = 3.1622776601683795;   // W (35 dBm)
  double p_uav = 3.1622776601683795;  // W (35 dBm)
  double W_bw = 1e6;           // Hz
  double a_max = 5.0;          // s
  double V = 100.0;
  double w1 = 1.0;
  double w2 = 10.0;
  double gamma_disc = 0.95;
  double rho_min = 1e-3;
  double relay_size_bits = 0.0;
  bool physical_upload = false;

  std::vector<double> B0, B1, B2, B3, B4, B5;  // per GU
  std::vector<double> C0, C1, C2;              // per UAV
  std::vector<double> f_l;                     // per GU, cycles/s
  std::vector<std::vector<double>> f_u;        // [m][k], cycles/s
  std::vector<double> g_bs;                    // per GU, cycles/s
  Vec2 bs_pos{900.0, 500.0};

  // Fills every per-node vector with the scalar defaults for the current K/M.
  void resize_with(double b0, double b1, double b2, double b3, double b4,
                   double b5, double c0, double c1, double c2, double fl,
                   double fu, double gbs);

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool inside_area(const Vec2& p, double tol = 1e-9) const {
    return p.x >= -tol && p.y >= -tol && p.x <= area_w + tol &&
           p.y <= area_h + tol;
  }
};

SystemParams default_params();

struct DataPacket {
  double size_bits = 0.0;
  std::int64_t gen_slot = 0;
  bool delivered = false;
};

struct WorldState {
  std::int64_t slot = 0;
  std::vector<Vec2> uav_pos;               // M, positions of slot i-1
  std::vector<Vec2> gu_pos;                // K, static
  std::vector<double> aoi;                 // K
  std::vector<double> queue;               // K
  std::vector<DataPacket> packet;          // K
  std::vector<std::vector<Complex>> fading;  // [m][k], column K is the BS link
};

inline constexpr int kIdle = -1;

// UAV-GU matching. Stored as a pair of inverse maps so that every value of
// this type satisfies the one-to-one constraint.
class Association {
 public:
  Association() = default;
  Association(int num_uavs, int num_gus)
      : gu_of_uav_(num_uavs, kIdle), uav_of_gu_(num_gus, kIdle) {}

  // Throws std::invalid_argument when a row or column sum exceeds one.
  static Association from_matrix(const std::vector<std::vector<int>>& beta);
  // choice[m] is a GU index or kIdle.
  static Association from_choices(const std::vector<int>& choice, int num_gus);

  void assign(int m, int k);
  void unassign_gu(int k);

  int num_uavs() const { return static_cast<int>(gu_of_uav_.size()); }
  int num_gus() const { return static_cast<int>(uav_of_gu_.size()); }
  int gu_of(int m) const { return gu_of_uav_.at(m); }
  int uav_of(int k) const { return uav_of_gu_.at(k); }
  bool scheduled(int k) const { return uav_of_gu_.at(k) != kIdle; }
  int beta(int m, int k) const { return gu_of_uav_.at(m) == k ? 1 : 0; }
  int num_scheduled() const;
  std::vector<std::vector<int>> matrix() const;

  bool operator==(const Association&) const = default;

 private:
  std::vector<int> gu_of_uav_;
  std::vector<int> uav_of_gu_;
};

struct SlotAction {
  Association assoc;
  std::vector<double> rho_l;               // K
  std::vector<std::vector<double>> rho_u;  // [m][k]
  std::vector<bool> relay;                 // K, pure-relay request
  std::vector<Vec2> uav_pos_next;          // M

  static SlotAction idle(int M, int K, const std::vector<Vec2>& hold);

  // Effective depth rho_l + rho_u of the scheduled pair, 0 when unscheduled.
  double rho_eff(int k) const;
  double rho_u_of(int k) const;
};

struct TimingBreakdown {
  double t_le = 0.0;
  double t_s = 0.0;
  double t_ue = 0.0;
  double t_f = 0.0;
  double t_r = 0.0;
  double total() const { return t_le + t_s + t_ue + t_f + t_r; }
};

struct FeasibilityFlags {
  bool budget = true;
  bool collision = true;
  bool speed = true;
  bool area = true;
  bool complementarity = true;
  bool depth_range = true;
  std::vector<int> budget_violations;            // GU indices
  std::vector<std::pair<int, int>> collisions;   // UAV pairs
  std::vector<int> speed_violations;             // UAV indices

  bool ok() const {
    return budget && collision && speed && area && complementarity &&
           depth_range;
  }
};

// Achievable link rates at the action's positions.
struct LinkRates {
  std::vector<std::vector<double>> uplink;  // [m][k], GU -> UAV
  std::vector<double> forward;              // [m], UAV -> BS
};

struct SlotOutcome {
  std::vector<TimingBreakdown> timing;
  std::vector<double> aoi_next;
  std::vector<double> value;
  double objective_u = 0.0;
  double b_const = 0.0;
  FeasibilityFlags feasible;
};

}  // namespace saoi

#endif  // SAOI_TYPES_HPP_
