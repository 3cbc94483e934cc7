#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "saoi/deploy_opt.hpp"
#include "saoi/model.hpp"

using namespace saoi;
using testing::uni;

namespace {

constexpr double kCoeff = 1e8;  // snr * d^2

double exact_rate(const Vec2& l, const Vec2& node, double H, double W) {
  return W * std::log2(1.0 + kCoeff / (dist2(l, node) + H * H));
}

RateTangent tangent_at(const Vec2& a, const Vec2& node, double H, double W) {
  const double snr = kCoeff / (dist2(a, node) + H * H);
  return linearize_rate(a, node, W * std::log2(1.0 + snr), snr, H, W);
}

// M = 1, K = 1 toy: GU at (0,0), BS at (100,0).
DeployProblem toy(const Vec2& start, double radius) {
  DeployProblem p;
  p.M = 1;
  p.old_pos = {start};
  p.bs_pos = {100, 0};
  p.radius = radius;
  p.d_min = 30;
  p.H = 100;
  p.W_bw = 1e6;
  p.area_w = p.area_h = 1000;
  p.t_max = 2.0;
  DeployLink l;
  l.w = 1.0;
  l.phi3 = 4e6;
  l.phi4 = 4e6;
  l.chi3 = 0.1;
  l.coeff_s = l.coeff_f = kCoeff;
  l.gu_pos = {0, 0};
  p.links = {l};
  return p;
}

}  // namespace

TEST_SUITE("deploy_opt") {

TEST_CASE("rate tangent is exact at the anchor and a lower bound elsewhere") {
  std::mt19937_64 g(1);
  const double H = 100, W = 1e6;
  for (int i = 0; i < 200; ++i) {
    const Vec2 node{uni(g, 0, 1000), uni(g, 0, 1000)};
    const Vec2 a{uni(g, 0, 1000), uni(g, 0, 1000)};
    const RateTangent t = tangent_at(a, node, H, W);
    CHECK(testing::rel_close(t.eval(a), exact_rate(a, node, H, W), 1e-12));
    const Vec2 x{uni(g, 0, 1000), uni(g, 0, 1000)};
    CHECK(t.eval(x) <= exact_rate(x, node, H, W) * (1 + 1e-12));
    CHECK(t.slope < 0.0);
    // Moving away from the node strictly lowers the bound.
    const Vec2 dir = a - node;
    if (dir.norm() > 1.0) CHECK(t.eval(a + dir * 0.1) < t.eval(a));
  }
}

TEST_CASE("rate tangent slope matches a finite difference in squared distance") {
  const Vec2 node{0, 0};
  const double H = 100, W = 1e6;
  const Vec2 a{300, 0};
  const RateTangent t = tangent_at(a, node, H, W);
  const double h = 1e-3;
  const double fd = (exact_rate(Vec2{std::sqrt(9e4 + h), 0}, node, H, W) -
                     exact_rate(Vec2{std::sqrt(9e4 - h), 0}, node, H, W)) /
                    (2 * h);
  CHECK(t.slope == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("collision linearization") {
  const Vec2 am{30, 0}, an{0, 0};
  CHECK(linearize_collision(am, an, am + Vec2{5, 0}, an) == doctest::Approx(1200.0));
  CHECK(linearize_collision(am, an, am, an) == doctest::Approx(900.0));
  std::mt19937_64 g(2);
  for (int i = 0; i < 200; ++i) {
    const Vec2 a1{uni(g, 0, 100), uni(g, 0, 100)}, a2{uni(g, 0, 100), uni(g, 0, 100)};
    const Vec2 x1{uni(g, 0, 100), uni(g, 0, 100)}, x2{uni(g, 0, 100), uni(g, 0, 100)};
    CHECK(linearize_collision(a1, a2, x1, x2) <= dist2(x1, x2) + 1e-9);
  }
  // Coincident anchors fall back to a tiny x offset.
  CHECK(linearize_collision(an, an, Vec2{10, 0}, an) == doctest::Approx(-1e-6 + 2e-2));
}

TEST_CASE("exact objective re-evaluation") {
  const DeployProblem p = toy({50, 50}, 60);
  const Vec2 x{40, 20};
  const double t = 0.1 + 4e6 / exact_rate(x, {0, 0}, 100, 1e6) +
                   4e6 / exact_rate(x, {100, 0}, 100, 1e6);
  CHECK(link_times(p, {x})[0] == doctest::Approx(t).epsilon(1e-12));
  const double v = std::max(0.0, t - 2.0);
  CHECK(deploy_objective(p, {x}) == doctest::Approx(t - 0.1 + 1e3 * v * v).epsilon(1e-12));
}

TEST_CASE("subproblem matches the grid on the toy instance") {
  const Vec2 anchor{50, 50};
  const DeployProblem p = toy(anchor, 200);
  const SubproblemResult r = solve_sca_subproblem(p, {anchor});
  REQUIRE_FALSE(r.infeasible);
  Vec2 arg;
  const double best = testing::deploy_surrogate_grid(p, anchor, 0.5, &arg);
  CHECK(dist(r.positions[0], arg) <= 1.0);
  CHECK(r.surrogate <= best * 1.05);
  CHECK(testing::deploy_surrogate(p, anchor, r.positions[0]) == doctest::Approx(r.surrogate).epsilon(1e-9));
}

TEST_CASE("subproblem within 5% of the grid on random single-UAV instances") {
  std::mt19937_64 g(3);
  for (int i = 0; i < 15; ++i) {
    const Vec2 start{uni(g, 100, 900), uni(g, 100, 900)};
    DeployProblem p = toy(start, 60);
    p.bs_pos = {uni(g, 0, 1000), uni(g, 0, 1000)};
    p.links[0].gu_pos = {uni(g, 0, 1000), uni(g, 0, 1000)};
    p.links[0].phi3 = uni(g, 1e5, 5e6);
    p.links[0].phi4 = uni(g, 1e5, 5e6);
    const SubproblemResult r = solve_sca_subproblem(p, {start});
    REQUIRE_FALSE(r.infeasible);
    Vec2 arg;
    const double best = testing::deploy_surrogate_grid(p, start, 0.5, &arg);
    CHECK(r.surrogate <= best * 1.05);
    CHECK(dist(r.positions[0], start) <= p.radius + 1e-6);
  }
}

TEST_CASE("no payload leaves the anchor and zero radius holds position") {
  DeployProblem p = toy({50, 50}, 60);
  p.links[0].phi3 = p.links[0].phi4 = 0.0;
  const SubproblemResult a = solve_sca_subproblem(p, {Vec2{60, 40}});
  CHECK(dist(a.positions[0], Vec2{60, 40}) <= 1e-9);
  DeployProblem q = toy({50, 50}, 0.0);
  const SubproblemResult b = solve_sca_subproblem(q, {Vec2{50, 50}});
  CHECK(dist(b.positions[0], Vec2{50, 50}) <= 1e-6);
}

TEST_CASE("SCA trace is nonincreasing and ends near the grid optimum") {
  std::mt19937_64 g(4);
  for (int i = 0; i < 10; ++i) {
    const Vec2 start{uni(g, 100, 900), uni(g, 100, 900)};
    DeployProblem p = toy(start, 60);
    p.bs_pos = {uni(g, 0, 1000), uni(g, 0, 1000)};
    p.links[0].gu_pos = {uni(g, 0, 1000), uni(g, 0, 1000)};
    const DeploySolution s = solve_deployment(p, {start});
    REQUIRE(s.objective_trace.size() >= 1);
    for (std::size_t j = 1; j < s.objective_trace.size(); ++j)
      CHECK(s.objective_trace[j] <=
            s.objective_trace[j - 1] + 1e-9 * std::fabs(s.objective_trace[j - 1]));
    CHECK(s.objective == doctest::Approx(deploy_objective(p, s.positions)));
    const double best = testing::deploy_grid_optimum(p, 0.5);
    CHECK(s.objective <= best * 1.05);
  }
}

TEST_CASE("symmetric pair of GUs keeps the UAV on the bisector") {
  DeployProblem p = toy({400, 500}, 60);
  p.bs_pos = {900, 500};
  DeployLink a = p.links[0], b = p.links[0];
  a.gu_pos = {300, 400};
  b.gu_pos = {300, 600};
  b.k = 1;
  p.links = {a, b};
  const DeploySolution s = solve_deployment(p, {Vec2{400, 500}});
  CHECK(std::fabs(s.positions[0].y - 500.0) <= 1.0);
}

TEST_CASE("multi-UAV outputs respect speed, area and separation") {
  std::mt19937_64 g(5);
  SystemParams prm = default_params();
  for (int it = 0; it < 10; ++it) {
    WorldState st = testing::random_state(prm, g);
    st.uav_pos = {{400, 400}, {420, 400}, {600, 700}};
    for (auto& pk : st.packet) pk.gen_slot = st.slot;
    SlotAction act = SlotAction::idle(prm.M, prm.K, st.uav_pos);
    for (int m = 0; m < prm.M; ++m) {
      act.assoc.assign(m, m);
      act.rho_u[m][m] = uni(g, 0.2, 1.0);
    }
    const DeployProblem p = build_deploy_problem(st, act, prm);
    const DeploySolution s = solve_deployment(p, p.old_pos);
    REQUIRE_FALSE(s.infeasible);
    for (int m = 0; m < prm.M; ++m) {
      CHECK(dist(s.positions[m], st.uav_pos[m]) <= p.radius + 1e-6);
      CHECK((s.positions[m].x >= -1e-6 && s.positions[m].x <= p.area_w + 1e-6));
      CHECK((s.positions[m].y >= -1e-6 && s.positions[m].y <= p.area_h + 1e-6));
      for (int n = m + 1; n < prm.M; ++n)
        CHECK(dist(s.positions[m], s.positions[n]) >= p.d_min - 1e-6);
    }
  }
}

TEST_CASE("projection handles an infeasible start") {
  DeployProblem p = toy({500, 500}, 60);
  p.M = 2;
  p.old_pos = {{500, 500}, {540, 500}};
  p.links.clear();
  std::vector<Vec2> x{{520, 500}, {520, 500}};
  CHECK(project_positions(p, &x));
  CHECK(dist(x[0], x[1]) >= p.d_min - 1e-6);
}

}  // TEST_SUITE
