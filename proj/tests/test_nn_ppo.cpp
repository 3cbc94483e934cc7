#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "saoi/nn.hpp"
#include "saoi/ppo.hpp"

using namespace saoi;
using testing::uni;

namespace {

double max_fd_error(const std::function<double()>& f, std::vector<double>* params,
                    const std::vector<double>& analytic, double h) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params->size(); ++i) {
    const double keep = (*params)[i];
    (*params)[i] = keep + h;
    const double fp = f();
    (*params)[i] = keep - h;
    const double fm = f();
    (*params)[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    worst = std::max(worst, std::fabs(analytic[i] - fd) / (1.0 + std::fabs(analytic[i])));
  }
  return worst;
}

// Small agent with a filled buffer of synthetic transitions.
struct Micro {
  PpoAgent agent;
  RolloutBuffer buf;
  std::vector<int> idx;
};

Micro make_micro(bool kl, int cont, std::uint64_t seed) {
  PpoHyper h;
  h.hidden = 5;
  h.layers = 1;
  h.kl_penalty = kl;
  h.kl_beta = 0.7;
  h.c_e = 0.05;
  Micro mc;
  mc.agent = PpoAgent(3, 2, 3, cont, h, seed);
  std::mt19937_64 g(seed);
  for (double& w : mc.agent.actor.params) w = uni(g, -0.8, 0.8);
  for (double& w : mc.agent.critic.params) w = uni(g, -0.8, 0.8);
  for (double& s : mc.agent.log_std) s = uni(g, -1, 0);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.obs = {uni(g, -1, 1), uni(g, -1, 1), uni(g, -1, 1)};
    const PolicyOutput out = policy_forward(mc.agent, t.obs);
    const MaskedSample s = sample_masked(out.logits, g);
    t.choice = s.choice;
    for (int c = 0; c < cont; ++c) t.cont.push_back(out.mu[c] + uni(g, -1, 1));
    // Old log-probabilities a bit off so ratios spread across the clip range.
    t.logprob = s.logprob + gaussian_logprob(t.cont, out.mu, mc.agent.log_std) +
                uni(g, -0.4, 0.4);
    t.old_logits = out.logits;
    for (auto& row : t.old_logits)
      for (double& z : row) z += uni(g, -0.3, 0.3);
    t.old_mu = out.mu;
    for (double& m : t.old_mu) m += uni(g, -0.3, 0.3);
    t.old_log_std = mc.agent.log_std;
    t.reward = uni(g, -1, 1);
    t.value = uni(g, -1, 1);
    mc.buf.add(t);
    mc.buf.advantages.push_back(uni(g, -2, 2));
    mc.buf.returns.push_back(uni(g, -2, 2));
    mc.idx.push_back(i);
  }
  return mc;
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("MLP backward matches finite differences") {
  std::mt19937_64 g(1);
  Mlp net({4, 6, 5, 3});
  net.init(g, 1.0);
  const std::vector<double> x{0.3, -0.2, 0.9, -1.1};
  const std::vector<double> c{0.7, -1.3, 0.4};
  auto f = [&] {
    const auto y = net.forward(x);
    double s = 0;
    for (int i = 0; i < 3; ++i) s += c[i] * y[i];
    return s;
  };
  Mlp::Cache cache;
  net.forward(x, &cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(cache, c, &grad);
  CHECK(max_fd_error(f, &net.params, grad, 1e-6) < 1e-4);
}

TEST_CASE("zero weights give uniform logits and zero value") {
  PpoAgent a(4, 2, 3, 0, PpoHyper{}, 1);
  std::fill(a.actor.params.begin(), a.actor.params.end(), 0.0);
  std::fill(a.critic.params.begin(), a.critic.params.end(), 0.0);
  const PolicyOutput o = policy_forward(a, {1, 2, 3, 4});
  for (const auto& row : o.logits)
    for (double z : row) CHECK(z == 0.0);
  CHECK(o.value == 0.0);
  const auto p = masked_probs(o.logits, {0, kIdle});
  for (double x : p[0]) CHECK(x == doctest::Approx(0.25));
  // GU 0 taken by UAV 0: three options left for UAV 1.
  CHECK(p[1][1] == 0.0);
  CHECK(p[1][0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("masked sampling frequencies and validity") {
  // Two UAVs, one GU, flat logits: the first UAV takes the GU half the time.
  const std::vector<std::vector<double>> z(2, std::vector<double>(2, 0.0));
  std::mt19937_64 g(2);
  const int n = 20000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    const MaskedSample s = sample_masked(z, g);
    CHECK_FALSE((s.choice[0] == 0 && s.choice[1] == 0));
    if (s.choice[0] == 0) ++first;
    CHECK(s.logprob == doctest::Approx(masked_logprob(z, s.choice)));
  }
  const double sd = std::sqrt(0.25 / n);
  CHECK(std::fabs(first / static_cast<double>(n) - 0.5) < 3 * sd);
  // Exhaustive masks for small sizes with random logits.
  for (int M = 1; M <= 3; ++M)
    for (int K = 1; K <= 3; ++K)
      for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::vector<double>> zz(M, std::vector<double>(K + 1));
        for (auto& r : zz)
          for (double& v : r) v = uni(g, -3, 3);
        for (const MaskedSample& s : {sample_masked(zz, g), greedy_masked(zz)}) {
          std::vector<int> used(K, 0);
          for (int c : s.choice)
            if (c != kIdle) CHECK(++used.at(c) == 1);
          CHECK(s.logprob == doctest::Approx(masked_logprob(zz, s.choice)));
        }
      }
}

TEST_CASE("clip objective cases") {
  CHECK(clip_objective(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clip_objective(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clip_objective(1.0, 0.7, 0.2) == doctest::Approx(0.7));
  std::mt19937_64 g(3);
  for (int i = 0; i < 300; ++i) {
    const double r = uni(g, 0, 3), A = uni(g, -2, 2), e = uni(g, 0.05, 0.4);
    double expect;
    if (A >= 0)
      expect = std::min(r, 1 + e) * A;
    else
      expect = std::max(r, 1 - e) * A;
    CHECK(clip_objective(r, A, e) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("GAE matches a direct sum") {
  std::mt19937_64 g(4);
  RolloutBuffer b;
  const int n = 12;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.reward = uni(g, -1, 1);
    t.value = uni(g, -1, 1);
    t.done = i == 5;
    b.add(t);
  }
  const double gm = 0.9, lm = 0.8, last = 0.37;
  b.compute_gae(gm, lm, last);
  for (int i = 0; i < n; ++i) {
    // A_i = sum_l (gamma*lambda)^l delta_{i+l} up to the episode end.
    double A = 0.0, f = 1.0;
    for (int j = i; j < n; ++j) {
      const bool term = b.steps[j].done;
      const double nv = term ? 0.0 : (j + 1 < n ? b.steps[j + 1].value : last);
      A += f * (b.steps[j].reward + gm * nv - b.steps[j].value);
      if (term) break;
      f *= gm * lm;
    }
    CHECK(b.advantages[i] == doctest::Approx(A).epsilon(1e-12));
    CHECK(b.returns[i] == doctest::Approx(A + b.steps[i].value).epsilon(1e-12));
  }
  b.normalize_advantages();
  double mu = 0, v = 0;
  for (double a : b.advantages) mu += a / n;
  for (double a : b.advantages) v += (a - mu) * (a - mu) / n;
  CHECK(std::fabs(mu) < 1e-12);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("loss gradients match finite differences") {
  for (bool kl : {false, true})
    for (int cont : {0, 2})
      for (std::uint64_t seed : {5u, 6u, 7u}) {
        Micro mc = make_micro(kl, cont, seed);
        const LossGrads g = ppo_loss(mc.agent, mc.buf, mc.idx);
        auto f = [&] { return ppo_loss(mc.agent, mc.buf, mc.idx).loss; };
        CHECK(max_fd_error(f, &mc.agent.actor.params, g.actor, 1e-6) < 1e-4);
        CHECK(max_fd_error(f, &mc.agent.critic.params, g.critic, 1e-6) < 1e-4);
        if (cont > 0) CHECK(max_fd_error(f, &mc.agent.log_std, g.log_std, 1e-6) < 1e-4);
      }
}

TEST_CASE("zero advantage without entropy leaves the actor unchanged") {
  Micro mc = make_micro(false, 2, 8);
  mc.agent.hyper.c_e = 0.0;
  std::fill(mc.buf.advantages.begin(), mc.buf.advantages.end(), 0.0);
  const std::vector<double> before = mc.agent.actor.params;
  const std::vector<double> ls = mc.agent.log_std;
  std::mt19937_64 g(1);
  ppo_update(&mc.agent, &mc.buf, g);
  CHECK(mc.agent.actor.params == before);
  CHECK(mc.agent.log_std == ls);
}

TEST_CASE("bandit toy converges to the best arm") {
  PpoHyper h;
  h.lr = 1e-2;
  h.hidden = 8;
  h.layers = 1;
  h.c_e = 0.0;
  PpoAgent a(1, 1, 2, 0, h, 9);
  std::mt19937_64 g(9);
  const std::vector<double> obs{1.0};
  double p_best = 0.0;
  int updates = 0;
  for (; updates < 500; ++updates) {
    const PolicyOutput out = policy_forward(a, obs);
    p_best = masked_probs(out.logits, {1})[0][2];
    if (p_best > 0.95) break;
    RolloutBuffer b;
    for (int i = 0; i < 64; ++i) {
      const MaskedSample s = sample_masked(out.logits, g);
      Transition t;
      t.obs = obs;
      t.choice = s.choice;
      t.logprob = s.logprob;
      t.value = out.value;
      t.reward = s.choice[0] == 1 ? 1.0 : 0.0;
      t.done = true;
      b.add(t);
    }
    b.compute_gae(h.gamma, h.lambda);
    b.normalize_advantages();
    ppo_update(&a, &b, g);
  }
  CHECK(p_best > 0.95);
  CHECK(updates < 500);
}

TEST_CASE("non-finite loss restores the agent") {
  Micro mc = make_micro(false, 2, 10);
  mc.buf.returns[0] = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> before = mc.agent.critic.params;
  std::mt19937_64 g(1);
  const UpdateStats st = ppo_update(&mc.agent, &mc.buf, g);
  CHECK(st.nan_abort);
  CHECK(mc.agent.critic.params == before);
}

TEST_CASE("updates are deterministic for a fixed stream") {
  Micro a = make_micro(false, 2, 11), b = make_micro(false, 2, 11);
  std::mt19937_64 ga(3), gb(3);
  ppo_update(&a.agent, &a.buf, ga);
  ppo_update(&b.agent, &b.buf, gb);
  CHECK(a.agent.actor.params == b.agent.actor.params);
  CHECK(a.agent.critic.params == b.agent.critic.params);
}

TEST_CASE("checkpoint round trip") {
  Micro mc = make_micro(true, 2, 12);
  mc.agent.norm.update({1, 2, 3});
  mc.agent.norm.update({0, -1, 4});
  const auto path = std::filesystem::temp_directory_path() / "saoi_ckpt_test.txt";
  save_checkpoint(mc.agent, path.string());
  const PpoAgent b = load_checkpoint(path.string());
  CHECK(b.actor.params == mc.agent.actor.params);
  CHECK(b.critic.params == mc.agent.critic.params);
  CHECK(b.log_std == mc.agent.log_std);
  CHECK(b.norm.mean == mc.agent.norm.mean);
  CHECK(b.kl_beta == mc.agent.kl_beta);
  const std::vector<double> x{0.1, 0.2, 0.3};
  CHECK(policy_forward(b, x).value == policy_forward(mc.agent, x).value);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
}

}  // TEST_SUITE
