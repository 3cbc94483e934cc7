#include "saoi/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "saoi/model.hpp"

namespace saoi {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

std::vector<double> make_observation(const WorldState& state,
                                     const SystemParams& params) {
  std::vector<double> obs;
  obs.reserve(params.M * params.K + 2 * params.M + params.K);
  for (int m = 0; m < params.M; ++m)
    for (int k = 0; k < params.K; ++k) {
      const Complex h = channel_gain(state.uav_pos[m], state.gu_pos[k],
                                     state.fading[m][k], params);
      obs.push_back(std::log10(std::max(std::norm(h), 1e-300)));
    }
  for (int m = 0; m < params.M; ++m) {
    obs.push_back(state.uav_pos[m].x / params.area_w);
    obs.push_back(state.uav_pos[m].y / params.area_h);
  }
  for (int k = 0; k < params.K; ++k) obs.push_back(state.aoi[k] / params.a_max);
  return obs;
}

void ObsNormalizer::update(const std::vector<double>& x) {
  if (frozen) return;
  if (mean.empty()) {
    mean.assign(x.size(), 0.0);
    var.assign(x.size(), 1.0);
  }
  if (count == 0.0) count = 1e-4;
  const double tot = count + 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean[i];
    mean[i] += d / tot;
    var[i] = (var[i] * count + d * d * count / tot) / tot;
  }
  count = tot;
}

std::vector<double> ObsNormalizer::normalize(const std::vector<double>& x) const {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mu = mean.empty() ? 0.0 : mean[i];
    const double v = var.empty() ? 1.0 : var[i];
    y[i] = std::clamp((x[i] - mu) / std::sqrt(v + 1e-8), -10.0, 10.0);
  }
  return y;
}

PpoAgent::PpoAgent(int obs_dim, int M, int K, int cont_dim,
                   const PpoHyper& h, std::uint64_t seed)
    : hyper(h), kl_beta(h.kl_beta), M_(M), K_(K), cont_dim_(cont_dim) {
  std::vector<int> a{obs_dim}, c{obs_dim};
  for (int l = 0; l < h.layers; ++l) {
    a.push_back(h.hidden);
    c.push_back(h.hidden);
  }
  a.push_back(M * (K + 1) + cont_dim);
  c.push_back(1);
  actor = Mlp(a);
  critic = Mlp(c);
  std::mt19937_64 rng(seed);
  actor.init(rng, 0.01);
  critic.init(rng, 1.0);
  log_std.assign(cont_dim, h.init_log_std);
  actor_opt = Adam(actor.num_params(), h.lr);
  critic_opt = Adam(critic.num_params(), h.lr);
  log_std_opt = Adam(cont_dim, h.lr);
  norm = ObsNormalizer(obs_dim);
}

PolicyOutput policy_forward(const PpoAgent& agent,
                            const std::vector<double>& nobs) {
  PolicyOutput out;
  const std::vector<double> a = agent.actor.forward(nobs);
  const int M = agent.M(), K = agent.K();
  out.logits.assign(M, std::vector<double>(K + 1));
  for (int m = 0; m < M; ++m)
    for (int j = 0; j <= K; ++j) out.logits[m][j] = a[m * (K + 1) + j];
  out.mu.assign(a.begin() + M * (K + 1), a.end());
  out.value = agent.critic.forward(nobs)[0];
  return out;
}

namespace {

// Masked softmax for one UAV. taken[k] marks GUs claimed earlier.
std::vector<double> softmax_masked(const std::vector<double>& z,
                                   const std::vector<bool>& taken) {
  std::vector<double> p(z.size(), 0.0);
  double mx = kNegInf;
  for (std::size_t j = 0; j < z.size(); ++j)
    if (j == 0 || !taken[j - 1]) mx = std::max(mx, z[j]);
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j > 0 && taken[j - 1]) continue;
    p[j] = std::exp(z[j] - mx);
    s += p[j];
  }
  for (double& x : p) x /= s;
  return p;
}

int to_index(int choice) { return choice == kIdle ? 0 : choice + 1; }
int to_choice(int index) { return index == 0 ? kIdle : index - 1; }

}  // namespace

std::vector<std::vector<double>> masked_probs(
    const std::vector<std::vector<double>>& logits,
    const std::vector<int>& choice) {
  const int K = static_cast<int>(logits[0].size()) - 1;
  std::vector<bool> taken(K, false);
  std::vector<std::vector<double>> out;
  for (std::size_t m = 0; m < logits.size(); ++m) {
    out.push_back(softmax_masked(logits[m], taken));
    if (choice[m] != kIdle) taken[choice[m]] = true;
  }
  return out;
}

MaskedSample sample_masked(const std::vector<std::vector<double>>& logits,
                           std::mt19937_64& rng) {
  const int K = static_cast<int>(logits[0].size()) - 1;
  std::vector<bool> taken(K, false);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  MaskedSample s;
  for (const auto& z : logits) {
    const std::vector<double> p = softmax_masked(z, taken);
    const double u = U(rng);
    double acc = 0.0;
    int pick = -1, last = 0;
    for (int j = 0; j <= K; ++j) {
      if (p[j] <= 0.0) continue;
      last = j;
      acc += p[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    if (pick < 0) pick = last;
    s.logprob += std::log(p[pick]);
    s.choice.push_back(to_choice(pick));
    if (pick > 0) taken[pick - 1] = true;
  }
  return s;
}

MaskedSample greedy_masked(const std::vector<std::vector<double>>& logits) {
  const int K = static_cast<int>(logits[0].size()) - 1;
  std::vector<bool> taken(K, false);
  MaskedSample s;
  for (const auto& z : logits) {
    const std::vector<double> p = softmax_masked(z, taken);
    int pick = 0;
    for (int j = 1; j <= K; ++j)
      if (p[j] > p[pick]) pick = j;
    s.logprob += std::log(p[pick]);
    s.choice.push_back(to_choice(pick));
    if (pick > 0) taken[pick - 1] = true;
  }
  return s;
}

double masked_logprob(const std::vector<std::vector<double>>& logits,
                      const std::vector<int>& choice) {
  const auto p = masked_probs(logits, choice);
  double lp = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m)
    lp += std::log(p[m][to_index(choice[m])]);
  return lp;
}

double gaussian_logprob(const std::vector<double>& u,
                        const std::vector<double>& mu,
                        const std::vector<double>& log_std) {
  double lp = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double z = (u[i] - mu[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double clip_objective(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

void RolloutBuffer::clear() {
  steps.clear();
  advantages.clear();
  returns.clear();
}

void RolloutBuffer::compute_gae(double gamma, double lambda,
                                double last_value) {
  const std::size_t n = steps.size();
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double gae = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const Transition& t = steps[i];
    double next_v;
    if (t.done)
      next_v = 0.0;
    else if (i + 1 < n)
      next_v = steps[i + 1].value;
    else
      next_v = last_value;
    const double nonterm = t.done ? 0.0 : 1.0;
    const double delta = t.reward + gamma * next_v - t.value;
    gae = delta + gamma * lambda * nonterm * gae;
    advantages[i] = gae;
    returns[i] = gae + t.value;
  }
}

void RolloutBuffer::normalize_advantages() {
  const std::size_t n = advantages.size();
  if (n < 2) return;
  const double mu =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double v = 0.0;
  for (double a : advantages) v += (a - mu) * (a - mu);
  const double sd = std::sqrt(v / n);
  for (double& a : advantages) a = (a - mu) / (sd + 1e-8);
}

LossGrads ppo_loss(const PpoAgent& agent, const RolloutBuffer& buf,
                   const std::vector<int>& idx) {
  LossGrads g;
  g.actor.assign(agent.actor.num_params(), 0.0);
  g.critic.assign(agent.critic.num_params(), 0.0);
  g.log_std.assign(agent.cont_dim(), 0.0);
  const int M = agent.M(), K = agent.K(), C = agent.cont_dim();
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  const PpoHyper& h = agent.hyper;
  const bool kl = h.kl_penalty;
  const double beta = agent.kl_beta;

  for (int i : idx) {
    const Transition& t = buf.steps[i];
    const double A = buf.advantages[i];
    const double R = buf.returns[i];
    Mlp::Cache ca, cc;
    const std::vector<double> out = agent.actor.forward(t.obs, &ca);
    std::vector<double> dout(out.size(), 0.0);

    std::vector<std::vector<double>> z(M, std::vector<double>(K + 1));
    for (int m = 0; m < M; ++m)
      for (int j = 0; j <= K; ++j) z[m][j] = out[m * (K + 1) + j];
    const auto p = masked_probs(z, t.choice);
    std::vector<std::vector<double>> po;
    if (kl) po = masked_probs(t.old_logits, t.choice);

    double logp = 0.0, ent = 0.0, kld = 0.0;
    std::vector<double> Hm(M, 0.0);
    for (int m = 0; m < M; ++m) {
      logp += std::log(p[m][to_index(t.choice[m])]);
      for (int j = 0; j <= K; ++j)
        if (p[m][j] > 0.0) Hm[m] -= p[m][j] * std::log(p[m][j]);
      ent += Hm[m];
      if (kl)
        for (int j = 0; j <= K; ++j)
          if (po[m][j] > 0.0)
            kld += po[m][j] * (std::log(po[m][j]) - std::log(p[m][j]));
    }
    std::vector<double> mu(out.begin() + M * (K + 1), out.end());
    if (C > 0) {
      logp += gaussian_logprob(t.cont, mu, agent.log_std);
      for (int c = 0; c < C; ++c) {
        ent += agent.log_std[c] + 0.5 + kHalfLog2Pi;
        if (kl) {
          const double so = std::exp(t.old_log_std[c]);
          const double sn = std::exp(agent.log_std[c]);
          const double dm = t.old_mu[c] - mu[c];
          kld += agent.log_std[c] - t.old_log_std[c] +
                 (so * so + dm * dm) / (2.0 * sn * sn) - 0.5;
        }
      }
    }

    const double ratio = std::exp(logp - t.logprob);
    double obj, dlogp;
    if (kl) {
      obj = ratio * A;
      dlogp = -ratio * A;
    } else {
      obj = clip_objective(ratio, A, h.clip_eps);
      const double clipped = std::clamp(ratio, 1.0 - h.clip_eps, 1.0 + h.clip_eps);
      dlogp = (ratio * A <= clipped * A) ? -ratio * A : 0.0;
    }
    g.policy_loss += -obj * inv_n;
    g.entropy += ent * inv_n;
    g.kl += kld * inv_n;

    for (int m = 0; m < M; ++m) {
      const int a = to_index(t.choice[m]);
      for (int j = 0; j <= K; ++j) {
        if (p[m][j] <= 0.0) continue;
        double d = dlogp * ((j == a ? 1.0 : 0.0) - p[m][j]);
        d += h.c_e * p[m][j] * (std::log(p[m][j]) + Hm[m]);
        if (kl) d += beta * (p[m][j] - po[m][j]);
        dout[m * (K + 1) + j] = d * inv_n;
      }
    }
    for (int c = 0; c < C; ++c) {
      const double s2 = std::exp(2.0 * agent.log_std[c]);
      const double diff = t.cont[c] - mu[c];
      double dmu = dlogp * diff / s2;
      double dls = dlogp * (diff * diff / s2 - 1.0) - h.c_e;
      if (kl) {
        const double so2 = std::exp(2.0 * t.old_log_std[c]);
        const double dm = t.old_mu[c] - mu[c];
        dmu += beta * (mu[c] - t.old_mu[c]) / s2;
        dls += beta * (1.0 - (so2 + dm * dm) / s2);
      }
      dout[M * (K + 1) + c] = dmu * inv_n;
      g.log_std[c] += dls * inv_n;
    }
    agent.actor.backward(ca, dout, &g.actor);

    const double v = agent.critic.forward(t.obs, &cc)[0];
    g.value_loss += (v - R) * (v - R) * inv_n;
    agent.critic.backward(cc, {2.0 * h.c_v * (v - R) * inv_n}, &g.critic);
  }
  g.loss = g.policy_loss + h.c_v * g.value_loss - h.c_e * g.entropy +
           (kl ? beta * g.kl : 0.0);
  return g;
}

UpdateStats ppo_update(PpoAgent* agent, RolloutBuffer* buf,
                       std::mt19937_64& rng) {
  UpdateStats st;
  if (buf->size() == 0) throw std::invalid_argument("ppo_update: empty buffer");
  const PpoAgent snapshot = *agent;
  const PpoHyper& h = agent->hyper;
  std::vector<int> idx(buf->size());
  std::iota(idx.begin(), idx.end(), 0);
  const int mb = std::max(1, h.minibatch);
  for (int e = 0; e < h.epochs; ++e) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t s = 0; s < idx.size(); s += mb) {
      const std::vector<int> batch(
          idx.begin() + s, idx.begin() + std::min(idx.size(), s + mb));
      LossGrads g = ppo_loss(*agent, *buf, batch);
      if (!std::isfinite(g.loss)) {
        *agent = snapshot;
        st.nan_abort = true;
        return st;
      }
      std::vector<double> pg = g.actor;
      pg.insert(pg.end(), g.log_std.begin(), g.log_std.end());
      clip_grad_norm(&pg, h.g_max);
      std::copy(pg.begin(), pg.begin() + g.actor.size(), g.actor.begin());
      std::copy(pg.begin() + g.actor.size(), pg.end(), g.log_std.begin());
      clip_grad_norm(&g.critic, h.g_max);
      agent->actor_opt.step(&agent->actor.params, g.actor);
      agent->critic_opt.step(&agent->critic.params, g.critic);
      if (agent->cont_dim() > 0)
        agent->log_std_opt.step(&agent->log_std, g.log_std);
      st.policy_loss += g.policy_loss;
      st.value_loss += g.value_loss;
      st.entropy += g.entropy;
      st.kl += g.kl;
      ++st.minibatches;
    }
  }
  if (st.minibatches > 0) {
    st.policy_loss /= st.minibatches;
    st.value_loss /= st.minibatches;
    st.entropy /= st.minibatches;
    st.kl /= st.minibatches;
  }
  if (h.kl_penalty) {
    const double kl = ppo_loss(*agent, *buf, idx).kl;
    st.kl = kl;
    if (kl > 1.5 * h.kl_target)
      agent->kl_beta *= 2.0;
    else if (kl < h.kl_target / 1.5)
      agent->kl_beta *= 0.5;
  }
  return st;
}

namespace {

void write_vec(std::ostream& os, const char* tag, const std::vector<double>& v) {
  os << tag << ' ' << v.size();
  for (double x : v) os << ' ' << x;
  os << '\n';
}

void write_ivec(std::ostream& os, const char* tag, const std::vector<int>& v) {
  os << tag << ' ' << v.size();
  for (int x : v) os << ' ' << x;
  os << '\n';
}

template <typename T>
std::vector<T> read_vec(std::istream& is, const std::string& tag) {
  std::string t;
  std::size_t n = 0;
  if (!(is >> t >> n) || t != tag)
    throw std::runtime_error("checkpoint: expected '" + tag + "'");
  std::vector<T> v(n);
  for (auto& x : v)
    if (!(is >> x)) throw std::runtime_error("checkpoint: truncated " + tag);
  return v;
}

const char* kMagic = "saoi-ppo-checkpoint";
const int kVersion = 1;

}  // namespace

void save_checkpoint(const PpoAgent& agent, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << kMagic << ' ' << kVersion << '\n';
  os << "shape " << agent.M() << ' ' << agent.K() << ' ' << agent.cont_dim()
     << '\n';
  write_ivec(os, "actor_sizes", agent.actor.sizes());
  write_vec(os, "actor", agent.actor.params);
  write_ivec(os, "critic_sizes", agent.critic.sizes());
  write_vec(os, "critic", agent.critic.params);
  write_vec(os, "log_std", agent.log_std);
  write_vec(os, "norm_mean", agent.norm.mean);
  write_vec(os, "norm_var", agent.norm.var);
  os << "norm_count " << agent.norm.count << '\n';
  os << "kl_beta " << agent.kl_beta << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

PpoAgent load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string magic, tag;
  int version = 0;
  if (!(is >> magic >> version) || magic != kMagic)
    throw std::runtime_error("checkpoint: bad header");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  int M = 0, K = 0, C = 0;
  if (!(is >> tag >> M >> K >> C) || tag != "shape")
    throw std::runtime_error("checkpoint: expected 'shape'");
  const auto asz = read_vec<int>(is, "actor_sizes");
  const auto ap = read_vec<double>(is, "actor");
  const auto csz = read_vec<int>(is, "critic_sizes");
  const auto cp = read_vec<double>(is, "critic");
  PpoHyper h;
  h.layers = static_cast<int>(asz.size()) - 2;
  h.hidden = asz.size() > 2 ? asz[1] : 64;
  PpoAgent a(asz.front(), M, K, C, h, 0);
  a.actor = Mlp(asz);
  a.critic = Mlp(csz);
  if (ap.size() != a.actor.params.size() || cp.size() != a.critic.params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  a.actor.params = ap;
  a.critic.params = cp;
  a.actor_opt = Adam(a.actor.num_params(), h.lr);
  a.critic_opt = Adam(a.critic.num_params(), h.lr);
  a.log_std = read_vec<double>(is, "log_std");
  a.norm.mean = read_vec<double>(is, "norm_mean");
  a.norm.var = read_vec<double>(is, "norm_var");
  if (!(is >> tag >> a.norm.count) || tag != "norm_count")
    throw std::runtime_error("checkpoint: expected 'norm_count'");
  if (!(is >> tag >> a.kl_beta) || tag != "kl_beta")
    throw std::runtime_error("checkpoint: expected 'kl_beta'");
  return a;
}

}  // namespace saoi
