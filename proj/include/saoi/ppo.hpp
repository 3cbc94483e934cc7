#ifndef SAOI_PPO_HPP_
#define SAOI_PPO_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "saoi/nn.hpp"
#include "saoi/types.hpp"

namespace saoi {

struct PpoHyper {
  double clip_eps = 0.2;
  double lr = 3e-4;
  int epochs = 4;
  int minibatch = 64;
  double c_v = 0.5;
  double c_e = 0.01;
  double g_max = 0.5;
  double gamma = 0.95;
  double lambda = 0.95;
  int hidden = 64;
  int layers = 2;
  bool kl_penalty = false;
  double kl_target = 0.01;
  double kl_beta = 1.0;
  double init_log_std = -0.5;
};

// Flattened log10 |h|^2 for the M*K UAV-GU links, UAV coordinates over the
// area size, AoI over a_max. Length M*K + 2M + K.
std::vector<double> make_observation(const WorldState& state,
                                     const SystemParams& params);

class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  explicit ObsNormalizer(int n) : mean(n, 0.0), var(n, 1.0) {}

  void update(const std::vector<double>& x);
  std::vector<double> normalize(const std::vector<double>& x) const;

  std::vector<double> mean;
  std::vector<double> var;
  double count = 0.0;
  bool frozen = false;
};

struct PolicyOutput {
  std::vector<std::vector<double>> logits;  // [M][K+1], column 0 is idle
  std::vector<double> mu;                   // continuous means, may be empty
  double value = 0.0;
};

class PpoAgent {
 public:
  PpoAgent() = default;
  PpoAgent(int obs_dim, int M, int K, int cont_dim, const PpoHyper& hyper,
           std::uint64_t seed);

  int M() const { return M_; }
  int K() const { return K_; }
  int cont_dim() const { return cont_dim_; }
  int obs_dim() const { return actor.input_size(); }

  Mlp actor;
  Mlp critic;
  std::vector<double> log_std;
  Adam actor_opt;
  Adam critic_opt;
  Adam log_std_opt;
  ObsNormalizer norm;
  PpoHyper hyper;
  double kl_beta = 1.0;

 private:
  int M_ = 0;
  int K_ = 0;
  int cont_dim_ = 0;
};

// Takes an already-normalized observation.
PolicyOutput policy_forward(const PpoAgent& agent,
                            const std::vector<double>& nobs);

struct MaskedSample {
  std::vector<int> choice;  // per UAV: GU index or kIdle
  double logprob = 0.0;
};

// UAVs sample in index order; GUs taken by earlier UAVs are masked out.
MaskedSample sample_masked(const std::vector<std::vector<double>>& logits,
                           std::mt19937_64& rng);
// Same masking, argmax instead of sampling.
MaskedSample greedy_masked(const std::vector<std::vector<double>>& logits);
double masked_logprob(const std::vector<std::vector<double>>& logits,
                      const std::vector<int>& choice);
// Masked probabilities seen by each UAV given the earlier choices.
std::vector<std::vector<double>> masked_probs(
    const std::vector<std::vector<double>>& logits,
    const std::vector<int>& choice);

double gaussian_logprob(const std::vector<double>& u,
                        const std::vector<double>& mu,
                        const std::vector<double>& log_std);

double clip_objective(double ratio, double advantage, double eps);

struct Transition {
  std::vector<double> obs;  // normalized
  std::vector<int> choice;
  std::vector<double> cont;  // raw Gaussian sample
  double logprob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  std::vector<std::vector<double>> old_logits;
  std::vector<double> old_mu;
  std::vector<double> old_log_std;
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  std::vector<double> advantages;
  std::vector<double> returns;

  void add(Transition t) { steps.push_back(std::move(t)); }
  void clear();
  std::size_t size() const { return steps.size(); }
  // GAE(lambda). The step after a done flag is not bootstrapped; the final
  // step bootstraps with last_value unless done.
  void compute_gae(double gamma, double lambda, double last_value = 0.0);
  void normalize_advantages();
};

struct LossGrads {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  std::vector<double> actor;
  std::vector<double> critic;
  std::vector<double> log_std;
};

// Minibatch loss (to minimize) and its gradient.
LossGrads ppo_loss(const PpoAgent& agent, const RolloutBuffer& buf,
                   const std::vector<int>& idx);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  int minibatches = 0;
  bool nan_abort = false;
};

UpdateStats ppo_update(PpoAgent* agent, RolloutBuffer* buf,
                       std::mt19937_64& rng);

// Text checkpoint with a version header. Throws std::runtime_error on IO or
// format errors.
void save_checkpoint(const PpoAgent& agent, const std::string& path);
PpoAgent load_checkpoint(const std::string& path);

}  // namespace saoi

#endif  // SAOI_PPO_HPP_
