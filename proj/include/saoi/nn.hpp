#ifndef SAOI_NN_HPP_
#define SAOI_NN_HPP_

#include <random>
#include <vector>

namespace saoi {

// Fully connected net, tanh hidden layers, linear output. Parameters live in
// one flat vector: for each layer, W (out x in, row-major) then b.
class Mlp {
 public:
  struct Cache {
    std::vector<std::vector<double>> act;  // input and post-tanh activations
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_params() const { return static_cast<int>(params.size()); }
  const std::vector<int>& sizes() const { return sizes_; }

  // Scaled-normal init; the last layer is multiplied by out_scale.
  void init(std::mt19937_64& rng, double out_scale);

  std::vector<double> forward(const std::vector<double>& x,
                              Cache* cache = nullptr) const;
  // Adds d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const Cache& cache, const std::vector<double>& dout,
                std::vector<double>* grad) const;

  std::vector<double> params;

 private:
  std::vector<int> sizes_;
};

class Adam {
 public:
  Adam() = default;
  Adam(int n, double lr) : lr(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>* params, const std::vector<double>& grad);

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  long t() const { return t_; }
  void restore(std::vector<double> m, std::vector<double> v, long t) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
  }

 private:
  std::vector<double> m_, v_;
  long t_ = 0;
};

// Scales grad so that its L2 norm is at most max_norm. Returns the norm before.
double clip_grad_norm(std::vector<double>* grad, double max_norm);

}  // namespace saoi

#endif  // SAOI_NN_HPP_
