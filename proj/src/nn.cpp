#include "saoi/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace saoi {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need >= 2 layers");
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    n += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  params.assign(n, 0.0);
}

void Mlp::init(std::mt19937_64& rng, double out_scale) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::size_t off = 0;
  const std::size_t L = sizes_.size() - 1;
  for (std::size_t l = 0; l < L; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    double scale = std::sqrt(1.0 / in);
    if (l + 1 == L) scale *= out_scale;
    for (int i = 0; i < out * in; ++i) params[off++] = scale * nd(rng);
    for (int i = 0; i < out; ++i) params[off++] = 0.0;
  }
}

std::vector<double> Mlp::forward(const std::vector<double>& x,
                                 Cache* cache) const {
  if (static_cast<int>(x.size()) != sizes_.front())
    throw std::invalid_argument("Mlp::forward: input size mismatch");
  std::vector<double> a = x;
  if (cache) {
    cache->act.clear();
    cache->act.push_back(a);
  }
  std::size_t off = 0;
  const std::size_t L = sizes_.size() - 1;
  for (std::size_t l = 0; l < L; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    std::vector<double> z(out);
    const double* W = params.data() + off;
    const double* b = W + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = (l + 1 == L) ? s : std::tanh(s);
    }
    off += static_cast<std::size_t>(out) * (in + 1);
    a = std::move(z);
    if (cache && l + 1 < L) cache->act.push_back(a);
  }
  return a;
}

void Mlp::backward(const Cache& cache, const std::vector<double>& dout,
                   std::vector<double>* grad) const {
  const std::size_t L = sizes_.size() - 1;
  std::vector<std::size_t> offs(L);
  std::size_t off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  std::vector<double> delta = dout;  // d loss / d pre-activation of layer l
  for (std::size_t l = L; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const std::vector<double>& a = cache.act[l];
    const double* W = params.data() + offs[l];
    double* gW = grad->data() + offs[l];
    double* gb = gW + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double* grow = gW + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += delta[o] * a[i];
      gb[o] += delta[o];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
    }
    for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    delta = std::move(prev);
  }
}

void Adam::step(std::vector<double>* params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params->size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    (*params)[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

double clip_grad_norm(std::vector<double>* grad, double max_norm) {
  double n = 0.0;
  for (double g : *grad) n += g * g;
  n = std::sqrt(n);
  if (n > max_norm && n > 0.0) {
    const double s = max_norm / n;
    for (double& g : *grad) g *= s;
  }
  return n;
}

}  // namespace saoi
