#include "ppgage/nn/adam.hpp"

#include <cmath>

#include "ppgage/error.hpp"

namespace ppgage::nn {

namespace {
double f32(double x) { return static_cast<double>(static_cast<float>(x)); }
}  // namespace

AdamState AdamState::for_size(std::size_t n, double lr, double weight_decay) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
  require(params.size() == grads.size() && s.m.size() == params.size() && s.v.size() == params.size(),
          "Adam state, parameters and gradients differ in size");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + s.weight_decay * params[i];
    s.m[i] = f32(s.beta1 * s.m[i] + (1.0 - s.beta1) * g);
    s.v[i] = f32(s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g);
    const double m_hat = s.m[i] / c1;
    const double v_hat = s.v[i] / c2;
    params[i] = f32(params[i] - s.lr * m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

}  // namespace ppgage::nn
