#include "mftse/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mftse/kernels.hpp"

namespace mftse {

void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adamw_step: size mismatch");
  for (double g : grads)
    if (!std::isfinite(g))
      throw std::runtime_error("adamw_step: non-finite gradient");

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) +
                       cfg.weight_decay * params[i]);
  }
}

double clip_gradients(std::vector<double>& grads, double threshold) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("clip_gradients: threshold must be > 0");
  const double norm = std::sqrt(kernels::sumsq(grads.data(), grads.size()));
  if (norm > threshold) {
    const double s = threshold / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

double lr_at(const LrSchedule& cfg, double epoch) {
  if (epoch < 0.0) throw std::invalid_argument("lr_at: negative epoch");
  if (epoch < cfg.warmup_epochs)
    return cfg.base_lr * (epoch / cfg.warmup_epochs);
  double phase = epoch - cfg.warmup_epochs;
  if (cfg.restart) {
    if (phase > 0.0) {
      phase = std::fmod(phase, cfg.cosine_t_max);
      if (phase == 0.0) phase = cfg.cosine_t_max;  // trough, not a new period
    }
  } else {
    phase = std::min(phase, cfg.cosine_t_max);
  }
  const double cosine =
      0.5 * (1.0 + std::cos(std::numbers::pi * phase / cfg.cosine_t_max));
  return cfg.min_lr + (cfg.base_lr - cfg.min_lr) * cosine;
}

}  // namespace mftse
