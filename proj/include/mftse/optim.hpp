#pragma once

// AdamW with decoupled weight decay, global-norm gradient clipping, and the
// warmup + restarting-cosine learning-rate schedule.

#include <cstddef>
#include <vector>

namespace mftse {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamWState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// In-place decoupled-decay update. Throws on non-finite gradients before
// mutating anything.
void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg);

// Global-norm clipping: if ||g||_2 > threshold, scale by threshold/||g||_2.
// Returns the pre-clip norm.
double clip_gradients(std::vector<double>& grads, double threshold);

struct LrSchedule {
  double base_lr = 1e-4;
  double min_lr = 1e-5;
  double warmup_epochs = 5.0;
  double cosine_t_max = 50.0;
  bool restart = true;  // periodic cosine after each T_max; else clamp at min
};

// Linear warmup from 0 to base_lr over warmup_epochs, then cosine annealing
// from base_lr to min_lr with period cosine_t_max.
double lr_at(const LrSchedule& cfg, double epoch);

}  // namespace mftse
