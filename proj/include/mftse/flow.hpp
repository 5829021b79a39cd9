#pragma once

// Trajectory and objective math: the convex path between background and
// target spectrograms, (t, r) time sampling, the curriculum-interpolated
// velocity target, and the adaptively weighted loss with stop-gradient
// semantics.

#include <cstdint>

#include "mftse/rng.hpp"
#include "mftse/signal.hpp"

namespace mftse {

struct TimePair {
  double t = 0.0;
  double r = 0.0;  // t <= r

  bool is_flow_matching() const { return t == r; }
};

struct AlphaSchedule {
  long k_s = 0;          // transition start step
  long k_e = 1;          // transition end step
  double gamma = 25.0;   // steepness
  double alpha_min = 0.005;
};

struct TimeSampling {
  double mu = -0.4;
  double sigma = 1.0;
  double flow_ratio = 0.5;
  // true: logistic-transformed normal (bounded in (0,1)); false: exp(normal)
  // clipped into (0,1)
  bool logit_normal = true;
};

struct LossOutput {
  double value = 0.0;
  Spectrogram grad_wrt_prediction;  // 2*sg(w)*(v_pred - target)
  double weight = 0.0;
};

// t*S + (1-t)*B
Spectrogram interpolate(const Spectrogram& S, const Spectrogram& B, double t);

// u = S - B
Spectrogram ground_truth_velocity(const Spectrogram& S, const Spectrogram& B);

TimePair sample_time_pair(Rng& rng, const TimeSampling& cfg);

double alpha_at(const AlphaSchedule& sched, long k);

// alpha*r + (1-alpha)*t
double tau(double t, double r, double alpha);

// alpha*u + (1-alpha)*v_at_tau; v_at_tau is a frozen network evaluation.
// Callers on the t==r branch must use u directly instead.
Spectrogram alpha_target(const Spectrogram& u, const Spectrogram& v_at_tau,
                         double alpha);

// alpha / (delta_sq_norm + c)
double adaptive_weight(double delta_sq_norm, double alpha, double c);

// ||.||^2 over both real and imaginary planes; the weight is treated as a
// constant during differentiation.
LossOutput adaptive_loss(const Spectrogram& v_pred, const Spectrogram& target,
                         double alpha, double c);

}  // namespace mftse
