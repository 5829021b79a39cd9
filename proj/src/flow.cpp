#include "mftse/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mftse/kernels.hpp"

namespace mftse {

namespace {

void require_same_shape(const Spectrogram& a, const Spectrogram& b,
                        const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Spectrogram interpolate(const Spectrogram& S, const Spectrogram& B, double t) {
  require_same_shape(S, B, "interpolate");
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("interpolate: t out of [0,1]");
  Spectrogram z = S;
  kernels::lerp(t, S.re.data(), B.re.data(), z.re.data(), z.size());
  kernels::lerp(t, S.im.data(), B.im.data(), z.im.data(), z.size());
  return z;
}

Spectrogram ground_truth_velocity(const Spectrogram& S, const Spectrogram& B) {
  require_same_shape(S, B, "ground_truth_velocity");
  Spectrogram u = S;
  kernels::axpy(-1.0, B.re.data(), u.re.data(), u.size());
  kernels::axpy(-1.0, B.im.data(), u.im.data(), u.size());
  return u;
}

TimePair sample_time_pair(Rng& rng, const TimeSampling& cfg) {
  if (!(cfg.sigma > 0.0))
    throw std::invalid_argument("sample_time_pair: sigma must be > 0");
  auto draw = [&] {
    const double n = cfg.mu + cfg.sigma * rng.normal();
    if (cfg.logit_normal) return logistic(n);
    return std::clamp(std::exp(n), 1e-6, 1.0 - 1e-6);
  };
  const double a = draw();
  const double b = draw();
  TimePair tp;
  tp.t = std::min(a, b);
  tp.r = std::max(a, b);
  if (rng.uniform() < cfg.flow_ratio) tp.r = tp.t;
  if (std::abs(tp.r - tp.t) < 1e-9) tp.r = tp.t;  // numeric tie: FM branch
  return tp;
}

double alpha_at(const AlphaSchedule& sched, long k) {
  if (sched.k_s >= sched.k_e)
    throw std::invalid_argument("alpha_at: require k_s < k_e");
  const double x = (static_cast<double>(k - sched.k_s) /
                    static_cast<double>(sched.k_e - sched.k_s)) - 0.5;
  const double a = 1.0 - logistic(sched.gamma * x);
  return std::clamp(a, sched.alpha_min, 1.0);
}

double tau(double t, double r, double alpha) {
  return alpha * r + (1.0 - alpha) * t;
}

Spectrogram alpha_target(const Spectrogram& u, const Spectrogram& v_at_tau,
                         double alpha) {
  require_same_shape(u, v_at_tau, "alpha_target");
  Spectrogram out = u;
  kernels::lerp(alpha, u.re.data(), v_at_tau.re.data(), out.re.data(), out.size());
  kernels::lerp(alpha, u.im.data(), v_at_tau.im.data(), out.im.data(), out.size());
  return out;
}

double adaptive_weight(double delta_sq_norm, double alpha, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("adaptive_weight: c must be > 0");
  return alpha / (delta_sq_norm + c);
}

LossOutput adaptive_loss(const Spectrogram& v_pred, const Spectrogram& target,
                         double alpha, double c) {
  require_same_shape(v_pred, target, "adaptive_loss");
  Spectrogram delta = v_pred;
  kernels::axpy(-1.0, target.re.data(), delta.re.data(), delta.size());
  kernels::axpy(-1.0, target.im.data(), delta.im.data(), delta.size());
  const double dsq = kernels::sumsq(delta.re.data(), delta.size()) +
                     kernels::sumsq(delta.im.data(), delta.size());
  const double w = adaptive_weight(dsq, alpha, c);

  LossOutput out;
  out.weight = w;
  out.value = w * dsq;
  out.grad_wrt_prediction = std::move(delta);
  auto& g = out.grad_wrt_prediction;
  for (auto& v : g.re) v *= 2.0 * w;
  for (auto& v : g.im) v *= 2.0 * w;
  return out;
}

}  // namespace mftse
