#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "mftse/flow.hpp"
#include "mftse/kernels.hpp"
#include "mftse/rng.hpp"

using namespace mftse;

namespace {

Spectrogram random_spec(Rng& rng, std::size_t frames, std::size_t bins) {
  Spectrogram X;
  X.frames = frames;
  X.bins = bins;
  X.window_len = static_cast<int>(2 * (bins - 1));
  X.hop = X.window_len / 4;
  X.re.resize(frames * bins);
  X.im.resize(frames * bins);
  for (auto& v : X.re) v = rng.uniform(-1.0, 1.0);
  for (auto& v : X.im) v = rng.uniform(-1.0, 1.0);
  return X;
}

double max_abs_diff(const Spectrogram& a, const Spectrogram& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.re[i] - b.re[i]));
    m = std::max(m, std::abs(a.im[i] - b.im[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("interpolate endpoints and degenerate path") {
  Rng rng(1);
  const Spectrogram S = random_spec(rng, 5, 9);
  const Spectrogram B = random_spec(rng, 5, 9);
  CHECK(max_abs_diff(interpolate(S, B, 1.0), S) == 0.0);
  CHECK(max_abs_diff(interpolate(S, B, 0.0), B) == 0.0);
  CHECK(max_abs_diff(interpolate(S, S, 0.31), S) < 1e-15);

  Spectrogram small = random_spec(rng, 2, 9);
  CHECK_THROWS_AS(interpolate(S, small, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(interpolate(S, B, 1.5), std::invalid_argument);
}

TEST_CASE("path consistency: z_t + (1-t) u == S") {
  Rng rng(2);
  const Spectrogram S = random_spec(rng, 6, 17);
  const Spectrogram B = random_spec(rng, 6, 17);
  const Spectrogram u = ground_truth_velocity(S, B);
  for (double t : {0.0, 0.2, 0.55, 0.93, 1.0}) {
    Spectrogram z = interpolate(S, B, t);
    kernels::axpy(1.0 - t, u.re.data(), z.re.data(), z.size());
    kernels::axpy(1.0 - t, u.im.data(), z.im.data(), z.size());
    CHECK(max_abs_diff(z, S) < 1e-10);
  }
}

TEST_CASE("ground_truth_velocity special cases") {
  Rng rng(3);
  const Spectrogram S = random_spec(rng, 4, 5);
  Spectrogram zero = S;
  std::fill(zero.re.begin(), zero.re.end(), 0.0);
  std::fill(zero.im.begin(), zero.im.end(), 0.0);
  CHECK(max_abs_diff(ground_truth_velocity(S, S), zero) == 0.0);
  CHECK(max_abs_diff(ground_truth_velocity(S, zero), S) == 0.0);
}

TEST_CASE("sample_time_pair range and ordering") {
  Rng rng(4);
  TimeSampling cfg;
  for (int i = 0; i < 2000; ++i) {
    const TimePair tp = sample_time_pair(rng, cfg);
    CHECK(tp.t > 0.0);
    CHECK(tp.r < 1.0);
    CHECK(tp.t <= tp.r);
  }
}

TEST_CASE("flow_ratio=1 forces the t==r branch") {
  Rng rng(5);
  TimeSampling cfg;
  cfg.flow_ratio = 1.0;
  for (int i = 0; i < 200; ++i) CHECK(sample_time_pair(rng, cfg).is_flow_matching());
}

TEST_CASE("empirical t mean matches a Monte-Carlo logistic-normal oracle") {
  // oracle with an independent generator and std transforms
  std::mt19937 gen(12345);
  std::normal_distribution<double> normal(-0.4, 1.0);
  const int n = 100000;
  double oracle_sum = 0.0, oracle_sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = 1.0 / (1.0 + std::exp(-normal(gen)));
    const double b = 1.0 / (1.0 + std::exp(-normal(gen)));
    const double t = std::min(a, b);
    oracle_sum += t;
    oracle_sumsq += t * t;
  }
  const double oracle_mean = oracle_sum / n;
  const double oracle_var = oracle_sumsq / n - oracle_mean * oracle_mean;

  Rng rng(6);
  TimeSampling cfg;
  cfg.flow_ratio = 0.0;  // keep t = min of two draws
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_time_pair(rng, cfg).t;
  const double mean = sum / n;

  const double se = std::sqrt(2.0 * oracle_var / n);  // both sides are MC
  CHECK(std::abs(mean - oracle_mean) < 3.0 * se);
}

TEST_CASE("exp-then-clip sampling alternative stays in (0,1)") {
  Rng rng(7);
  TimeSampling cfg;
  cfg.logit_normal = false;
  for (int i = 0; i < 1000; ++i) {
    const TimePair tp = sample_time_pair(rng, cfg);
    CHECK(tp.t > 0.0);
    CHECK(tp.r < 1.0);
  }
}

TEST_CASE("alpha_at midpoint, floor, and monotonicity") {
  AlphaSchedule sched;
  sched.k_s = 0;
  sched.k_e = 1000;
  CHECK(alpha_at(sched, 500) == doctest::Approx(0.5).epsilon(1e-12));
  // sigma(12.5) ~ 1 - 3.73e-6, so 1 - sigma clips to the floor
  CHECK(alpha_at(sched, 1000) == sched.alpha_min);
  CHECK(alpha_at(sched, 5000) == sched.alpha_min);
  CHECK(alpha_at(sched, 0) == doctest::Approx(1.0).epsilon(1e-5));

  double prev = 2.0;
  for (long k = 0; k <= 2000; k += 10) {
    const double a = alpha_at(sched, k);
    CHECK(a <= prev);
    CHECK(a >= sched.alpha_min);
    CHECK(a <= 1.0);
    prev = a;
  }
}

TEST_CASE("tau endpoints and arithmetic") {
  CHECK(tau(0.2, 0.8, 1.0) == 0.8);
  CHECK(tau(0.2, 0.8, 0.0) == 0.2);
  CHECK(tau(0.2, 0.8, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("alpha_target interpolation") {
  Rng rng(8);
  const Spectrogram u = random_spec(rng, 3, 7);
  const Spectrogram v = random_spec(rng, 3, 7);
  CHECK(max_abs_diff(alpha_target(u, v, 1.0), u) == 0.0);
  CHECK(max_abs_diff(alpha_target(u, v, 0.0), v) == 0.0);
  CHECK(max_abs_diff(alpha_target(u, u, 0.42), u) < 1e-15);
}

TEST_CASE("adaptive_weight arithmetic and monotonicity") {
  CHECK(adaptive_weight(0.0, 0.5, 1e-3) == doctest::Approx(500.0));
  CHECK(adaptive_weight(0.999, 0.5, 1e-3) == doctest::Approx(0.5));
  double prev = 1e300;
  for (double d : {0.0, 0.1, 1.0, 10.0}) {
    const double w = adaptive_weight(d, 0.3, 1e-3);
    CHECK(w < prev);
    CHECK(w > 0.0);
    prev = w;
  }
}

TEST_CASE("adaptive_loss zero error and limiting FM case") {
  Rng rng(9);
  const Spectrogram x = random_spec(rng, 3, 5);
  const LossOutput zero = adaptive_loss(x, x, 0.7, 1e-3);
  CHECK(zero.value == 0.0);
  for (double g : zero.grad_wrt_prediction.re) CHECK(g == 0.0);
  for (double g : zero.grad_wrt_prediction.im) CHECK(g == 0.0);

  // alpha=1, huge c: weight ~ 1/c, gradient reduces to (2/c) * delta
  const Spectrogram target = random_spec(rng, 3, 5);
  const double c = 1e12;
  const LossOutput l = adaptive_loss(x, target, 1.0, c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(l.grad_wrt_prediction.re[i] ==
          doctest::Approx((2.0 / c) * (x.re[i] - target.re[i])).epsilon(1e-9));
    CHECK(l.grad_wrt_prediction.im[i] ==
          doctest::Approx((2.0 / c) * (x.im[i] - target.im[i])).epsilon(1e-9));
  }
}

TEST_CASE("adaptive_loss gradient matches finite differences under frozen weight") {
  Rng rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t frames = 2 + rng.below(3);
    const std::size_t bins = 3 + rng.below(4);
    Spectrogram pred = random_spec(rng, frames, bins);
    const Spectrogram target = random_spec(rng, frames, bins);
    const double alpha = rng.uniform(0.1, 1.0);
    const double c = 1e-3;

    const LossOutput base = adaptive_loss(pred, target, alpha, c);
    const double w = base.weight;  // frozen

    auto frozen_value = [&](const Spectrogram& p) {
      double d = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        d += (p.re[i] - target.re[i]) * (p.re[i] - target.re[i]);
        d += (p.im[i] - target.im[i]) * (p.im[i] - target.im[i]);
      }
      return w * d;
    };

    const double eps = 1e-6;
    for (int probe = 0; probe < 5; ++probe) {
      const std::size_t i = rng.below(pred.size());
      const bool real_plane = rng.uniform() < 0.5;
      auto& plane = real_plane ? pred.re : pred.im;
      const double saved = plane[i];
      plane[i] = saved + eps;
      const double lp = frozen_value(pred);
      plane[i] = saved - eps;
      const double lm = frozen_value(pred);
      plane[i] = saved;
      const double fd = (lp - lm) / (2.0 * eps);
      const double analytic = real_plane ? base.grad_wrt_prediction.re[i]
                                         : base.grad_wrt_prediction.im[i];
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-10});
      CHECK(std::abs(fd - analytic) / denom < 1e-5);
    }
  }
}
