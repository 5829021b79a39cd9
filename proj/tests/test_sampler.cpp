#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mftse/flow.hpp"
#include "mftse/metrics.hpp"
#include "mftse/rng.hpp"
#include "mftse/sampler.hpp"
#include "mftse/signal.hpp"

using namespace mftse;

namespace {

MixtureExample make_example(std::uint64_t seed, double lambda) {
  MixtureExample ex;
  ex.lambda = lambda;
  ex.s = synth_source(0, 1.0, 8000, Rng::derive(seed, 1));
  ex.b = synth_source(14, 1.0, 8000, Rng::derive(seed, 2));
  ex.e = synth_source(0, 1.0, 8000, Rng::derive(seed, 3));
  ex.y = mix(ex.s, ex.b, lambda);
  return ex;
}

double max_abs_diff(const Spectrogram& a, const Spectrogram& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.re[i] - b.re[i]));
    m = std::max(m, std::abs(a.im[i] - b.im[i]));
  }
  return m;
}

double max_mag(const Spectrogram& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max({m, std::abs(a.re[i]), std::abs(a.im[i])});
  return m;
}

}  // namespace

TEST_CASE("ground-truth-velocity stub with oracle lambda recovers S exactly") {
  const MixtureExample ex = make_example(3, 0.42);
  const Spectrogram S = stft(ex.s, 64, 16);
  const Spectrogram B = stft(ex.b, 64, 16);
  const Spectrogram Y = stft(ex.y, 64, 16);
  const Spectrogram u = ground_truth_velocity(S, B);

  const VelocityFn stub = [&](const Spectrogram&, double, double) { return u; };

  for (int nfe : {1, 2, 4, 8}) {
    const Spectrogram S_hat = euler_multi_step(stub, Y, ex.lambda, nfe);
    CHECK(max_abs_diff(S_hat, S) <= 1e-12 * max_mag(S));
  }
}

TEST_CASE("nfe=1 is bit-identical to one_step_extract") {
  const MixtureExample ex = make_example(4, 0.6);
  const Spectrogram Y = stft(ex.y, 64, 16);
  const Spectrogram S = stft(ex.s, 64, 16);
  const Spectrogram B = stft(ex.b, 64, 16);
  const Spectrogram u = ground_truth_velocity(S, B);
  const VelocityFn stub = [&](const Spectrogram&, double, double) { return u; };

  const Spectrogram a = one_step_extract(stub, Y, ex.lambda);
  const Spectrogram b = euler_multi_step(stub, Y, ex.lambda, 1);
  CHECK(a.re == b.re);
  CHECK(a.im == b.im);
}

TEST_CASE("zero-init network leaves the mixture unchanged") {
  Rng rng(5);
  NetConfig cfg;
  cfg.bins = 33;
  cfg.emb_dim = 66;
  VelocityNet net(cfg, rng);  // zero head
  const MixtureExample ex = make_example(6, 0.5);
  const Spectrogram Y = stft(ex.y, 64, 16);
  const EnrollmentEmbedding emb = embed_enrollment(ex.e, StftConfig{});
  const Spectrogram S_hat = one_step_extract(net, Y, ex.lambda, emb);
  CHECK(S_hat.re == Y.re);
  CHECK(S_hat.im == Y.im);
}

TEST_CASE("lambda near 1 gives a vanishing jump") {
  const MixtureExample ex = make_example(7, 0.3);
  const Spectrogram Y = stft(ex.y, 64, 16);
  const Spectrogram big = [&] {
    Spectrogram u = Y;
    for (auto& v : u.re) v = 10.0;
    for (auto& v : u.im) v = -10.0;
    return u;
  }();
  const VelocityFn stub = [&](const Spectrogram&, double, double) { return big; };
  const Spectrogram S_hat = one_step_extract(stub, Y, 1.0 - 1e-9);
  CHECK(max_abs_diff(S_hat, Y) < 1e-7);

  CHECK_THROWS_AS(one_step_extract(stub, Y, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(euler_multi_step(stub, Y, 0.5, 0), std::invalid_argument);
}

TEST_CASE("extract_waveform with stub exactness and determinism") {
  // full pipeline check via the trained-network interface would need a real
  // model; the zero-init net reproduces the mixture through the round trip
  Rng rng(8);
  NetConfig cfg;
  cfg.bins = 33;
  cfg.emb_dim = 66;
  VelocityNet net(cfg, rng);
  const MixtureExample ex = make_example(9, 0.55);

  InferenceConfig icfg;
  icfg.lambda_source = LambdaSource::kOracle;
  const Waveform out1 = extract_waveform(net, nullptr, ex, icfg, StftConfig{});
  const Waveform out2 = extract_waveform(net, nullptr, ex, icfg, StftConfig{});
  CHECK(out1.samples == out2.samples);
  // zero-velocity network: output is the istft round trip of the mixture
  CHECK(si_sdr(out1, ex.y) > 60.0);

  InferenceConfig fixed1;
  fixed1.lambda_source = LambdaSource::kFixed;
  fixed1.fixed_lambda = 1.0;
  const Waveform out3 = extract_waveform(net, nullptr, ex, fixed1, StftConfig{});
  CHECK(si_sdr(out3, ex.y) > 60.0);
}

TEST_CASE("predicted lambda requires an MR predictor") {
  Rng rng(10);
  NetConfig cfg;
  cfg.bins = 33;
  cfg.emb_dim = 66;
  VelocityNet net(cfg, rng);
  const MixtureExample ex = make_example(11, 0.5);
  InferenceConfig icfg;
  icfg.lambda_source = LambdaSource::kPredicted;
  CHECK_THROWS_AS(extract_waveform(net, nullptr, ex, icfg, StftConfig{}),
                  std::invalid_argument);
}
