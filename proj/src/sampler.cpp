#include "mftse/sampler.hpp"

#include <stdexcept>

#include "mftse/kernels.hpp"

namespace mftse {

VelocityFn net_velocity(const VelocityNet& net, const EnrollmentEmbedding& emb) {
  return [&net, emb](const Spectrogram& z, double t, double r) {
    return net.forward(z, t, r, emb);
  };
}

Spectrogram euler_multi_step(const VelocityFn& v, const Spectrogram& Y,
                             double lambda_hat, int nfe) {
  if (nfe < 1) throw std::invalid_argument("euler_multi_step: nfe must be >= 1");
  if (!(lambda_hat >= 0.0 && lambda_hat < 1.0))
    throw std::invalid_argument("euler_multi_step: lambda_hat out of [0,1)");

  Spectrogram z = Y;
  for (int i = 0; i < nfe; ++i) {
    const double t0 = lambda_hat + (1.0 - lambda_hat) * i / nfe;
    const double t1 = lambda_hat + (1.0 - lambda_hat) * (i + 1) / nfe;
    const Spectrogram vel = v(z, t0, t1);
    if (!vel.same_shape(z))
      throw std::invalid_argument("euler_multi_step: velocity shape mismatch");
    kernels::axpy(t1 - t0, vel.re.data(), z.re.data(), z.size());
    kernels::axpy(t1 - t0, vel.im.data(), z.im.data(), z.size());
  }
  return z;
}

Spectrogram one_step_extract(const VelocityFn& v, const Spectrogram& Y,
                             double lambda_hat) {
  return euler_multi_step(v, Y, lambda_hat, 1);
}

Spectrogram one_step_extract(const VelocityNet& net, const Spectrogram& Y,
                             double lambda_hat, const EnrollmentEmbedding& emb) {
  return one_step_extract(net_velocity(net, emb), Y, lambda_hat);
}

Spectrogram euler_multi_step(const VelocityNet& net, const Spectrogram& Y,
                             double lambda_hat, const EnrollmentEmbedding& emb,
                             int nfe) {
  return euler_multi_step(net_velocity(net, emb), Y, lambda_hat, nfe);
}

double resolve_lambda(const MRPredictor* mr, const MixtureExample& example,
                      const InferenceConfig& cfg, const StftConfig& stft_cfg) {
  switch (cfg.lambda_source) {
    case LambdaSource::kOracle:
      return example.lambda;
    case LambdaSource::kPredicted:
      if (!mr) throw std::invalid_argument("predicted lambda requires an MR predictor");
      return clip_lambda(mr->predict(example.y, example.e, stft_cfg));
    case LambdaSource::kFixed:
      return cfg.fixed_lambda;
  }
  throw std::logic_error("unreachable");
}

Waveform extract_waveform(const VelocityNet& net, const MRPredictor* mr,
                          const MixtureExample& example,
                          const InferenceConfig& cfg,
                          const StftConfig& stft_cfg) {
  const double lambda_hat = resolve_lambda(mr, example, cfg, stft_cfg);
  const Spectrogram Y = stft(example.y, stft_cfg.window_len, stft_cfg.hop);
  const EnrollmentEmbedding emb = embed_enrollment(example.e, stft_cfg);
  Spectrogram S_hat;
  if (lambda_hat >= 1.0) {
    S_hat = Y;  // zero-length jump
  } else {
    S_hat = euler_multi_step(net, Y, lambda_hat, emb, cfg.nfe);
  }
  return istft(S_hat, example.y.length(), example.y.sample_rate);
}

}  // namespace mftse
