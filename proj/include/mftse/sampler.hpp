#pragma once

// Mixture-initialized inference: one-step mean-flow extraction and the
// multi-step jump integrator used for NFE analysis. The trajectory always
// starts at the mixture spectrogram (t = lambda_hat), never at noise.

#include <functional>

#include "mftse/mr.hpp"
#include "mftse/net.hpp"
#include "mftse/signal.hpp"

namespace mftse {

enum class LambdaSource { kOracle, kPredicted, kFixed };

struct InferenceConfig {
  int nfe = 1;
  LambdaSource lambda_source = LambdaSource::kOracle;
  double fixed_lambda = 0.5;
};

// Average-velocity field over [t, r]; tests substitute stubs (e.g. the
// ground-truth direction u) for the trained network here.
using VelocityFn =
    std::function<Spectrogram(const Spectrogram& z, double t, double r)>;

VelocityFn net_velocity(const VelocityNet& net, const EnrollmentEmbedding& emb);

// S_hat = Y + (1 - lambda_hat) * v(Y, lambda_hat, 1)
Spectrogram one_step_extract(const VelocityFn& v, const Spectrogram& Y,
                             double lambda_hat);
Spectrogram one_step_extract(const VelocityNet& net, const Spectrogram& Y,
                             double lambda_hat, const EnrollmentEmbedding& emb);

// Uniform partition of [lambda_hat, 1] into nfe jump intervals; nfe=1 is
// bit-identical to one_step_extract.
Spectrogram euler_multi_step(const VelocityFn& v, const Spectrogram& Y,
                             double lambda_hat, int nfe);
Spectrogram euler_multi_step(const VelocityNet& net, const Spectrogram& Y,
                             double lambda_hat, const EnrollmentEmbedding& emb,
                             int nfe);

// Full pipeline: lambda per cfg.lambda_source (clipped in predicted mode),
// spectral extraction, istft back to the example length.
Waveform extract_waveform(const VelocityNet& net, const MRPredictor* mr,
                          const MixtureExample& example,
                          const InferenceConfig& cfg,
                          const StftConfig& stft_cfg);

double resolve_lambda(const MRPredictor* mr, const MixtureExample& example,
                      const InferenceConfig& cfg, const StftConfig& stft_cfg);

}  // namespace mftse
