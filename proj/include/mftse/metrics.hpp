#pragma once

// SI-SDR and evaluation-set aggregation.

#include <string>
#include <vector>

#include "mftse/mr.hpp"
#include "mftse/net.hpp"
#include "mftse/sampler.hpp"
#include "mftse/signal.hpp"

namespace mftse {

// Scale-invariant SDR in dB: zero-mean both signals, project est onto ref,
// 10*log10(||s_target||^2 / ||residual||^2), capped at +100 dB.
double si_sdr(const Waveform& est, const Waveform& ref);

// si_sdr(est, ref) - si_sdr(mix, ref)
double si_sdr_improvement(const Waveform& est, const Waveform& mix,
                          const Waveform& ref);

struct EvalRecord {
  std::uint64_t id = 0;
  double lambda = 0.0;
  double lambda_hat = 0.0;
  int nfe = 1;
  double si_sdr_est = 0.0;
  double si_sdr_mix = 0.0;
  bool ok = true;
  std::string error;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  double mean_si_sdr = 0.0;
  double median_si_sdr = 0.0;
  double mean_improvement = 0.0;

  void recompute_aggregates();
  void write_csv(const std::string& path) const;
};

EvalReport evaluate_set(const VelocityNet& net, const MRPredictor* mr,
                        const std::vector<MixtureExample>& dataset,
                        const InferenceConfig& cfg, const StftConfig& stft_cfg);

}  // namespace mftse
