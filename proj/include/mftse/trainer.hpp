#pragma once

// Training loops: curriculum-scheduled velocity-network training with
// AdamW, warmup+cosine learning rate, global-norm clipping, validation
// checkpoint selection; plus the separately trained MR predictor.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mftse/flow.hpp"
#include "mftse/mr.hpp"
#include "mftse/net.hpp"
#include "mftse/optim.hpp"
#include "mftse/sampler.hpp"
#include "mftse/signal.hpp"

namespace mftse {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 32;
  LrSchedule lr;          // defaults: 1e-4 -> 1e-5, warmup 5, T_max 50
  AdamWConfig adamw;      // weight decay 0.01
  double clip_threshold = 0.5;
  std::uint64_t seed = 0;
  AlphaSchedule schedule;  // k_s/k_e in optimizer steps
  TimeSampling time_sampling;
  double c = 1e-3;         // adaptive weight floor
  StftConfig stft;
  int validate_every_epochs = 5;
  LambdaSource val_lambda_source = LambdaSource::kOracle;
  std::string checkpoint_path;       // best checkpoint; empty = no persistence
  std::string last_checkpoint_path;  // rolling checkpoint for resume
  std::string state_path;            // optimizer/counter state for resume
  std::string log_path;              // append-only CSV; empty = no log
};

struct TrainState {
  long k = 0;  // optimizer updates so far
  int epoch = 0;
  AdamWState opt;
  double best_val_si_sdr = 0.0;
  bool has_best = false;

  void save(const std::string& path) const;
  static TrainState load(const std::string& path);
};

// Spectrograms and embeddings precomputed once per dataset.
struct PreparedExample {
  std::uint64_t id = 0;
  double lambda = 0.0;
  Spectrogram S, B, Y, u;
  EnrollmentEmbedding emb;
};

std::vector<PreparedExample> prepare_examples(
    const std::vector<MixtureExample>& dataset, const StftConfig& stft_cfg);

struct StepInfo {
  double loss = 0.0;
  double grad_norm = 0.0;  // pre-clip
  double alpha = 0.0;
  double lr = 0.0;
  int fm_count = 0;  // examples that took the t==r branch
  int mf_count = 0;
};

// One optimizer update over a batch. Throws on non-finite loss/gradients
// before mutating the parameters.
StepInfo train_step(VelocityNet& net, TrainState& state,
                    const std::vector<const PreparedExample*>& batch,
                    const TrainConfig& cfg, Rng& time_rng, double lr);

struct TrainSummary {
  long steps = 0;
  double final_loss = 0.0;
  double best_val_si_sdr = 0.0;
  bool has_best = false;
};

// Full loop with deterministic per-epoch RNG streams; resumes from *state
// when state->epoch > 0.
TrainSummary train_velocity_net(VelocityNet& net,
                                const std::vector<MixtureExample>& train_set,
                                const std::vector<MixtureExample>& val_set,
                                const TrainConfig& cfg,
                                TrainState* state = nullptr);

// Validation at NFE=1; persists the checkpoint when improved. Returns the
// mean SI-SDR.
double validate_and_select(TrainState& state, const VelocityNet& net,
                           const std::vector<MixtureExample>& val_set,
                           const TrainConfig& cfg);

struct MrTrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double lr = 1e-3;
  AdamWConfig adamw{.weight_decay = 0.0};
  std::uint64_t seed = 0;
  StftConfig stft;
  std::string checkpoint_path;
};

struct MrTrainSummary {
  std::vector<double> val_mse_history;  // per epoch
  double final_val_mse = 0.0;
  double final_val_mae = 0.0;
  bool monotone_first_5 = true;
};

MrTrainSummary train_mr_predictor(MRPredictor& mr,
                                  const std::vector<MixtureExample>& train_set,
                                  const std::vector<MixtureExample>& val_set,
                                  const MrTrainConfig& cfg);

}  // namespace mftse
