#pragma once

// Experiment configuration: flat dotted keys in a plain-text file
// ("key = value", '#' comments). Unknown keys are rejected and every value
// is validated before any work starts. All randomness derives from the
// single root seed.

#include <cstdint>
#include <string>

#include "mftse/flow.hpp"
#include "mftse/sampler.hpp"
#include "mftse/signal.hpp"
#include "mftse/trainer.hpp"

namespace mftse {

struct ExperimentConfig {
  std::uint64_t seed = 7;

  // dataset
  int n_train = 512;
  int n_val = 64;
  int n_test = 64;
  double lambda_lo = 0.3;
  double lambda_hi = 0.7;
  double duration_s = 1.0;
  int sample_rate = 8000;
  int target_pool_size = 8;
  int background_pool_offset = 12;
  int background_pool_size = 8;
  std::string data_dir = "data";

  StftConfig stft;  // desk defaults 64/16; larger geometries selectable

  // velocity net
  int net_time_dim = 16;
  int net_hidden = 128;
  int net_hidden_layers = 3;
  bool net_frame_context = false;

  // training
  int epochs = 60;
  int batch_size = 32;
  double base_lr = 3e-3;
  double min_lr = 3e-4;
  double warmup_epochs = 5.0;
  double cosine_t_max = 50.0;
  bool cosine_restart = true;
  double weight_decay = 0.01;
  double clip_threshold = 0.5;
  int validate_every_epochs = 5;
  std::string val_lambda = "oracle";  // oracle | predicted

  // alpha curriculum (steps)
  long schedule_k_s = 0;
  long schedule_k_e = 480;
  double schedule_gamma = 25.0;
  double schedule_alpha_min = 0.005;

  // time sampling
  double time_mu = -0.4;
  double time_sigma = 1.0;
  double time_flow_ratio = 0.5;
  bool time_logit_normal = true;

  double loss_c = 1e-3;

  // MR predictor
  int mr_hidden = 64;
  int mr_epochs = 40;
  int mr_batch_size = 32;
  double mr_lr = 1e-3;

  std::string out_dir = "out";

  // derived seeds (fixed split of the root seed per purpose)
  std::uint64_t data_seed() const;
  std::uint64_t init_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t mr_seed() const;

  DatasetConfig dataset_config(int n, int split_index) const;
  NetConfig net_config() const;
  TrainConfig train_config() const;
  MrTrainConfig mr_train_config() const;

  void validate() const;  // throws std::invalid_argument
};

ExperimentConfig load_config(const std::string& path);

// One line per key: name, default, description. Backs the config-reference
// CLI subcommand.
std::string config_reference();

}  // namespace mftse
