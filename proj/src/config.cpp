#include "mftse/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mftse {

namespace {

struct KeyEntry {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::string desc;
};

long to_long(const std::string& v) {
  std::size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
  return x;
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("not a bool: " + v);
}

const std::map<std::string, KeyEntry>& key_table() {
  static const std::map<std::string, KeyEntry> table = {
      {"seed", {[](auto& c, const auto& v) { c.seed = static_cast<std::uint64_t>(to_long(v)); },
                "root seed; all randomness derives from it"}},
      {"data.n_train", {[](auto& c, const auto& v) { c.n_train = static_cast<int>(to_long(v)); },
                        "training examples"}},
      {"data.n_val", {[](auto& c, const auto& v) { c.n_val = static_cast<int>(to_long(v)); },
                      "validation examples"}},
      {"data.n_test", {[](auto& c, const auto& v) { c.n_test = static_cast<int>(to_long(v)); },
                       "test examples"}},
      {"data.lambda_lo", {[](auto& c, const auto& v) { c.lambda_lo = to_double(v); },
                          "lower bound of the mixing-ratio range (stand-in default 0.3)"}},
      {"data.lambda_hi", {[](auto& c, const auto& v) { c.lambda_hi = to_double(v); },
                          "upper bound of the mixing-ratio range (stand-in default 0.7)"}},
      {"data.duration_s", {[](auto& c, const auto& v) { c.duration_s = to_double(v); },
                           "clip duration in seconds"}},
      {"data.sample_rate", {[](auto& c, const auto& v) { c.sample_rate = static_cast<int>(to_long(v)); },
                            "sample rate in Hz"}},
      {"data.target_pool_size", {[](auto& c, const auto& v) { c.target_pool_size = static_cast<int>(to_long(v)); },
                                 "number of target source identities"}},
      {"data.background_pool_offset", {[](auto& c, const auto& v) { c.background_pool_offset = static_cast<int>(to_long(v)); },
                                       "first background source id"}},
      {"data.background_pool_size", {[](auto& c, const auto& v) { c.background_pool_size = static_cast<int>(to_long(v)); },
                                     "number of background source identities"}},
      {"data.dir", {[](auto& c, const auto& v) { c.data_dir = v; }, "dataset directory"}},
      {"stft.window_len", {[](auto& c, const auto& v) { c.stft.window_len = static_cast<int>(to_long(v)); },
                           "STFT window length in samples (desk default 64)"}},
      {"stft.hop", {[](auto& c, const auto& v) { c.stft.hop = static_cast<int>(to_long(v)); },
                    "STFT hop in samples (desk default 16)"}},
      {"net.time_dim", {[](auto& c, const auto& v) { c.net_time_dim = static_cast<int>(to_long(v)); },
                        "sinusoidal time-embedding size (even)"}},
      {"net.hidden", {[](auto& c, const auto& v) { c.net_hidden = static_cast<int>(to_long(v)); },
                      "hidden units per layer"}},
      {"net.hidden_layers", {[](auto& c, const auto& v) { c.net_hidden_layers = static_cast<int>(to_long(v)); },
                             "number of hidden layers"}},
      {"net.frame_context", {[](auto& c, const auto& v) { c.net_frame_context = to_bool(v); },
                             "concatenate +/-1 neighboring frames"}},
      {"train.epochs", {[](auto& c, const auto& v) { c.epochs = static_cast<int>(to_long(v)); },
                        "training epochs"}},
      {"train.batch_size", {[](auto& c, const auto& v) { c.batch_size = static_cast<int>(to_long(v)); },
                            "batch size"}},
      {"train.base_lr", {[](auto& c, const auto& v) { c.base_lr = to_double(v); },
                         "peak learning rate after warmup"}},
      {"train.min_lr", {[](auto& c, const auto& v) { c.min_lr = to_double(v); },
                        "cosine trough learning rate"}},
      {"train.warmup_epochs", {[](auto& c, const auto& v) { c.warmup_epochs = to_double(v); },
                               "linear warmup span in epochs"}},
      {"train.cosine_t_max", {[](auto& c, const auto& v) { c.cosine_t_max = to_double(v); },
                              "cosine period in epochs"}},
      {"train.cosine_restart", {[](auto& c, const auto& v) { c.cosine_restart = to_bool(v); },
                                "restart the cosine after each period (else clamp at min)"}},
      {"train.weight_decay", {[](auto& c, const auto& v) { c.weight_decay = to_double(v); },
                              "decoupled AdamW weight decay"}},
      {"train.clip_threshold", {[](auto& c, const auto& v) { c.clip_threshold = to_double(v); },
                                "global gradient-norm clip threshold"}},
      {"train.validate_every_epochs", {[](auto& c, const auto& v) { c.validate_every_epochs = static_cast<int>(to_long(v)); },
                                       "validation cadence"}},
      {"train.val_lambda", {[](auto& c, const auto& v) { c.val_lambda = v; },
                            "lambda source during validation: oracle | predicted"}},
      {"schedule.k_s", {[](auto& c, const auto& v) { c.schedule_k_s = to_long(v); },
                        "curriculum transition start step"}},
      {"schedule.k_e", {[](auto& c, const auto& v) { c.schedule_k_e = to_long(v); },
                        "curriculum transition end step"}},
      {"schedule.gamma", {[](auto& c, const auto& v) { c.schedule_gamma = to_double(v); },
                          "curriculum sigmoid steepness"}},
      {"schedule.alpha_min", {[](auto& c, const auto& v) { c.schedule_alpha_min = to_double(v); },
                              "curriculum floor"}},
      {"time.mu", {[](auto& c, const auto& v) { c.time_mu = to_double(v); },
                   "time-sampling normal mean"}},
      {"time.sigma", {[](auto& c, const auto& v) { c.time_sigma = to_double(v); },
                      "time-sampling normal stddev"}},
      {"time.flow_ratio", {[](auto& c, const auto& v) { c.time_flow_ratio = to_double(v); },
                           "fraction of samples forced onto the t==r branch"}},
      {"time.logit_normal", {[](auto& c, const auto& v) { c.time_logit_normal = to_bool(v); },
                             "true: logistic-transformed normal; false: exp(normal) clipped"}},
      {"loss.c", {[](auto& c, const auto& v) { c.loss_c = to_double(v); },
                  "adaptive-weight denominator floor"}},
      {"mr.hidden", {[](auto& c, const auto& v) { c.mr_hidden = static_cast<int>(to_long(v)); },
                     "MR predictor hidden units"}},
      {"mr.epochs", {[](auto& c, const auto& v) { c.mr_epochs = static_cast<int>(to_long(v)); },
                     "MR predictor training epochs"}},
      {"mr.batch_size", {[](auto& c, const auto& v) { c.mr_batch_size = static_cast<int>(to_long(v)); },
                         "MR predictor batch size"}},
      {"mr.lr", {[](auto& c, const auto& v) { c.mr_lr = to_double(v); },
                 "MR predictor learning rate"}},
      {"out.dir", {[](auto& c, const auto& v) { c.out_dir = v; },
                   "directory for checkpoints, logs, and reports"}},
  };
  return table;
}

}  // namespace

std::uint64_t ExperimentConfig::data_seed() const { return Rng::derive(seed, 1); }
std::uint64_t ExperimentConfig::init_seed() const { return Rng::derive(seed, 2); }
std::uint64_t ExperimentConfig::train_seed() const { return Rng::derive(seed, 3); }
std::uint64_t ExperimentConfig::mr_seed() const { return Rng::derive(seed, 4); }

DatasetConfig ExperimentConfig::dataset_config(int n, int split_index) const {
  DatasetConfig d;
  d.n = n;
  d.lambda_lo = lambda_lo;
  d.lambda_hi = lambda_hi;
  d.duration_s = duration_s;
  d.sample_rate = sample_rate;
  d.seed = Rng::derive(data_seed(), static_cast<std::uint64_t>(split_index));
  d.target_pool_size = target_pool_size;
  d.background_pool_offset = background_pool_offset;
  d.background_pool_size = background_pool_size;
  return d;
}

NetConfig ExperimentConfig::net_config() const {
  NetConfig n;
  n.bins = static_cast<std::size_t>(stft.window_len / 2 + 1);
  n.time_dim = net_time_dim;
  n.hidden = net_hidden;
  n.hidden_layers = net_hidden_layers;
  n.emb_dim = static_cast<int>(2 * n.bins);
  n.frame_context = net_frame_context;
  return n;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr = {base_lr, min_lr, warmup_epochs, cosine_t_max, cosine_restart};
  t.adamw.weight_decay = weight_decay;
  t.clip_threshold = clip_threshold;
  t.seed = train_seed();
  t.schedule = {schedule_k_s, schedule_k_e, schedule_gamma, schedule_alpha_min};
  t.time_sampling = {time_mu, time_sigma, time_flow_ratio, time_logit_normal};
  t.c = loss_c;
  t.stft = stft;
  t.validate_every_epochs = validate_every_epochs;
  t.val_lambda_source = (val_lambda == "predicted") ? LambdaSource::kPredicted
                                                    : LambdaSource::kOracle;
  t.checkpoint_path = out_dir + "/velocity_best.ckpt";
  t.last_checkpoint_path = out_dir + "/velocity_last.ckpt";
  t.state_path = out_dir + "/train_state.bin";
  t.log_path = out_dir + "/train_log.csv";
  return t;
}

MrTrainConfig ExperimentConfig::mr_train_config() const {
  MrTrainConfig m;
  m.epochs = mr_epochs;
  m.batch_size = mr_batch_size;
  m.lr = mr_lr;
  m.seed = mr_seed();
  m.stft = stft;
  m.checkpoint_path = out_dir + "/mr_best.ckpt";
  return m;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (n_train <= 0 || n_val <= 0 || n_test <= 0) fail("split sizes must be positive");
  if (!(0.0 <= lambda_lo && lambda_lo <= lambda_hi && lambda_hi <= 1.0))
    fail("require 0 <= data.lambda_lo <= data.lambda_hi <= 1");
  if (duration_s <= 0.0) fail("data.duration_s must be > 0");
  if (sample_rate <= 0) fail("data.sample_rate must be > 0");
  if (target_pool_size <= 0 || background_pool_size <= 0) fail("pool sizes must be positive");
  if (background_pool_offset < target_pool_size)
    fail("background pool overlaps the target pool");
  if (stft.window_len <= 0 || stft.hop <= 0 || stft.hop > stft.window_len)
    fail("require 0 < stft.hop <= stft.window_len");
  if (stft.window_len > duration_s * sample_rate) fail("stft.window_len longer than a clip");
  if (net_time_dim <= 0 || net_time_dim % 2 != 0) fail("net.time_dim must be positive and even");
  if (net_hidden <= 0 || net_hidden_layers <= 0) fail("net sizes must be positive");
  if (epochs <= 0 || batch_size <= 0) fail("train.epochs and train.batch_size must be positive");
  if (!(base_lr > 0.0) || !(min_lr > 0.0) || min_lr > base_lr)
    fail("require 0 < train.min_lr <= train.base_lr");
  if (warmup_epochs < 0.0 || !(cosine_t_max > 0.0)) fail("bad warmup/cosine span");
  if (weight_decay < 0.0) fail("train.weight_decay must be >= 0");
  if (!(clip_threshold > 0.0)) fail("train.clip_threshold must be > 0");
  if (validate_every_epochs <= 0) fail("train.validate_every_epochs must be positive");
  if (val_lambda != "oracle" && val_lambda != "predicted")
    fail("train.val_lambda must be oracle or predicted");
  if (schedule_k_s >= schedule_k_e) fail("require schedule.k_s < schedule.k_e");
  if (!(schedule_gamma > 0.0)) fail("schedule.gamma must be > 0");
  if (!(schedule_alpha_min > 0.0 && schedule_alpha_min <= 1.0))
    fail("schedule.alpha_min must be in (0, 1]");
  if (!(time_sigma > 0.0)) fail("time.sigma must be > 0");
  if (!(time_flow_ratio >= 0.0 && time_flow_ratio <= 1.0))
    fail("time.flow_ratio must be in [0, 1]");
  if (!(loss_c > 0.0)) fail("loss.c must be > 0");
  if (mr_hidden <= 0 || mr_epochs <= 0 || mr_batch_size <= 0 || !(mr_lr > 0.0))
    fail("bad mr.* settings");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config: " + path);
  ExperimentConfig cfg;
  const auto& table = key_table();
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + " (" +
                                  key + "): " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

std::string config_reference() {
  std::ostringstream out;
  out << "Configuration keys (flat dotted names, 'key = value' lines, '#' comments):\n\n";
  for (const auto& [key, entry] : key_table())
    out << "  " << key << "\n      " << entry.desc << "\n";
  return out.str();
}

}  // namespace mftse
