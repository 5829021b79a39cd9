// Command-line entry point wiring the modules into reproducible
// experiments. Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mftse/config.hpp"
#include "mftse/metrics.hpp"
#include "mftse/mr.hpp"
#include "mftse/net.hpp"
#include "mftse/sampler.hpp"
#include "mftse/signal.hpp"
#include "mftse/trainer.hpp"

namespace {

using namespace mftse;

InferenceConfig parse_lambda_flag(const std::string& flag, int nfe) {
  InferenceConfig cfg;
  cfg.nfe = nfe;
  if (flag == "oracle") {
    cfg.lambda_source = LambdaSource::kOracle;
  } else if (flag == "predicted") {
    cfg.lambda_source = LambdaSource::kPredicted;
  } else if (flag.rfind("fixed:", 0) == 0) {
    cfg.lambda_source = LambdaSource::kFixed;
    cfg.fixed_lambda = std::stod(flag.substr(6));
    if (!(cfg.fixed_lambda >= 0.0 && cfg.fixed_lambda <= 1.0))
      throw std::invalid_argument("--lambda fixed value out of [0,1]");
  } else {
    throw std::invalid_argument("--lambda must be oracle, predicted, or fixed:<v>");
  }
  return cfg;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_override) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::string dir = out_override.empty() ? cfg.data_dir : out_override;
  const struct { const char* name; int n; int index; } splits[] = {
      {"train", cfg.n_train, 0}, {"val", cfg.n_val, 1}, {"test", cfg.n_test, 2}};
  for (const auto& sp : splits) {
    const auto ds = gen_dataset(cfg.dataset_config(sp.n, sp.index));
    save_split(ds, dir + "/" + sp.name, cfg.sample_rate);
    std::printf("wrote %d examples to %s/%s\n", sp.n, dir.c_str(), sp.name);
  }
  return 0;
}

int cmd_train(const std::string& config_path, bool resume) {
  const ExperimentConfig cfg = load_config(config_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto train_set = load_split(cfg.data_dir + "/train", cfg.sample_rate);
  const auto val_set = load_split(cfg.data_dir + "/val", cfg.sample_rate);
  const TrainConfig tcfg = cfg.train_config();

  TrainState state;
  VelocityNet net = [&] {
    if (resume) {
      std::printf("resuming from %s\n", tcfg.last_checkpoint_path.c_str());
      state = TrainState::load(tcfg.state_path);
      return VelocityNet::load(tcfg.last_checkpoint_path);
    }
    Rng init_rng(cfg.init_seed());
    return VelocityNet(cfg.net_config(), init_rng);
  }();

  const auto t0 = std::chrono::steady_clock::now();
  TrainSummary summary;
  try {
    summary = train_velocity_net(net, train_set, val_set, tcfg, &state);
  } catch (const std::exception& e) {
    // diagnostic dump for non-finite loss aborts
    const std::string dump = cfg.out_dir + "/abort_dump.txt";
    std::ofstream d(dump);
    d << "error: " << e.what() << "\nstep k=" << state.k
      << " epoch=" << state.epoch << "\n";
    std::fprintf(stderr, "training aborted: %s (state dumped to %s)\n", e.what(),
                 dump.c_str());
    return 2;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("trained %ld steps in %.1f s; final loss %.6g\n", summary.steps,
              secs, summary.final_loss);
  std::printf("best validation SI-SDR: %.4f dB (checkpoint %s)\n",
              summary.best_val_si_sdr, tcfg.checkpoint_path.c_str());
  return 0;
}

int cmd_train_mr(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto train_set = load_split(cfg.data_dir + "/train", cfg.sample_rate);
  const auto val_set = load_split(cfg.data_dir + "/val", cfg.sample_rate);
  const MrTrainConfig mcfg = cfg.mr_train_config();

  Rng init_rng(Rng::derive(cfg.mr_seed(), 0xa11));
  MRPredictor mr(mr_feature_dim(cfg.stft), cfg.mr_hidden, init_rng);
  const MrTrainSummary summary = train_mr_predictor(mr, train_set, val_set, mcfg);

  std::ofstream log(cfg.out_dir + "/mr_log.csv");
  log << "epoch,val_mse\n";
  for (std::size_t i = 0; i < summary.val_mse_history.size(); ++i)
    log << i << "," << summary.val_mse_history[i] << "\n";

  std::printf("held-out MSE %.6g, MAE %.6g (checkpoint %s)\n",
              summary.final_val_mse, summary.final_val_mae,
              mcfg.checkpoint_path.c_str());
  if (!summary.monotone_first_5)
    std::fprintf(stderr,
                 "warning: held-out MSE not monotone over the first 5 epochs\n");
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             int nfe, const std::string& lambda_flag,
             const std::string& mr_checkpoint, const std::string& split,
             bool write_wavs) {
  const ExperimentConfig cfg = load_config(config_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto dataset = load_split(cfg.data_dir + "/" + split, cfg.sample_rate);
  const VelocityNet net = VelocityNet::load(checkpoint);
  const InferenceConfig icfg = parse_lambda_flag(lambda_flag, nfe);

  std::optional<MRPredictor> mr;
  if (icfg.lambda_source == LambdaSource::kPredicted) {
    const std::string path =
        mr_checkpoint.empty() ? cfg.out_dir + "/mr_best.ckpt" : mr_checkpoint;
    mr = MRPredictor::load(path);
  }

  const EvalReport report =
      evaluate_set(net, mr ? &*mr : nullptr, dataset, icfg, cfg.stft);
  char name[128];
  std::snprintf(name, sizeof(name), "/eval_%s_nfe%d.csv", split.c_str(), nfe);
  const std::string report_path = cfg.out_dir + name;
  report.write_csv(report_path);

  if (write_wavs) {
    const std::string wav_dir = cfg.out_dir + "/extracted_" + split;
    std::filesystem::create_directories(wav_dir);
    for (const auto& ex : dataset) {
      const Waveform est = extract_waveform(net, mr ? &*mr : nullptr, ex, icfg, cfg.stft);
      char fn[64];
      std::snprintf(fn, sizeof(fn), "/%06llu_est.f32",
                    static_cast<unsigned long long>(ex.id));
      write_f32(wav_dir + fn, est.samples);
    }
    std::printf("extracted waveforms in %s\n", wav_dir.c_str());
  }

  std::printf("%zu examples | mean SI-SDR %.4f dB | median %.4f dB | mean SI-SDRi %.4f dB\n",
              report.records.size(), report.mean_si_sdr, report.median_si_sdr,
              report.mean_improvement);
  std::printf("report: %s\n", report_path.c_str());
  return 0;
}

int cmd_nfe_sweep(const std::string& config_path, const std::string& checkpoint,
                  const std::string& nfe_list, const std::string& lambda_flag,
                  const std::string& mr_checkpoint, const std::string& split) {
  const ExperimentConfig cfg = load_config(config_path);
  std::filesystem::create_directories(cfg.out_dir);
  const auto dataset = load_split(cfg.data_dir + "/" + split, cfg.sample_rate);
  const VelocityNet net = VelocityNet::load(checkpoint);

  std::vector<int> nfes;
  {
    std::stringstream ss(nfe_list);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) nfes.push_back(std::stoi(tok));
    if (nfes.empty()) throw std::invalid_argument("--nfe-list is empty");
    for (int n : nfes)
      if (n < 1) throw std::invalid_argument("--nfe-list entries must be >= 1");
  }

  std::optional<MRPredictor> mr;
  if (lambda_flag == "predicted") {
    const std::string path =
        mr_checkpoint.empty() ? cfg.out_dir + "/mr_best.ckpt" : mr_checkpoint;
    mr = MRPredictor::load(path);
  }

  const std::string sweep_path = cfg.out_dir + "/nfe_sweep.csv";
  std::ofstream sweep(sweep_path);
  sweep << "nfe,mean_si_sdr,mean_improvement\n";
  for (int nfe : nfes) {
    const InferenceConfig icfg = parse_lambda_flag(lambda_flag, nfe);
    const EvalReport report =
        evaluate_set(net, mr ? &*mr : nullptr, dataset, icfg, cfg.stft);
    char name[128];
    std::snprintf(name, sizeof(name), "/eval_%s_nfe%d.csv", split.c_str(), nfe);
    report.write_csv(cfg.out_dir + name);
    sweep << nfe << "," << report.mean_si_sdr << "," << report.mean_improvement
          << "\n";
    std::printf("nfe=%d mean SI-SDR %.4f dB\n", nfe, report.mean_si_sdr);
  }
  std::printf("sweep: %s\n", sweep_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MeanFlow one-step target-source extraction experiments"};
  app.require_subcommand(1);

  std::string config_path, out_override, checkpoint, mr_checkpoint;
  std::string lambda_flag = "oracle", split = "test", nfe_list = "1,2,4,8,16";
  int nfe = 1;
  bool resume = false, write_wavs = false;

  auto* gen = app.add_subcommand("gen-data", "generate train/val/test splits");
  gen->add_option("config", config_path)->required();
  gen->add_option("--out", out_override, "override data directory");

  auto* train = app.add_subcommand("train", "train the velocity network");
  train->add_option("config", config_path)->required();
  train->add_flag("--resume", resume, "resume from the last checkpoint");

  auto* train_mr = app.add_subcommand("train-mr", "train the mixing-ratio predictor");
  train_mr->add_option("config", config_path)->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("config", config_path)->required();
  eval->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--nfe", nfe, "function evaluations");
  eval->add_option("--lambda", lambda_flag, "oracle | predicted | fixed:<v>");
  eval->add_option("--mr-checkpoint", mr_checkpoint);
  eval->add_option("--split", split, "train | val | test");
  eval->add_flag("--write-wavs", write_wavs, "write extracted waveforms");

  auto* sweep = app.add_subcommand("nfe-sweep", "evaluate across NFE settings");
  sweep->add_option("config", config_path)->required();
  sweep->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  sweep->add_option("--nfe-list", nfe_list, "comma-separated NFE values");
  sweep->add_option("--lambda", lambda_flag, "oracle | predicted | fixed:<v>");
  sweep->add_option("--mr-checkpoint", mr_checkpoint);
  sweep->add_option("--split", split, "train | val | test");

  auto* ref = app.add_subcommand("config-reference", "print all config keys");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_override);
    if (train->parsed()) return cmd_train(config_path, resume);
    if (train_mr->parsed()) return cmd_train_mr(config_path);
    if (eval->parsed())
      return cmd_eval(config_path, checkpoint, nfe, lambda_flag, mr_checkpoint,
                      split, write_wavs);
    if (sweep->parsed())
      return cmd_nfe_sweep(config_path, checkpoint, nfe_list, lambda_flag,
                           mr_checkpoint, split);
    if (ref->parsed()) {
      std::cout << mftse::config_reference();
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
