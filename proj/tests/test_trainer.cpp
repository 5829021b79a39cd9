#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mftse/metrics.hpp"
#include "mftse/rng.hpp"
#include "mftse/trainer.hpp"

using namespace mftse;

namespace {

std::vector<MixtureExample> tiny_dataset(int n, std::uint64_t seed,
                                         double duration_s = 0.5) {
  DatasetConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.duration_s = duration_s;
  return gen_dataset(cfg);
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.schedule.k_e = 100;
  cfg.seed = 77;
  return cfg;
}

NetConfig tiny_net_config() {
  NetConfig cfg;
  cfg.bins = 33;
  cfg.emb_dim = 66;
  cfg.hidden = 16;
  cfg.hidden_layers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("train_step on S==B data with zero-init net is a no-op") {
  auto ds = tiny_dataset(2, 1);
  for (auto& ex : ds) {
    ex.b = ex.s;  // degenerate: u = 0
    ex.y = mix(ex.s, ex.b, ex.lambda);
  }
  TrainConfig cfg = tiny_train_config();
  Rng init(2);
  VelocityNet net(tiny_net_config(), init);
  // zero the random hidden weights too so weight decay has nothing to decay
  std::fill(net.mutable_params().begin(), net.mutable_params().end(), 0.0);

  const auto prepared = prepare_examples(ds, cfg.stft);
  std::vector<const PreparedExample*> batch;
  for (const auto& p : prepared) batch.push_back(&p);

  TrainState state;
  state.opt = AdamWState(net.num_params());
  Rng time_rng(3);
  const StepInfo info = train_step(net, state, batch, cfg, time_rng, 1e-3);
  CHECK(info.loss == 0.0);
  CHECK(state.k == 1);
  for (double p : net.params()) CHECK(p == 0.0);
}

TEST_CASE("alpha=1 step equals weighted flow-matching regression against u") {
  auto ds = tiny_dataset(1, 4);
  TrainConfig cfg = tiny_train_config();
  cfg.schedule.k_s = 100;  // still in the alpha=1 phase at k=0
  cfg.schedule.k_e = 200;
  cfg.time_sampling.flow_ratio = 0.0;  // force the mean-flow branch

  Rng init(5);
  VelocityNet net(tiny_net_config(), init);
  const auto prepared = prepare_examples(ds, cfg.stft);

  TrainState state;
  state.opt = AdamWState(net.num_params());
  Rng time_rng(6);
  const StepInfo info = train_step(net, state, {&prepared[0]}, cfg, time_rng, 0.0);
  CHECK(info.alpha == doctest::Approx(1.0).epsilon(1e-5));

  // with a zero-init head the prediction is 0, so the loss must equal
  // w * ||u||^2 with w = alpha / (||u||^2 + c)
  const double u_sq = [&] {
    double s = 0.0;
    for (double v : prepared[0].u.re) s += v * v;
    for (double v : prepared[0].u.im) s += v * v;
    return s;
  }();
  CHECK(info.loss ==
        doctest::Approx(info.alpha * u_sq / (u_sq + cfg.c)).epsilon(1e-9));
}

TEST_CASE("loss decreases on a small training run") {
  const auto train_set = tiny_dataset(16, 7);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 25;          // 4 steps/epoch -> 100 steps
  cfg.schedule.k_e = 60;
  cfg.lr.base_lr = 3e-3;
  cfg.lr.min_lr = 3e-4;
  cfg.lr.warmup_epochs = 2;

  Rng init(8);
  VelocityNet net(tiny_net_config(), init);
  const auto prepared = prepare_examples(train_set, cfg.stft);
  std::vector<const PreparedExample*> all;
  for (const auto& p : prepared) all.push_back(&p);

  TrainState state;
  state.opt = AdamWState(net.num_params());
  std::vector<double> losses;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng time_rng(Rng::derive(cfg.seed, 1000 + epoch));
    for (int b = 0; b < 4; ++b) {
      std::vector<const PreparedExample*> batch(all.begin() + b * 4,
                                                all.begin() + (b + 1) * 4);
      const double lr = lr_at(cfg.lr, epoch + b / 4.0);
      losses.push_back(train_step(net, state, batch, cfg, time_rng, lr).loss);
    }
  }
  auto avg = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += losses[i];
    return s / (hi - lo);
  };
  // >= 50% drop from the step-10 moving average
  CHECK(avg(losses.size() - 10, losses.size()) < 0.5 * avg(5, 15));
}

TEST_CASE("full training loop is deterministic and resumable") {
  const auto train_set = tiny_dataset(8, 9);
  const auto val_set = tiny_dataset(4, 10);

  const auto tmp = std::filesystem::temp_directory_path() / "mftse_trainer_test";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);

  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 4;
  cfg.validate_every_epochs = 2;
  cfg.checkpoint_path = (tmp / "best.ckpt").string();
  cfg.last_checkpoint_path = (tmp / "last.ckpt").string();
  cfg.state_path = (tmp / "state.bin").string();
  cfg.log_path = (tmp / "log.csv").string();

  auto run = [&](const std::string& suffix) {
    Rng init(11);
    VelocityNet net(tiny_net_config(), init);
    TrainConfig c = cfg;
    c.checkpoint_path += suffix;
    c.last_checkpoint_path += suffix;
    c.state_path += suffix;
    c.log_path += suffix;
    TrainState state;
    state.opt = AdamWState(net.num_params());
    train_velocity_net(net, train_set, val_set, c, &state);
    return net.params();
  };
  const auto p1 = run(".a");
  const auto p2 = run(".b");
  CHECK(p1 == p2);

  // byte-identical logs
  auto slurp = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  CHECK(slurp(cfg.log_path + ".a") == slurp(cfg.log_path + ".b"));

  // resume: run epochs 0..2, then continue to 4; must match the straight run
  {
    Rng init(11);
    VelocityNet net(tiny_net_config(), init);
    TrainConfig c2 = cfg;
    c2.epochs = 2;
    TrainState state;
    state.opt = AdamWState(net.num_params());
    train_velocity_net(net, train_set, val_set, c2, &state);
    const long k_after_2 = state.k;

    VelocityNet resumed = VelocityNet::load(cfg.last_checkpoint_path);
    TrainState rstate = TrainState::load(cfg.state_path);
    CHECK(rstate.k == k_after_2);
    TrainConfig c4 = cfg;
    c4.epochs = 4;
    train_velocity_net(resumed, train_set, val_set, c4, &rstate);
    CHECK(rstate.k > k_after_2);  // k continues monotonically
    CHECK(resumed.params() == p1);
  }
  std::filesystem::remove_all(tmp);
}

TEST_CASE("validation persists only improvements") {
  const auto val_set = tiny_dataset(3, 12);
  const auto tmp = std::filesystem::temp_directory_path() / "mftse_val_test";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);

  TrainConfig cfg = tiny_train_config();
  cfg.checkpoint_path = (tmp / "best.ckpt").string();

  Rng init(13);
  VelocityNet net(tiny_net_config(), init);
  TrainState state;
  state.opt = AdamWState(net.num_params());

  // first validation always persists
  const double v1 = validate_and_select(state, net, val_set, cfg);
  CHECK(state.has_best);
  CHECK(std::filesystem::exists(cfg.checkpoint_path));
  CHECK(state.best_val_si_sdr == v1);

  auto slurp = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  const std::string bytes1 = slurp(cfg.checkpoint_path);

  // make the model strictly worse: large random velocity output
  Rng noise(14);
  for (auto& p : net.mutable_params()) p += 0.5 * noise.normal();
  const double v2 = validate_and_select(state, net, val_set, cfg);
  if (v2 < v1) {
    CHECK(slurp(cfg.checkpoint_path) == bytes1);  // byte-identical
    CHECK(state.best_val_si_sdr == v1);
  }

  // reloaded checkpoint reproduces the recorded validation score
  const VelocityNet best = VelocityNet::load(cfg.checkpoint_path);
  InferenceConfig icfg;
  icfg.lambda_source = cfg.val_lambda_source;
  const EvalReport report = evaluate_set(best, nullptr, val_set, icfg, cfg.stft);
  CHECK(std::abs(report.mean_si_sdr - state.best_val_si_sdr) < 1e-9);

  std::filesystem::remove_all(tmp);
}

TEST_CASE("t==r branch fraction converges to flow_ratio") {
  const auto ds = tiny_dataset(1, 15, 0.25);
  TrainConfig cfg = tiny_train_config();
  const auto prepared = prepare_examples(ds, cfg.stft);

  Rng time_rng(16);
  int fm = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    if (sample_time_pair(time_rng, cfg.time_sampling).is_flow_matching()) ++fm;
  const double frac = static_cast<double>(fm) / n;
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(frac - cfg.time_sampling.flow_ratio) < 3.0 * se);
}

TEST_CASE("MR predictor training reaches low held-out error") {
  const auto train_set = tiny_dataset(96, 17, 0.5);
  const auto val_set = tiny_dataset(32, 18, 0.5);
  MrTrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 19;

  Rng init(20);
  MRPredictor mr(mr_feature_dim(cfg.stft), 32, init);
  const MrTrainSummary summary = train_mr_predictor(mr, train_set, val_set, cfg);

  // baseline: constant-0.5 predictor has MSE equal to the lambda variance
  double mean = 0.0;
  for (const auto& ex : val_set) mean += ex.lambda;
  mean /= static_cast<double>(val_set.size());
  double var = 0.0;
  for (const auto& ex : val_set) var += (ex.lambda - mean) * (ex.lambda - mean);
  var /= static_cast<double>(val_set.size());
  const double baseline = var + (mean - 0.5) * (mean - 0.5);

  CHECK(summary.final_val_mse < baseline);
  CHECK(summary.monotone_first_5);
}
