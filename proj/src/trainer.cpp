#include "mftse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mftse/kernels.hpp"
#include "mftse/metrics.hpp"

namespace mftse {

namespace {
constexpr std::uint64_t kTimeTag = 0x7131;
constexpr std::uint64_t kShuffleTag = 0x5831;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void TrainState::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write train state: " + path);
  put(f, std::uint32_t{0x4d465453u});  // "MFTS"
  put(f, static_cast<std::int64_t>(k));
  put(f, static_cast<std::int32_t>(epoch));
  put(f, static_cast<std::int64_t>(opt.step));
  put(f, best_val_si_sdr);
  put(f, static_cast<std::int32_t>(has_best ? 1 : 0));
  put(f, static_cast<std::uint64_t>(opt.m.size()));
  f.write(reinterpret_cast<const char*>(opt.m.data()),
          static_cast<std::streamsize>(opt.m.size() * sizeof(double)));
  f.write(reinterpret_cast<const char*>(opt.v.data()),
          static_cast<std::streamsize>(opt.v.size() * sizeof(double)));
  if (!f) throw std::runtime_error("train state write failed: " + path);
}

TrainState TrainState::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open train state: " + path);
  if (get<std::uint32_t>(f) != 0x4d465453u)
    throw std::runtime_error("bad train state magic: " + path);
  TrainState s;
  s.k = static_cast<long>(get<std::int64_t>(f));
  s.epoch = get<std::int32_t>(f);
  s.opt.step = static_cast<long>(get<std::int64_t>(f));
  s.best_val_si_sdr = get<double>(f);
  s.has_best = get<std::int32_t>(f) != 0;
  const auto n = static_cast<std::size_t>(get<std::uint64_t>(f));
  s.opt.m.resize(n);
  s.opt.v.resize(n);
  f.read(reinterpret_cast<char*>(s.opt.m.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  f.read(reinterpret_cast<char*>(s.opt.v.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("train state truncated: " + path);
  return s;
}

std::vector<PreparedExample> prepare_examples(
    const std::vector<MixtureExample>& dataset, const StftConfig& stft_cfg) {
  std::vector<PreparedExample> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset) {
    PreparedExample p;
    p.id = ex.id;
    p.lambda = ex.lambda;
    p.S = stft(ex.s, stft_cfg.window_len, stft_cfg.hop);
    p.B = stft(ex.b, stft_cfg.window_len, stft_cfg.hop);
    p.Y = stft(ex.y, stft_cfg.window_len, stft_cfg.hop);
    p.u = ground_truth_velocity(p.S, p.B);
    p.emb = embed_enrollment(ex.e, stft_cfg);
    out.push_back(std::move(p));
  }
  return out;
}

StepInfo train_step(VelocityNet& net, TrainState& state,
                    const std::vector<const PreparedExample*>& batch,
                    const TrainConfig& cfg, Rng& time_rng, double lr) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

  StepInfo info;
  info.lr = lr;
  info.alpha = alpha_at(cfg.schedule, state.k);

  std::vector<double> grads(net.num_params(), 0.0);
  std::vector<double> ex_grads;
  double loss_sum = 0.0;

  for (const PreparedExample* ex : batch) {
    const TimePair tp = sample_time_pair(time_rng, cfg.time_sampling);
    const Spectrogram z_t = interpolate(ex->S, ex->B, tp.t);

    Spectrogram target;
    if (tp.is_flow_matching()) {
      ++info.fm_count;
      target = ex->u;
    } else {
      ++info.mf_count;
      const double tau_t = tau(tp.t, tp.r, info.alpha);
      const Spectrogram z_tau = interpolate(ex->S, ex->B, tau_t);
      const Spectrogram v_tau = net.forward(z_tau, tau_t, tp.r, ex->emb);  // frozen
      target = alpha_target(ex->u, v_tau, info.alpha);
    }

    ForwardCache cache;
    const Spectrogram v_pred = net.forward(z_t, tp.t, tp.r, ex->emb, &cache);
    const LossOutput loss = adaptive_loss(v_pred, target, info.alpha, cfg.c);
    loss_sum += loss.value;
    ex_grads = net.backward(cache, loss.grad_wrt_prediction);
    kernels::axpy(1.0 / static_cast<double>(batch.size()), ex_grads.data(),
                  grads.data(), grads.size());
  }

  info.loss = loss_sum / static_cast<double>(batch.size());
  if (!std::isfinite(info.loss))
    throw std::runtime_error("train_step: non-finite loss at step " +
                             std::to_string(state.k));

  info.grad_norm = clip_gradients(grads, cfg.clip_threshold);
  adamw_step(net.mutable_params(), grads, state.opt, lr, cfg.adamw);
  ++state.k;
  return info;
}

double validate_and_select(TrainState& state, const VelocityNet& net,
                           const std::vector<MixtureExample>& val_set,
                           const TrainConfig& cfg) {
  if (val_set.empty())
    throw std::invalid_argument("validate_and_select: empty validation set");
  InferenceConfig icfg;
  icfg.nfe = 1;
  icfg.lambda_source = cfg.val_lambda_source;
  const EvalReport report = evaluate_set(net, nullptr, val_set, icfg, cfg.stft);

  if (!state.has_best || report.mean_si_sdr > state.best_val_si_sdr) {
    state.best_val_si_sdr = report.mean_si_sdr;
    state.has_best = true;
    if (!cfg.checkpoint_path.empty()) {
      const std::string tmp = cfg.checkpoint_path + ".tmp";
      net.save(tmp);
      std::filesystem::rename(tmp, cfg.checkpoint_path);
    }
  }
  return report.mean_si_sdr;
}

TrainSummary train_velocity_net(VelocityNet& net,
                                const std::vector<MixtureExample>& train_set,
                                const std::vector<MixtureExample>& val_set,
                                const TrainConfig& cfg, TrainState* state_io) {
  if (train_set.empty()) throw std::invalid_argument("train: empty train set");

  const auto prepared = prepare_examples(train_set, cfg.stft);
  const int steps_per_epoch =
      (static_cast<int>(prepared.size()) + cfg.batch_size - 1) / cfg.batch_size;

  TrainState local;
  TrainState& state = state_io ? *state_io : local;
  if (state.opt.m.empty()) state.opt = AdamWState(net.num_params());
  if (state.opt.m.size() != net.num_params())
    throw std::invalid_argument("train: optimizer state does not match net");

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    const bool fresh = state.epoch == 0;
    log.open(cfg.log_path, fresh ? std::ios::out : std::ios::app);
    if (!log) throw std::runtime_error("cannot open log: " + cfg.log_path);
    if (fresh) log << "step,epoch,alpha,lr,loss,grad_norm,branch\n";
  }

  TrainSummary summary;
  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    // per-epoch derived streams keep resume and rerun bit-identical
    Rng time_rng(Rng::derive(cfg.seed, kTimeTag + static_cast<std::uint64_t>(epoch)));
    Rng shuffle_rng(Rng::derive(cfg.seed, kShuffleTag + static_cast<std::uint64_t>(epoch)));
    // order depends only on the epoch seed so that resume matches a straight run
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (int b = 0; b < steps_per_epoch; ++b) {
      std::vector<const PreparedExample*> batch;
      for (int j = b * cfg.batch_size;
           j < (b + 1) * cfg.batch_size && j < static_cast<int>(prepared.size()); ++j)
        batch.push_back(&prepared[order[static_cast<std::size_t>(j)]]);

      const double epoch_frac =
          epoch + static_cast<double>(b) / static_cast<double>(steps_per_epoch);
      const double lr = lr_at(cfg.lr, epoch_frac);
      const StepInfo info = train_step(net, state, batch, cfg, time_rng, lr);
      summary.final_loss = info.loss;
      ++summary.steps;

      if (log) {
        const char* branch = (info.mf_count == 0)   ? "fm"
                             : (info.fm_count == 0) ? "mf"
                                                    : "mixed";
        char line[256];
        std::snprintf(line, sizeof(line), "%ld,%d,%.10g,%.10g,%.10g,%.10g,%s\n",
                      state.k - 1, epoch, info.alpha, info.lr, info.loss,
                      info.grad_norm, branch);
        log << line;
      }
    }

    state.epoch = epoch + 1;
    const bool last = epoch + 1 == cfg.epochs;
    if (!val_set.empty() &&
        ((epoch + 1) % cfg.validate_every_epochs == 0 || last)) {
      validate_and_select(state, net, val_set, cfg);
      if (!cfg.last_checkpoint_path.empty()) net.save(cfg.last_checkpoint_path);
      if (!cfg.state_path.empty()) state.save(cfg.state_path);
    }
  }

  summary.best_val_si_sdr = state.best_val_si_sdr;
  summary.has_best = state.has_best;
  return summary;
}

MrTrainSummary train_mr_predictor(MRPredictor& mr,
                                  const std::vector<MixtureExample>& train_set,
                                  const std::vector<MixtureExample>& val_set,
                                  const MrTrainConfig& cfg) {
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("train_mr: empty split");

  auto features = [&](const MixtureExample& ex) {
    auto f = mr_features(ex.y, cfg.stft);
    const auto fe = mr_features(ex.e, cfg.stft);
    f.insert(f.end(), fe.begin(), fe.end());
    return f;
  };
  std::vector<std::vector<double>> train_feats, val_feats;
  for (const auto& ex : train_set) train_feats.push_back(features(ex));
  for (const auto& ex : val_set) val_feats.push_back(features(ex));

  auto val_metrics = [&](double* mae) {
    double mse = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < val_feats.size(); ++i) {
      const double pred = mr.predict_features(val_feats[i]);
      const double d = pred - val_set[i].lambda;
      mse += d * d;
      abs_sum += std::abs(d);
    }
    if (mae) *mae = abs_sum / static_cast<double>(val_feats.size());
    return mse / static_cast<double>(val_feats.size());
  };

  AdamWState opt(mr.num_params());
  MrTrainSummary summary;
  std::vector<std::size_t> order(train_feats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, kShuffleTag + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> grads(mr.num_params(), 0.0);
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t i = order[j];
        mr.loss_and_grad(train_feats[i], train_set[i].lambda, &grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads) g *= inv;
      adamw_step(mr.mutable_params(), grads, opt, cfg.lr, cfg.adamw);
    }
    summary.val_mse_history.push_back(val_metrics(nullptr));
  }

  for (std::size_t i = 1; i < std::min<std::size_t>(5, summary.val_mse_history.size()); ++i)
    if (summary.val_mse_history[i] > summary.val_mse_history[i - 1])
      summary.monotone_first_5 = false;

  summary.final_val_mse = val_metrics(&summary.final_val_mae);
  if (!cfg.checkpoint_path.empty()) mr.save(cfg.checkpoint_path);
  return summary;
}

}  // namespace mftse
