#include "mftse/mr.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mftse/kernels.hpp"
#include "mftse/net.hpp"

namespace mftse {

namespace {
constexpr int kBands = 4;
constexpr double kFloor = 1e-10;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

std::size_t mr_feature_dim(const StftConfig& stft_cfg) {
  const std::size_t bins = static_cast<std::size_t>(stft_cfg.window_len / 2 + 1);
  return 2 * bins + 1 + kBands;
}

std::vector<double> mr_features(const Waveform& w, const StftConfig& stft_cfg) {
  if (w.samples.empty()) throw std::invalid_argument("mr_features: empty waveform");
  const EnrollmentEmbedding emb = embed_enrollment(w, stft_cfg);
  std::vector<double> feats = emb.v;

  feats.push_back(20.0 * std::log10(rms(w) + kFloor));

  // coarse band-energy fractions over the magnitude spectrogram
  const Spectrogram X = stft(w, stft_cfg.window_len, stft_cfg.hop);
  double band[kBands] = {0, 0, 0, 0};
  double total = 0.0;
  for (std::size_t f = 0; f < X.frames; ++f) {
    for (std::size_t k = 0; k < X.bins; ++k) {
      const double e = X.re[f * X.bins + k] * X.re[f * X.bins + k] +
                       X.im[f * X.bins + k] * X.im[f * X.bins + k];
      band[std::min<std::size_t>(k * kBands / X.bins, kBands - 1)] += e;
      total += e;
    }
  }
  for (int i = 0; i < kBands; ++i) feats.push_back(band[i] / (total + kFloor));
  return feats;
}

MrLoss mr_loss(double lambda_hat, double lambda) {
  MrLoss out;
  const double d = lambda_hat - lambda;
  out.value = d * d;
  out.grad_wrt_lambda_hat = 2.0 * d;
  return out;
}

double clip_lambda(double lambda_hat) {
  return std::min(0.95, std::max(0.05, lambda_hat));
}

MRPredictor::MRPredictor(std::size_t feat_dim, int hidden)
    : feat_dim_(feat_dim), hidden_(hidden) {
  const std::size_t in = input_dim();
  const std::size_t h = static_cast<std::size_t>(hidden_);
  std::size_t off = 0;
  off_w1_ = off; off += h * in;
  off_b1_ = off; off += h;
  off_w2_ = off; off += h * h;
  off_b2_ = off; off += h;
  off_w3_ = off; off += h;
  off_b3_ = off; off += 1;
  params_.assign(off, 0.0);
}

MRPredictor::MRPredictor(std::size_t feat_dim, int hidden, Rng& rng)
    : MRPredictor(feat_dim, hidden) {
  const std::size_t in = input_dim();
  const std::size_t h = static_cast<std::size_t>(hidden_);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  for (std::size_t i = 0; i < h * in; ++i) params_[off_w1_ + i] = s1 * rng.normal();
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < h * h; ++i) params_[off_w2_ + i] = s2 * rng.normal();
  // final layer zero-init: untrained predictor outputs 0.5
}

double MRPredictor::forward_logit(const std::vector<double>& feats,
                                  std::vector<double>* h1,
                                  std::vector<double>* h2) const {
  if (feats.size() != input_dim())
    throw std::invalid_argument("MRPredictor: feature length mismatch");
  const std::size_t h = static_cast<std::size_t>(hidden_);
  std::vector<double> a1(h), a2(h);
  kernels::gemv(&params_[off_w1_], feats.data(), &params_[off_b1_], a1.data(), h,
                input_dim());
  for (auto& v : a1) v = std::tanh(v);
  kernels::gemv(&params_[off_w2_], a1.data(), &params_[off_b2_], a2.data(), h, h);
  for (auto& v : a2) v = std::tanh(v);
  const double logit =
      kernels::dot(&params_[off_w3_], a2.data(), h) + params_[off_b3_];
  if (h1) *h1 = std::move(a1);
  if (h2) *h2 = std::move(a2);
  return logit;
}

double MRPredictor::predict_features(const std::vector<double>& feats) const {
  return logistic(forward_logit(feats, nullptr, nullptr));
}

double MRPredictor::predict(const Waveform& y, const Waveform& e,
                            const StftConfig& stft_cfg) const {
  auto feats = mr_features(y, stft_cfg);
  const auto fe = mr_features(e, stft_cfg);
  feats.insert(feats.end(), fe.begin(), fe.end());
  return predict_features(feats);
}

double MRPredictor::loss_and_grad(const std::vector<double>& feats,
                                  double lambda,
                                  std::vector<double>* grads) const {
  std::vector<double> h1, h2;
  const double logit = forward_logit(feats, &h1, &h2);
  const double lambda_hat = logistic(logit);
  const MrLoss loss = mr_loss(lambda_hat, lambda);
  if (!grads) return loss.value;
  if (grads->size() != params_.size())
    throw std::invalid_argument("loss_and_grad: grads size mismatch");

  const std::size_t h = static_cast<std::size_t>(hidden_);
  // chain through the logistic output
  const double g_logit = loss.grad_wrt_lambda_hat * lambda_hat * (1.0 - lambda_hat);

  kernels::axpy(g_logit, h2.data(), &(*grads)[off_w3_], h);
  (*grads)[off_b3_] += g_logit;

  std::vector<double> g2(h), g1(h), gtmp(h);
  for (std::size_t i = 0; i < h; ++i)
    g2[i] = g_logit * params_[off_w3_ + i] * (1.0 - h2[i] * h2[i]);
  for (std::size_t row = 0; row < h; ++row)
    kernels::axpy(g2[row], h1.data(), &(*grads)[off_w2_ + row * h], h);
  kernels::axpy(1.0, g2.data(), &(*grads)[off_b2_], h);
  kernels::gemv_t(&params_[off_w2_], g2.data(), gtmp.data(), h, h);
  for (std::size_t i = 0; i < h; ++i) g1[i] = gtmp[i] * (1.0 - h1[i] * h1[i]);
  for (std::size_t row = 0; row < h; ++row)
    kernels::axpy(g1[row], feats.data(), &(*grads)[off_w1_ + row * input_dim()],
                  input_dim());
  kernels::axpy(1.0, g1.data(), &(*grads)[off_b1_], h);
  return loss.value;
}

namespace {
constexpr std::uint32_t kMrMagic = 0x4d46'4d52u;  // "MFMR"
constexpr std::uint32_t kMrVersion = 1;
static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian");

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

void MRPredictor::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  put(f, kMrMagic);
  put(f, kMrVersion);
  put(f, static_cast<std::uint64_t>(feat_dim_));
  put(f, static_cast<std::int32_t>(hidden_));
  put(f, static_cast<std::uint64_t>(params_.size()));
  f.write(reinterpret_cast<const char*>(params_.data()),
          static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

MRPredictor MRPredictor::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  if (get<std::uint32_t>(f) != kMrMagic)
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (get<std::uint32_t>(f) != kMrVersion)
    throw std::runtime_error("unsupported checkpoint version: " + path);
  const auto feat_dim = static_cast<std::size_t>(get<std::uint64_t>(f));
  const int hidden = get<std::int32_t>(f);
  MRPredictor mr(feat_dim, hidden);
  const auto n = static_cast<std::size_t>(get<std::uint64_t>(f));
  if (n != mr.params_.size())
    throw std::runtime_error("checkpoint parameter count mismatch: " + path);
  f.read(reinterpret_cast<char*>(mr.params_.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint truncated: " + path);
  return mr;
}

}  // namespace mftse
