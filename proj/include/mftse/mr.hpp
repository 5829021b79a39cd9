#pragma once

// Mixing-ratio predictor: lambda_hat = sigmoid(h([w(y); w(e)])) with a
// fixed spectral-statistics featurizer w and a small MLP h. Trained
// separately from the velocity network via MSE on lambda.

#include <string>
#include <vector>

#include "mftse/rng.hpp"
#include "mftse/signal.hpp"

namespace mftse {

// Enrollment-style log-energy statistics plus global RMS (dB) and coarse
// band-energy ratios. Deterministic.
std::vector<double> mr_features(const Waveform& w, const StftConfig& stft_cfg);

std::size_t mr_feature_dim(const StftConfig& stft_cfg);

struct MrLoss {
  double value = 0.0;
  double grad_wrt_lambda_hat = 0.0;
};

// (lambda_hat - lambda)^2
MrLoss mr_loss(double lambda_hat, double lambda);

class MRPredictor {
 public:
  MRPredictor(std::size_t feat_dim, int hidden, Rng& rng);  // zero-init head
  explicit MRPredictor(std::size_t feat_dim, int hidden = 64);

  std::size_t feat_dim() const { return feat_dim_; }
  std::size_t num_params() const { return params_.size(); }
  std::vector<double>& mutable_params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Concatenated [features(y); features(e)] of length 2*feat_dim.
  double predict_features(const std::vector<double>& feats) const;

  double predict(const Waveform& y, const Waveform& e,
                 const StftConfig& stft_cfg) const;

  // MSE loss against the true lambda; accumulates parameter gradients into
  // *grads (same length as params) when non-null.
  double loss_and_grad(const std::vector<double>& feats, double lambda,
                       std::vector<double>* grads) const;

  void save(const std::string& path) const;
  static MRPredictor load(const std::string& path);

 private:
  std::size_t feat_dim_;
  int hidden_;
  std::vector<double> params_;

  std::size_t off_w1_, off_b1_, off_w2_, off_b2_, off_w3_, off_b3_;
  std::size_t input_dim() const { return 2 * feat_dim_; }
  double forward_logit(const std::vector<double>& feats,
                       std::vector<double>* h1, std::vector<double>* h2) const;
};

// Clip used before the predicted lambda enters the one-step jump.
double clip_lambda(double lambda_hat);

}  // namespace mftse
