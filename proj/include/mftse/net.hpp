#pragma once

// Conditional average-velocity estimator v(z_t, t, r, e): a per-frame MLP
// over [re bins; im bins; time embeddings; enrollment embedding] with a
// zero-initialized, learned-scale output head and exact hand-derived
// gradients.

#include <cstdint>
#include <string>
#include <vector>

#include "mftse/rng.hpp"
#include "mftse/signal.hpp"

namespace mftse {

struct EnrollmentEmbedding {
  std::vector<double> v;
};

// Sinusoidal features [sin(x*w_k), cos(x*w_k)] with geometric frequencies
// from 1 to 1000; dim must be even.
std::vector<double> embed_time(double x, int dim);

// Per-band log-energy means and standard deviations over the magnitude
// spectrogram of the enrollment clip. Fixed featurizer, no gradients.
EnrollmentEmbedding embed_enrollment(const Waveform& e, const StftConfig& stft_cfg);

struct NetConfig {
  std::size_t bins = 33;
  int time_dim = 16;      // per time input (t and r each)
  int hidden = 128;
  int hidden_layers = 3;
  int emb_dim = 66;       // enrollment embedding length (2*bins by default)
  bool frame_context = false;  // concatenate +/-1 neighboring frames

  std::size_t frame_io() const { return 2 * bins; }
  std::size_t input_dim() const {
    return frame_io() * (frame_context ? 3 : 1) + 2 * static_cast<std::size_t>(time_dim) +
           static_cast<std::size_t>(emb_dim);
  }
};

class VelocityNet;

// Per-frame activations retained by forward() for the matching backward().
struct ForwardCache {
  std::uint64_t params_version = 0;
  std::size_t frames = 0;
  std::vector<double> inputs;       // frames x input_dim
  std::vector<double> hidden;       // frames x hidden_layers x hidden (post-tanh)
  std::vector<double> head_pre;     // frames x 2*bins (before the output scale)
};

class VelocityNet {
 public:
  VelocityNet(const NetConfig& cfg, Rng& rng);  // random hidden, zero head
  explicit VelocityNet(const NetConfig& cfg);   // all-zero hidden too (tests)

  const NetConfig& config() const { return cfg_; }
  std::size_t num_params() const { return params_.size(); }
  const std::vector<double>& params() const { return params_; }
  std::uint64_t params_version() const { return version_; }

  // Overwrites parameters (optimizer update); invalidates existing caches.
  void set_params(std::vector<double> p);
  std::vector<double>& mutable_params() {
    ++version_;
    return params_;
  }

  Spectrogram forward(const Spectrogram& z, double t, double r,
                      const EnrollmentEmbedding& emb,
                      ForwardCache* cache = nullptr) const;

  // Exact gradient of <upstream, forward(...)> w.r.t. every parameter.
  std::vector<double> backward(const ForwardCache& cache,
                               const Spectrogram& upstream) const;

  // Max relative error of backward() vs central differences on a random
  // subset (~5%) of parameters, for the objective <upstream, forward(...)>.
  double grad_check(const Spectrogram& z, double t, double r,
                    const EnrollmentEmbedding& emb, const Spectrogram& upstream,
                    double eps, Rng& rng);

  void save(const std::string& path) const;
  static VelocityNet load(const std::string& path);

 private:
  void init_layout();

  NetConfig cfg_;
  std::vector<double> params_;
  std::uint64_t version_ = 0;

  // flat-parameter layout offsets
  std::size_t off_w_in_ = 0, off_b_in_ = 0;
  std::vector<std::size_t> off_w_h_, off_b_h_;
  std::size_t off_w_out_ = 0, off_b_out_ = 0, off_scale_ = 0;
};

}  // namespace mftse
