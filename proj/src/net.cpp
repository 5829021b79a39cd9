#include "mftse/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "mftse/kernels.hpp"

namespace mftse {

std::vector<double> embed_time(double x, int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw std::invalid_argument("embed_time: dim must be positive and even");
  const int half = dim / 2;
  std::vector<double> out(dim);
  for (int k = 0; k < half; ++k) {
    const double frac = (half == 1) ? 0.0 : static_cast<double>(k) / (half - 1);
    const double omega = std::pow(1000.0, frac);  // geometric 1 .. 1000
    out[2 * k] = std::sin(x * omega);
    out[2 * k + 1] = std::cos(x * omega);
  }
  return out;
}

EnrollmentEmbedding embed_enrollment(const Waveform& e, const StftConfig& stft_cfg) {
  if (e.samples.empty())
    throw std::invalid_argument("embed_enrollment: empty waveform");
  const Spectrogram X = stft(e, stft_cfg.window_len, stft_cfg.hop);
  constexpr double kFloor = 1e-10;

  EnrollmentEmbedding emb;
  emb.v.resize(2 * X.bins);
  for (std::size_t k = 0; k < X.bins; ++k) {
    double mean = 0.0;
    for (std::size_t f = 0; f < X.frames; ++f) {
      const double re = X.re[f * X.bins + k];
      const double im = X.im[f * X.bins + k];
      mean += std::log(re * re + im * im + kFloor);
    }
    mean /= static_cast<double>(X.frames);
    double var = 0.0;
    for (std::size_t f = 0; f < X.frames; ++f) {
      const double re = X.re[f * X.bins + k];
      const double im = X.im[f * X.bins + k];
      const double d = std::log(re * re + im * im + kFloor) - mean;
      var += d * d;
    }
    var /= static_cast<double>(X.frames);
    emb.v[k] = mean;
    emb.v[X.bins + k] = std::sqrt(var);
  }
  return emb;
}

void VelocityNet::init_layout() {
  const std::size_t in = cfg_.input_dim();
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t out = cfg_.frame_io();
  std::size_t off = 0;
  off_w_in_ = off; off += h * in;
  off_b_in_ = off; off += h;
  off_w_h_.clear();
  off_b_h_.clear();
  for (int l = 1; l < cfg_.hidden_layers; ++l) {
    off_w_h_.push_back(off); off += h * h;
    off_b_h_.push_back(off); off += h;
  }
  off_w_out_ = off; off += out * h;
  off_b_out_ = off; off += out;
  off_scale_ = off; off += 1;
  params_.assign(off, 0.0);
}

VelocityNet::VelocityNet(const NetConfig& cfg) : cfg_(cfg) {
  if (cfg.hidden_layers < 1)
    throw std::invalid_argument("VelocityNet: need at least one hidden layer");
  init_layout();
  params_[off_scale_] = 1.0;
}

VelocityNet::VelocityNet(const NetConfig& cfg, Rng& rng) : VelocityNet(cfg) {
  const std::size_t in = cfg_.input_dim();
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const double s_in = 1.0 / std::sqrt(static_cast<double>(in));
  for (std::size_t i = 0; i < h * in; ++i)
    params_[off_w_in_ + i] = s_in * rng.normal();
  const double s_h = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t l = 0; l < off_w_h_.size(); ++l)
    for (std::size_t i = 0; i < h * h; ++i)
      params_[off_w_h_[l] + i] = s_h * rng.normal();
  // output head stays zero-initialized; scale stays 1
}

void VelocityNet::set_params(std::vector<double> p) {
  if (p.size() != params_.size())
    throw std::invalid_argument("set_params: size mismatch");
  params_ = std::move(p);
  ++version_;
}

Spectrogram VelocityNet::forward(const Spectrogram& z, double t, double r,
                                 const EnrollmentEmbedding& emb,
                                 ForwardCache* cache) const {
  if (z.bins != cfg_.bins)
    throw std::invalid_argument("forward: spectrogram bins mismatch");
  if (emb.v.size() != static_cast<std::size_t>(cfg_.emb_dim))
    throw std::invalid_argument("forward: enrollment embedding size mismatch");

  const std::size_t in_dim = cfg_.input_dim();
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t io = cfg_.frame_io();
  const std::size_t frames = z.frames;
  const int layers = cfg_.hidden_layers;

  const auto t_emb = embed_time(t, cfg_.time_dim);
  const auto r_emb = embed_time(r, cfg_.time_dim);

  if (cache) {
    cache->params_version = version_;
    cache->frames = frames;
    cache->inputs.resize(frames * in_dim);
    cache->hidden.resize(frames * static_cast<std::size_t>(layers) * h);
    cache->head_pre.resize(frames * io);
  }

  Spectrogram out = z;
  std::vector<double> input(in_dim);
  std::vector<double> act(h), act2(h), head(io);
  const double scale = params_[off_scale_];

  auto copy_frame = [&](std::size_t f, double* dst) {
    std::memcpy(dst, &z.re[f * z.bins], z.bins * sizeof(double));
    std::memcpy(dst + z.bins, &z.im[f * z.bins], z.bins * sizeof(double));
  };

  for (std::size_t f = 0; f < frames; ++f) {
    double* p = input.data();
    if (cfg_.frame_context) {
      if (f > 0) copy_frame(f - 1, p); else std::memset(p, 0, io * sizeof(double));
      p += io;
    }
    copy_frame(f, p);
    p += io;
    if (cfg_.frame_context) {
      if (f + 1 < frames) copy_frame(f + 1, p); else std::memset(p, 0, io * sizeof(double));
      p += io;
    }
    std::memcpy(p, t_emb.data(), t_emb.size() * sizeof(double));
    p += t_emb.size();
    std::memcpy(p, r_emb.data(), r_emb.size() * sizeof(double));
    p += r_emb.size();
    std::memcpy(p, emb.v.data(), emb.v.size() * sizeof(double));

    kernels::gemv(&params_[off_w_in_], input.data(), &params_[off_b_in_],
                  act.data(), h, in_dim);
    for (auto& v : act) v = std::tanh(v);
    if (cache) {
      std::memcpy(&cache->inputs[f * in_dim], input.data(), in_dim * sizeof(double));
      std::memcpy(&cache->hidden[(f * layers + 0) * h], act.data(), h * sizeof(double));
    }
    for (int l = 1; l < layers; ++l) {
      kernels::gemv(&params_[off_w_h_[l - 1]], act.data(), &params_[off_b_h_[l - 1]],
                    act2.data(), h, h);
      for (auto& v : act2) v = std::tanh(v);
      act.swap(act2);
      if (cache)
        std::memcpy(&cache->hidden[(f * layers + l) * h], act.data(), h * sizeof(double));
    }
    kernels::gemv(&params_[off_w_out_], act.data(), &params_[off_b_out_],
                  head.data(), io, h);
    if (cache)
      std::memcpy(&cache->head_pre[f * io], head.data(), io * sizeof(double));
    for (std::size_t k = 0; k < z.bins; ++k) {
      out.re[f * z.bins + k] = scale * head[k];
      out.im[f * z.bins + k] = scale * head[z.bins + k];
    }
  }
  return out;
}

std::vector<double> VelocityNet::backward(const ForwardCache& cache,
                                          const Spectrogram& upstream) const {
  if (cache.params_version != version_)
    throw std::logic_error("backward: stale forward cache");
  if (upstream.frames != cache.frames || upstream.bins != cfg_.bins)
    throw std::invalid_argument("backward: upstream shape mismatch");

  const std::size_t in_dim = cfg_.input_dim();
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t io = cfg_.frame_io();
  const int layers = cfg_.hidden_layers;
  const double scale = params_[off_scale_];

  std::vector<double> grads(params_.size(), 0.0);
  std::vector<double> g_head(io), g_h(h), g_pre(h);

  for (std::size_t f = 0; f < cache.frames; ++f) {
    for (std::size_t k = 0; k < cfg_.bins; ++k) {
      g_head[k] = upstream.re[f * cfg_.bins + k];
      g_head[cfg_.bins + k] = upstream.im[f * cfg_.bins + k];
    }
    grads[off_scale_] +=
        kernels::dot(g_head.data(), &cache.head_pre[f * io], io);
    for (auto& v : g_head) v *= scale;

    const double* h_last = &cache.hidden[(f * layers + layers - 1) * h];
    for (std::size_t row = 0; row < io; ++row)
      kernels::axpy(g_head[row], h_last, &grads[off_w_out_ + row * h], h);
    kernels::axpy(1.0, g_head.data(), &grads[off_b_out_], io);
    kernels::gemv_t(&params_[off_w_out_], g_head.data(), g_h.data(), io, h);

    for (int l = layers - 1; l >= 1; --l) {
      const double* h_cur = &cache.hidden[(f * layers + l) * h];
      const double* h_prev = &cache.hidden[(f * layers + l - 1) * h];
      for (std::size_t i = 0; i < h; ++i)
        g_pre[i] = g_h[i] * (1.0 - h_cur[i] * h_cur[i]);
      for (std::size_t row = 0; row < h; ++row)
        kernels::axpy(g_pre[row], h_prev, &grads[off_w_h_[l - 1] + row * h], h);
      kernels::axpy(1.0, g_pre.data(), &grads[off_b_h_[l - 1]], h);
      kernels::gemv_t(&params_[off_w_h_[l - 1]], g_pre.data(), g_h.data(), h, h);
    }

    const double* h0 = &cache.hidden[(f * layers + 0) * h];
    const double* input = &cache.inputs[f * in_dim];
    for (std::size_t i = 0; i < h; ++i)
      g_pre[i] = g_h[i] * (1.0 - h0[i] * h0[i]);
    for (std::size_t row = 0; row < h; ++row)
      kernels::axpy(g_pre[row], input, &grads[off_w_in_ + row * in_dim], in_dim);
    kernels::axpy(1.0, g_pre.data(), &grads[off_b_in_], h);
  }
  return grads;
}

double VelocityNet::grad_check(const Spectrogram& z, double t, double r,
                               const EnrollmentEmbedding& emb,
                               const Spectrogram& upstream, double eps,
                               Rng& rng) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw std::invalid_argument("grad_check: eps out of [1e-7, 1e-3]");

  ForwardCache cache;
  forward(z, t, r, emb, &cache);
  const auto analytic = backward(cache, upstream);

  auto objective = [&] {
    const Spectrogram out = forward(z, t, r, emb);
    return kernels::dot(out.re.data(), upstream.re.data(), out.size()) +
           kernels::dot(out.im.data(), upstream.im.data(), out.size());
  };

  const std::size_t n = params_.size();
  const std::size_t checks = std::max<std::size_t>(1, n / 20);
  double max_rel = 0.0;
  for (std::size_t c = 0; c < checks; ++c) {
    const std::size_t i = rng.below(n);
    const double saved = params_[i];
    params_[i] = saved + eps;
    const double lp = objective();
    params_[i] = saved - eps;
    const double lm = objective();
    params_[i] = saved;
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
    max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
  }
  return max_rel;
}

namespace {
constexpr std::uint32_t kNetMagic = 0x4d46564eu;  // "MFVN"
constexpr std::uint32_t kNetVersion = 1;
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

void VelocityNet::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  put(f, kNetMagic);
  put(f, kNetVersion);
  put(f, static_cast<std::uint64_t>(cfg_.bins));
  put(f, static_cast<std::int32_t>(cfg_.time_dim));
  put(f, static_cast<std::int32_t>(cfg_.hidden));
  put(f, static_cast<std::int32_t>(cfg_.hidden_layers));
  put(f, static_cast<std::int32_t>(cfg_.emb_dim));
  put(f, static_cast<std::int32_t>(cfg_.frame_context ? 1 : 0));
  put(f, static_cast<std::uint64_t>(params_.size()));
  f.write(reinterpret_cast<const char*>(params_.data()),
          static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

VelocityNet VelocityNet::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  if (get<std::uint32_t>(f) != kNetMagic)
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (get<std::uint32_t>(f) != kNetVersion)
    throw std::runtime_error("unsupported checkpoint version: " + path);
  NetConfig cfg;
  cfg.bins = static_cast<std::size_t>(get<std::uint64_t>(f));
  cfg.time_dim = get<std::int32_t>(f);
  cfg.hidden = get<std::int32_t>(f);
  cfg.hidden_layers = get<std::int32_t>(f);
  cfg.emb_dim = get<std::int32_t>(f);
  cfg.frame_context = get<std::int32_t>(f) != 0;
  const auto n = static_cast<std::size_t>(get<std::uint64_t>(f));
  VelocityNet net(cfg);
  if (n != net.params_.size())
    throw std::runtime_error("checkpoint parameter count mismatch: " + path);
  f.read(reinterpret_cast<char*>(net.params_.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint truncated: " + path);
  return net;
}

}  // namespace mftse
