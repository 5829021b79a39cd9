#include "mftse/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mftse/kernels.hpp"
#include "mftse/rng.hpp"

namespace mftse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct DftTables {
  std::vector<double> window;    // periodic Hann, length N
  std::vector<double> cos_tab;   // bins x N
  std::vector<double> neg_sin;   // bins x N
};

const DftTables& tables_for(int window_len) {
  static std::map<int, DftTables> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(window_len);
  if (it != cache.end()) return it->second;

  DftTables t;
  const int n = window_len;
  const std::size_t bins = static_cast<std::size_t>(n / 2 + 1);
  t.window.resize(n);
  for (int i = 0; i < n; ++i)
    t.window[i] = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
  t.cos_tab.resize(bins * n);
  t.neg_sin.resize(bins * n);
  for (std::size_t k = 0; k < bins; ++k) {
    for (int i = 0; i < n; ++i) {
      const double ang = kTwoPi * static_cast<double>(k) * i / n;
      t.cos_tab[k * n + i] = std::cos(ang);
      t.neg_sin[k * n + i] = -std::sin(ang);
    }
  }
  return cache.emplace(window_len, std::move(t)).first->second;
}

}  // namespace

double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  return std::sqrt(kernels::sumsq(w.samples.data(), w.samples.size()) /
                   static_cast<double>(w.samples.size()));
}

double source_fundamental_hz(int source_id) {
  return 110.0 * std::pow(2.0, source_id / 12.0);
}

Waveform synth_source(int source_id, double duration_s, int sample_rate,
                      std::uint64_t seed) {
  if (duration_s <= 0.0) throw std::invalid_argument("synth_source: duration_s must be > 0");
  const std::size_t n = static_cast<std::size_t>(duration_s * sample_rate);
  const double f0 = source_fundamental_hz(source_id);

  Rng rng(Rng::derive(seed, 0x5157ULL + static_cast<std::uint64_t>(source_id)));
  constexpr int kHarmonics = 4;
  double phase[kHarmonics], mod_rate[kHarmonics], mod_phase[kHarmonics];
  for (int k = 0; k < kHarmonics; ++k) {
    phase[k] = rng.uniform(0.0, kTwoPi);
    mod_rate[k] = rng.uniform(0.5, 2.0);  // Hz
    mod_phase[k] = rng.uniform(0.0, kTwoPi);
  }

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double v = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
      const double amp = (1.0 / (k + 1)) *
                         (1.0 + 0.3 * std::sin(kTwoPi * mod_rate[k] * t + mod_phase[k]));
      v += amp * std::sin(kTwoPi * f0 * (k + 1) * t + phase[k]);
    }
    w.samples[i] = v;
  }

  const double harmonic_rms = rms(w);
  const double noise_rms = harmonic_rms * std::pow(10.0, -30.0 / 20.0);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] += noise_rms * rng.normal();

  const double r = rms(w);
  for (auto& s : w.samples) s /= r;
  return w;
}

Waveform mix(const Waveform& s, const Waveform& b, double lambda) {
  if (s.samples.size() != b.samples.size())
    throw std::invalid_argument("mix: length mismatch");
  if (s.sample_rate != b.sample_rate)
    throw std::invalid_argument("mix: sample rate mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("mix: lambda out of [0,1]");
  Waveform y;
  y.sample_rate = s.sample_rate;
  y.samples.resize(s.samples.size());
  kernels::lerp(lambda, s.samples.data(), b.samples.data(), y.samples.data(),
                s.samples.size());
  return y;
}

Spectrogram stft(const Waveform& w, int window_len, int hop) {
  if (hop <= 0 || window_len <= 0 || hop > window_len)
    throw std::invalid_argument("stft: require 0 < hop <= window_len");
  const std::size_t len = w.samples.size();
  if (static_cast<std::size_t>(window_len) > len)
    throw std::invalid_argument("stft: window longer than signal");

  const auto& tab = tables_for(window_len);
  const int n = window_len;
  const int half = n / 2;
  const std::size_t bins = static_cast<std::size_t>(n / 2 + 1);
  const std::size_t frames = len / hop + 1;

  Spectrogram X;
  X.frames = frames;
  X.bins = bins;
  X.window_len = window_len;
  X.hop = hop;
  X.re.resize(frames * bins);
  X.im.resize(frames * bins);

  std::vector<double> frame(n);
  for (std::size_t f = 0; f < frames; ++f) {
    const long start = static_cast<long>(f) * hop - half;  // centered framing
    for (int i = 0; i < n; ++i) {
      const long idx = start + i;
      const double x = (idx >= 0 && idx < static_cast<long>(len))
                           ? w.samples[static_cast<std::size_t>(idx)]
                           : 0.0;
      frame[i] = tab.window[i] * x;
    }
    for (std::size_t k = 0; k < bins; ++k) {
      X.re[f * bins + k] = kernels::dot(frame.data(), &tab.cos_tab[k * n], n);
      X.im[f * bins + k] = kernels::dot(frame.data(), &tab.neg_sin[k * n], n);
    }
  }
  return X;
}

Waveform istft(const Spectrogram& X, std::size_t out_len, int sample_rate) {
  if (X.window_len <= 0 || X.hop <= 0 || X.hop > X.window_len)
    throw std::invalid_argument("istft: inconsistent hop/window metadata");
  if (X.bins != static_cast<std::size_t>(X.window_len / 2 + 1))
    throw std::invalid_argument("istft: bins do not match window_len");

  const auto& tab = tables_for(X.window_len);
  const int n = X.window_len;
  const int half = n / 2;
  const std::size_t padded = (X.frames - 1) * X.hop + n + half;

  std::vector<double> acc(padded, 0.0);
  std::vector<double> norm(padded, 0.0);
  std::vector<double> frame(n);

  for (std::size_t f = 0; f < X.frames; ++f) {
    // inverse real DFT of one frame
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < X.bins; ++k) {
        const double re = X.re[f * X.bins + k];
        const double im = X.im[f * X.bins + k];
        // cos table holds cos(2pi k i / n); neg_sin holds -sin
        const double c = tab.cos_tab[k * n + i];
        const double s = -tab.neg_sin[k * n + i];
        const double scale = (k == 0 || k == static_cast<std::size_t>(n / 2)) ? 1.0 : 2.0;
        v += scale * (re * c - im * s);
      }
      frame[i] = v / n;
    }
    const long start = static_cast<long>(f) * X.hop - half;
    for (int i = 0; i < n; ++i) {
      const long idx = start + i + half;  // shift into padded buffer
      acc[static_cast<std::size_t>(idx)] += tab.window[i] * frame[i];
      norm[static_cast<std::size_t>(idx)] += tab.window[i] * tab.window[i];
    }
  }

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(out_len, 0.0);
  for (std::size_t i = 0; i < out_len && i + half < padded; ++i)
    w.samples[i] = acc[i + half] / std::max(norm[i + half], 1e-8);
  return w;
}

std::vector<MixtureExample> gen_dataset(const DatasetConfig& cfg) {
  if (cfg.n <= 0) throw std::invalid_argument("gen_dataset: n must be > 0");
  if (!(0.0 <= cfg.lambda_lo && cfg.lambda_lo <= cfg.lambda_hi && cfg.lambda_hi <= 1.0))
    throw std::invalid_argument("gen_dataset: invalid lambda range");

  std::vector<MixtureExample> out;
  out.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const std::uint64_t ex_seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(i));
    Rng rng(ex_seed);
    MixtureExample ex;
    ex.id = static_cast<std::uint64_t>(i);
    ex.seed = ex_seed;
    ex.target_source_id = static_cast<int>(rng.below(cfg.target_pool_size));
    ex.background_source_id =
        cfg.background_pool_offset + static_cast<int>(rng.below(cfg.background_pool_size));
    ex.lambda = rng.uniform(cfg.lambda_lo, cfg.lambda_hi);
    ex.s = synth_source(ex.target_source_id, cfg.duration_s, cfg.sample_rate,
                        Rng::derive(ex_seed, 1));
    ex.b = synth_source(ex.background_source_id, cfg.duration_s, cfg.sample_rate,
                        Rng::derive(ex_seed, 2));
    ex.e = synth_source(ex.target_source_id, cfg.duration_s, cfg.sample_rate,
                        Rng::derive(ex_seed, 3));
    ex.y = mix(ex.s, ex.b, ex.lambda);
    out.push_back(std::move(ex));
  }
  return out;
}

static_assert(std::endian::native == std::endian::little,
              "raw sample files are little-endian");

void write_f32(const std::string& path, const std::vector<double>& samples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  std::vector<float> buf(samples.begin(), samples.end());
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_f32(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw std::runtime_error("cannot open: " + path);
  const auto bytes = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<float> buf(bytes / sizeof(float));
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw std::runtime_error("read failed: " + path);
  return {buf.begin(), buf.end()};
}

void save_split(const std::vector<MixtureExample>& split, const std::string& dir,
                int sample_rate) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
  (void)sample_rate;
  for (const auto& ex : split) {
    char line[256];
    std::snprintf(line, sizeof(line), "%llu %d %d %.17g %llu\n",
                  static_cast<unsigned long long>(ex.id), ex.target_source_id,
                  ex.background_source_id, ex.lambda,
                  static_cast<unsigned long long>(ex.seed));
    manifest << line;
    char name[64];
    std::snprintf(name, sizeof(name), "/%06llu_", static_cast<unsigned long long>(ex.id));
    const std::string stem = dir + name;
    write_f32(stem + "s.f32", ex.s.samples);
    write_f32(stem + "b.f32", ex.b.samples);
    write_f32(stem + "e.f32", ex.e.samples);
    write_f32(stem + "y.f32", ex.y.samples);
  }
}

std::vector<MixtureExample> load_split(const std::string& dir, int sample_rate) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("missing manifest in " + dir);
  std::vector<MixtureExample> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MixtureExample ex;
    unsigned long long id = 0, seed = 0;
    ss >> id >> ex.target_source_id >> ex.background_source_id >> ex.lambda >> seed;
    if (!ss) throw std::runtime_error("malformed manifest line: " + line);
    ex.id = id;
    ex.seed = seed;
    char name[64];
    std::snprintf(name, sizeof(name), "/%06llu_", id);
    const std::string stem = dir + name;
    auto load = [&](const char* suffix) {
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples = read_f32(stem + suffix);
      return w;
    };
    ex.s = load("s.f32");
    ex.b = load("b.f32");
    ex.e = load("e.f32");
    ex.y = load("y.f32");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace mftse
