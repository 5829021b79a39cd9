#pragma once

// Synthetic source generation, convex mixing, and the STFT/ISTFT pair used
// to move between waveform and complex-spectrogram domains.

#include <cstdint>
#include <string>
#include <vector>

namespace mftse {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;

  std::size_t length() const { return samples.size(); }
};

// frames x bins complex array stored as two real planes, row-major.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  int window_len = 0;
  int hop = 0;
  std::vector<double> re;
  std::vector<double> im;

  std::size_t size() const { return frames * bins; }
  bool same_shape(const Spectrogram& o) const {
    return frames == o.frames && bins == o.bins;
  }
};

struct MixtureExample {
  std::uint64_t id = 0;
  int target_source_id = 0;
  int background_source_id = 0;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  Waveform s;  // target
  Waveform b;  // background
  Waveform e;  // enrollment, same source id as s
  Waveform y;  // mixture = lambda*s + (1-lambda)*b
};

struct StftConfig {
  int window_len = 64;
  int hop = 16;
};

struct DatasetConfig {
  int n = 512;
  double lambda_lo = 0.3;
  double lambda_hi = 0.7;
  double duration_s = 1.0;
  int sample_rate = 8000;
  std::uint64_t seed = 0;
  int target_pool_size = 8;      // target source ids: [0, target_pool_size)
  int background_pool_offset = 12;  // background ids: offset + [0, pool)
  int background_pool_size = 8;
};

double rms(const Waveform& w);

// Harmonic source with fundamental 110 * 2^(id/12) Hz, 4 harmonics with 1/k
// amplitude decay, slow random amplitude modulation, white noise at -30 dB,
// RMS-normalized to 1. Deterministic given (source_id, seed).
Waveform synth_source(int source_id, double duration_s, int sample_rate,
                      std::uint64_t seed);

double source_fundamental_hz(int source_id);

// lambda*s + (1-lambda)*b
Waveform mix(const Waveform& s, const Waveform& b, double lambda);

// Hann-windowed, centered real-input DFT. Linear in the input.
Spectrogram stft(const Waveform& w, int window_len, int hop);

// Overlap-add inverse with squared-window-sum normalization (floor 1e-8),
// trimmed to out_len.
Waveform istft(const Spectrogram& X, std::size_t out_len, int sample_rate);

std::vector<MixtureExample> gen_dataset(const DatasetConfig& cfg);

// Split serialization: manifest.txt (one record per line: id, target source
// id, background source id, lambda, seed) plus <id>_{s,b,e,y}.f32 raw
// little-endian float32 sample files.
void save_split(const std::vector<MixtureExample>& split, const std::string& dir,
                int sample_rate);
std::vector<MixtureExample> load_split(const std::string& dir, int sample_rate);

void write_f32(const std::string& path, const std::vector<double>& samples);
std::vector<double> read_f32(const std::string& path);

}  // namespace mftse
