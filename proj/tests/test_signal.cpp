#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <vector>

#include "mftse/kernels.hpp"
#include "mftse/rng.hpp"
#include "mftse/signal.hpp"

using namespace mftse;

namespace {

// Direct O(N^2) DFT oracle, independent of the stft implementation path.
std::vector<std::complex<double>> dft_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * i / n;
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

Waveform random_wave(Rng& rng, std::size_t n, int sr = 8000) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (auto& s : w.samples) s = rng.uniform(-1.0, 1.0);
  return w;
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b,
              std::size_t lo, std::size_t hi) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("synth_source is deterministic and RMS-normalized") {
  const Waveform a = synth_source(0, 1.0, 8000, 7);
  const Waveform b = synth_source(0, 1.0, 8000, 7);
  CHECK(a.samples == b.samples);
  CHECK(rms(a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rms(synth_source(5, 0.5, 8000, 123)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("synth_source rejects non-positive duration") {
  CHECK_THROWS_AS(synth_source(0, 0.0, 8000, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_source(0, -1.0, 8000, 1), std::invalid_argument);
}

TEST_CASE("same source id with different seeds shares the fundamental") {
  // locate the dominant peak of the magnitude spectrum via the DFT oracle
  auto peak_bin = [](const Waveform& w) {
    const auto spec = dft_oracle(w.samples);
    std::size_t best = 1;  // skip DC
    for (std::size_t k = 1; k < spec.size(); ++k)
      if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
    return best;
  };
  const Waveform a = synth_source(0, 1.0, 8000, 1);
  const Waveform b = synth_source(0, 1.0, 8000, 2);
  CHECK(a.samples != b.samples);  // different content
  CHECK(peak_bin(a) == peak_bin(b));
}

TEST_CASE("mix endpoints and arithmetic") {
  Rng rng(3);
  const Waveform s = random_wave(rng, 256);
  const Waveform b = random_wave(rng, 256);
  CHECK(mix(s, b, 1.0).samples == s.samples);
  CHECK(mix(s, b, 0.0).samples == b.samples);

  Waveform s2, b2;
  s2.samples = {1.0, 0.0};
  b2.samples = {0.0, 1.0};
  const Waveform m = mix(s2, b2, 0.5);
  CHECK(m.samples[0] == doctest::Approx(0.5));
  CHECK(m.samples[1] == doctest::Approx(0.5));
}

TEST_CASE("mix validates inputs") {
  Rng rng(4);
  const Waveform s = random_wave(rng, 10);
  const Waveform b = random_wave(rng, 11);
  CHECK_THROWS_AS(mix(s, b, 0.5), std::invalid_argument);
  const Waveform b2 = random_wave(rng, 10);
  CHECK_THROWS_AS(mix(s, b2, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(mix(s, b2, -0.1), std::invalid_argument);
}

TEST_CASE("stft is linear in the input") {
  Rng rng(5);
  const Waveform s = random_wave(rng, 512);
  const Waveform b = random_wave(rng, 512);
  const double lambda = 0.37;
  const Spectrogram Sm = stft(mix(s, b, lambda), 64, 16);
  const Spectrogram S = stft(s, 64, 16);
  const Spectrogram B = stft(b, 64, 16);

  double max_mag = 0.0, max_err = 0.0;
  for (std::size_t i = 0; i < Sm.size(); ++i) {
    max_mag = std::max({max_mag, std::abs(Sm.re[i]), std::abs(Sm.im[i])});
    max_err = std::max(max_err,
                       std::abs(Sm.re[i] - (lambda * S.re[i] + (1 - lambda) * B.re[i])));
    max_err = std::max(max_err,
                       std::abs(Sm.im[i] - (lambda * S.im[i] + (1 - lambda) * B.im[i])));
  }
  CHECK(max_err < 1e-10 * max_mag);
}

TEST_CASE("stft of zero is zero; bad windows rejected") {
  Waveform z;
  z.samples.assign(256, 0.0);
  const Spectrogram Z = stft(z, 64, 16);
  for (double v : Z.re) CHECK(v == 0.0);
  for (double v : Z.im) CHECK(v == 0.0);

  Waveform shorty;
  shorty.samples.assign(32, 1.0);
  CHECK_THROWS_AS(stft(shorty, 64, 16), std::invalid_argument);
  CHECK_THROWS_AS(stft(z, 64, 128), std::invalid_argument);
}

TEST_CASE("stft frame matches the direct DFT oracle") {
  // Signal equal to the Hann window placed at a frame center: the windowed
  // frame is Hann^2, so the spectrum must equal the oracle DFT of Hann^2.
  const int n = 64;
  std::vector<double> hann(n);
  for (int i = 0; i < n; ++i)
    hann[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));

  Waveform w;
  w.samples.assign(4 * n, 0.0);
  // frame with center at sample 2n starts at 2n - n/2
  const int start = 2 * n - n / 2;
  for (int i = 0; i < n; ++i) w.samples[start + i] = hann[i];

  const Spectrogram X = stft(w, n, n / 4);
  const std::size_t frame = (2 * n) / (n / 4);

  std::vector<double> hann_sq(n);
  for (int i = 0; i < n; ++i) hann_sq[i] = hann[i] * hann[i];
  const auto oracle = dft_oracle(hann_sq);

  for (std::size_t k = 0; k < X.bins; ++k) {
    CHECK(X.re[frame * X.bins + k] == doctest::Approx(oracle[k].real()).epsilon(1e-9));
    CHECK(X.im[frame * X.bins + k] == doctest::Approx(oracle[k].imag()).epsilon(1e-9));
  }
}

TEST_CASE("istft round trip") {
  Rng rng(6);
  const Waveform w = random_wave(rng, 1024);
  const Spectrogram X = stft(w, 64, 16);
  const Waveform back = istft(X, w.length(), w.sample_rate);
  // edge samples excluded: interior only
  CHECK(rel_l2(back.samples, w.samples, 64, w.length() - 64) < 1e-6);
}

TEST_CASE("istft of zeros and linearity") {
  Waveform z;
  z.samples.assign(512, 0.0);
  const Waveform back = istft(stft(z, 64, 16), 512, 8000);
  for (double v : back.samples) CHECK(v == 0.0);

  Rng rng(8);
  const Waveform w = random_wave(rng, 512);
  Waveform w2 = w;
  for (auto& s : w2.samples) s *= 2.0;
  const Waveform r1 = istft(stft(w, 64, 16), 512, 8000);
  const Waveform r2 = istft(stft(w2, 64, 16), 512, 8000);
  for (std::size_t i = 0; i < 512; ++i)
    CHECK(r2.samples[i] == doctest::Approx(2.0 * r1.samples[i]).epsilon(1e-10));
}

TEST_CASE("gen_dataset determinism, invariants, degenerate lambda range") {
  DatasetConfig cfg;
  cfg.n = 4;
  cfg.lambda_lo = cfg.lambda_hi = 0.5;
  cfg.seed = 3;
  const auto a = gen_dataset(cfg);
  const auto b = gen_dataset(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lambda == 0.5);
    CHECK(a[i].s.samples == b[i].s.samples);
    CHECK(a[i].y.samples == b[i].y.samples);
    for (std::size_t j = 0; j < a[i].y.length(); ++j)
      CHECK(a[i].y.samples[j] ==
            doctest::Approx(a[i].lambda * a[i].s.samples[j] +
                            (1 - a[i].lambda) * a[i].b.samples[j])
                .epsilon(1e-14));
  }
  cfg.n = 0;
  CHECK_THROWS_AS(gen_dataset(cfg), std::invalid_argument);
}

TEST_CASE("dataset pools are disjoint and enrollment shares the target id") {
  DatasetConfig cfg;
  cfg.n = 16;
  cfg.seed = 11;
  for (const auto& ex : gen_dataset(cfg)) {
    CHECK(ex.target_source_id < cfg.target_pool_size);
    CHECK(ex.background_source_id >= cfg.background_pool_offset);
    CHECK(ex.e.samples != ex.s.samples);  // fresh clip, same identity
  }
}

TEST_CASE("split save/load round trip") {
  DatasetConfig cfg;
  cfg.n = 3;
  cfg.seed = 21;
  cfg.duration_s = 0.25;
  const auto ds = gen_dataset(cfg);
  const std::string dir = (std::filesystem::temp_directory_path() / "mftse_split_test").string();
  std::filesystem::remove_all(dir);
  save_split(ds, dir, cfg.sample_rate);
  const auto loaded = load_split(dir, cfg.sample_rate);
  REQUIRE(loaded.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(loaded[i].lambda == ds[i].lambda);
    CHECK(loaded[i].target_source_id == ds[i].target_source_id);
    REQUIRE(loaded[i].y.length() == ds[i].y.length());
    for (std::size_t j = 0; j < ds[i].y.length(); ++j)
      CHECK(loaded[i].y.samples[j] ==
            doctest::Approx(ds[i].y.samples[j]).epsilon(1e-6));
  }
  std::filesystem::remove_all(dir);
}
