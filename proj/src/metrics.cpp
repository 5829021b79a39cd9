#include "mftse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mftse/kernels.hpp"

namespace mftse {

double si_sdr(const Waveform& est, const Waveform& ref) {
  if (est.samples.size() != ref.samples.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  const std::size_t n = ref.samples.size();
  if (n == 0) throw std::invalid_argument("si_sdr: empty signals");

  std::vector<double> e(est.samples), r(ref.samples);
  double me = 0.0, mr_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) { me += e[i]; mr_ += r[i]; }
  me /= static_cast<double>(n);
  mr_ /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) { e[i] -= me; r[i] -= mr_; }

  const double ref_sq = kernels::sumsq(r.data(), n);
  if (ref_sq == 0.0) throw std::invalid_argument("si_sdr: zero reference");
  const double proj = kernels::dot(e.data(), r.data(), n) / ref_sq;

  const double target_sq = proj * proj * ref_sq;
  double resid_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = e[i] - proj * r[i];
    resid_sq += d * d;
  }
  constexpr double kCapDb = 100.0;
  if (resid_sq <= 0.0 || target_sq / resid_sq >= 1e10) return kCapDb;
  return std::min(kCapDb, 10.0 * std::log10(target_sq / resid_sq));
}

double si_sdr_improvement(const Waveform& est, const Waveform& mix,
                          const Waveform& ref) {
  return si_sdr(est, ref) - si_sdr(mix, ref);
}

void EvalReport::recompute_aggregates() {
  std::vector<const EvalRecord*> ok;
  for (const auto& rec : records)
    if (rec.ok) ok.push_back(&rec);
  // fixed-order summation after sorting by id
  std::sort(ok.begin(), ok.end(),
            [](const EvalRecord* a, const EvalRecord* b) { return a->id < b->id; });
  if (ok.empty()) {
    mean_si_sdr = median_si_sdr = mean_improvement = 0.0;
    return;
  }
  double sum = 0.0, sum_imp = 0.0;
  std::vector<double> vals;
  vals.reserve(ok.size());
  for (const auto* rec : ok) {
    sum += rec->si_sdr_est;
    sum_imp += rec->si_sdr_est - rec->si_sdr_mix;
    vals.push_back(rec->si_sdr_est);
  }
  mean_si_sdr = sum / static_cast<double>(ok.size());
  mean_improvement = sum_imp / static_cast<double>(ok.size());
  std::sort(vals.begin(), vals.end());
  const std::size_t m = vals.size();
  median_si_sdr = (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
}

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write report: " + path);
  f << "id,lambda,lambda_hat,nfe,si_sdr_est,si_sdr_mix,ok,error\n";
  char line[512];
  for (const auto& rec : records) {
    std::snprintf(line, sizeof(line), "%llu,%.10g,%.10g,%d,%.10g,%.10g,%d,%s\n",
                  static_cast<unsigned long long>(rec.id), rec.lambda,
                  rec.lambda_hat, rec.nfe, rec.si_sdr_est, rec.si_sdr_mix,
                  rec.ok ? 1 : 0, rec.error.c_str());
    f << line;
  }
  std::snprintf(line, sizeof(line),
                "# mean_si_sdr=%.10g median_si_sdr=%.10g mean_improvement=%.10g\n",
                mean_si_sdr, median_si_sdr, mean_improvement);
  f << line;
}

EvalReport evaluate_set(const VelocityNet& net, const MRPredictor* mr,
                        const std::vector<MixtureExample>& dataset,
                        const InferenceConfig& cfg, const StftConfig& stft_cfg) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_set: empty dataset");
  EvalReport report;
  report.records.reserve(dataset.size());
  for (const auto& ex : dataset) {
    EvalRecord rec;
    rec.id = ex.id;
    rec.lambda = ex.lambda;
    rec.nfe = cfg.nfe;
    try {
      rec.lambda_hat = resolve_lambda(mr, ex, cfg, stft_cfg);
      const Waveform est = extract_waveform(net, mr, ex, cfg, stft_cfg);
      rec.si_sdr_est = si_sdr(est, ex.s);
      rec.si_sdr_mix = si_sdr(ex.y, ex.s);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
  }
  report.recompute_aggregates();
  return report;
}

}  // namespace mftse
