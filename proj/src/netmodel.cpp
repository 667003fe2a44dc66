#include "fbcast/netmodel.hpp"

#include <algorithm>

#include <cmath>
#include <numbers>
#include <string>

#include "fbcast/error.hpp"
#include "fbcast/rng.hpp"

namespace fbcast {

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string("RadioConfig.") + field + " must be finite and > 0");
}

// Number of outage events among samples [first, first + count) of the stream
// family rooted at `seed`. Points of the PPP are generated in increasing
// distance from the typical user: pi * lambda * r_k^2 are the arrival times of
// a unit-rate Poisson process. The aggregate only grows, so a sample is
// decided as soon as it crosses the threshold or leaves the disk. Points beyond
// the disk enter through the mean of their aggregate.
struct OutageKernel {
  double point_rate;      // lambda_bs * p_cach[n]
  double threshold;       // (2^alpha_n - 1) / gamma_tx minus the tail mean, path-gain units
  double r2_max;          // disk radius squared
  double half_exp;        // e / 2

  std::uint64_t count_chunk(std::uint64_t seed, std::uint64_t chunk, std::uint64_t count) const {
    if (point_rate <= 0.0) return count;
    Rng rng(stream_seed(seed, chunk));
    const double scale = 1.0 / (std::numbers::pi * point_rate);
    const bool quartic = half_exp == 2.0;
    std::uint64_t outages = 0;
    for (std::uint64_t s = 0; s < count; ++s) {
      double arrival = 0.0;
      double gain = 0.0;
      bool covered = false;
      for (;;) {
        arrival += exponential1(rng);
        const double r2 = arrival * scale;
        if (r2 > r2_max) break;
        const double fading = exponential1(rng);
        gain += fading * (quartic ? 1.0 / (r2 * r2) : std::pow(r2, -half_exp));
        if (gain > threshold) {
          covered = true;
          break;
        }
      }
      if (!covered) ++outages;
    }
    return outages;
  }
};

OutageKernel make_kernel(const RadioConfig& cfg, const SlotAction& action, std::size_t n,
                         std::uint64_t samples, const McOptions& opts, double& radius) {
  cfg.validate();
  if (samples == 0) throw DomainError("mc_outage_oracle: samples must be >= 1");
  if (n >= action.alpha.size() || n >= action.p_cach.size())
    throw DomainError("mc_outage_oracle: file index out of range");
  if (!(cfg.path_loss_exp > 2.0))
    throw UnsupportedModelError("mc_outage_oracle: path-loss exponent must exceed 2");
  if (opts.chunk_size == 0) throw DomainError("mc_outage_oracle: chunk_size must be >= 1");

  const double gamma_tx = gamma_R(cfg, harmonic_number(action.n_hb)) / inverse_alpha_sum(action.alpha);
  OutageKernel k{};
  k.point_rate = cfg.lambda_bs * action.p_cach[n];
  k.threshold = (std::exp2(action.alpha[n]) - 1.0) / gamma_tx;
  k.half_exp = 0.5 * cfg.path_loss_exp;
  radius = mc_disk_radius(cfg, action, n, opts);
  k.r2_max = radius * radius;
  const double e = cfg.path_loss_exp;
  k.threshold -= 2.0 * std::numbers::pi * k.point_rate * std::pow(radius, 2.0 - e) / (e - 2.0);
  return k;
}

McEstimate finish(std::uint64_t outages, std::uint64_t samples, double radius) {
  McEstimate est;
  est.samples = samples;
  est.outages = outages;
  est.probability = static_cast<double>(outages) / static_cast<double>(samples);
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(samples));
  est.disk_radius = radius;
  return est;
}

}  // namespace

void RadioConfig::validate() const {
  require_positive(lambda_bs, "lambda_bs");
  require_positive(p_tx, "p_tx");
  require_positive(n0, "n0");
  require_positive(antenna_gain, "antenna_gain");
  require_positive(path_loss_ref, "path_loss_ref");
  require_positive(path_loss_exp, "path_loss_exp");
  require_positive(rate_R, "rate_R");
  require_positive(file_len_L, "file_len_L");
  if (num_files_N == 0) throw DomainError("RadioConfig.num_files_N must be >= 1");
  if (cache_cap_C == 0 || cache_cap_C > num_files_N)
    throw DomainError("RadioConfig.cache_cap_C must satisfy 1 <= cache_cap_C <= num_files_N");
}

void validate_action(const SlotAction& action, std::size_t num_files, std::size_t cap) {
  if (action.p_cach.size() != num_files || action.alpha.size() != num_files)
    throw DomainError("SlotAction: vectors must have one entry per file");
  double sum = 0.0;
  for (std::size_t i = 0; i < num_files; ++i) {
    const double p = action.p_cach[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw DomainError("SlotAction: p_cach[" + std::to_string(i) + "] outside [0, 1]");
    if (!(action.alpha[i] > 0.0) || !std::isfinite(action.alpha[i]))
      throw DomainError("SlotAction: alpha[" + std::to_string(i) + "] must be > 0");
    sum += p;
  }
  if (std::abs(sum - static_cast<double>(cap)) > kCacheSumTolerance)
    throw DomainError("SlotAction: sum of p_cach is " + std::to_string(sum) + ", expected " +
                      std::to_string(cap));
  if (action.n_hb < 1) throw DomainError("SlotAction: n_hb must be >= 1");
}

double harmonic_number(long m) {
  if (m < 1) throw DomainError("harmonic_number: m must be >= 1");
  double h = 0.0;
  for (long i = 1; i <= m; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

long inverse_harmonic(double target_nhb) {
  if (!(target_nhb >= 1.0) || !std::isfinite(target_nhb))
    throw DomainError("inverse_harmonic: target must be >= 1");
  // Same addition order as harmonic_number, so H(m) round-trips exactly.
  double h = 1.0;
  long m = 1;
  for (;;) {
    const double next = h + 1.0 / static_cast<double>(m + 1);
    if (next > target_nhb) return m;
    h = next;
    ++m;
  }
}

double slot_duration(double file_len_L, long m) {
  if (m < 1) throw DomainError("slot_duration: m must be >= 1");
  return file_len_L / static_cast<double>(m);
}

double inverse_alpha_sum(std::span<const double> alpha) {
  double s = 0.0;
  for (double a : alpha) {
    if (!(a > 0.0)) throw DomainError("spectral efficiencies must be > 0");
    s += 1.0 / a;
  }
  return s;
}

double eta(std::span<const double> alpha, std::size_t n) {
  if (n >= alpha.size()) throw DomainError("eta: file index out of range");
  const double inv_sum = inverse_alpha_sum(alpha);
  return (std::exp2(alpha[n]) - 1.0) * inv_sum;
}

double gamma_R(const RadioConfig& cfg, double n_hb_value) {
  if (!(n_hb_value >= 1.0)) throw DomainError("gamma_R: harmonic number must be >= 1");
  return (cfg.p_tx * cfg.antenna_gain / (cfg.n0 * cfg.path_loss_ref)) / (cfg.rate_R * n_hb_value);
}

namespace {

double outage_from(double lambda_bs, double p, double gamma_r, double alpha_n, double inv_sum) {
  const double eta_n = (std::exp2(alpha_n) - 1.0) * inv_sum;
  const double arg = std::numbers::pi * std::numbers::pi * lambda_bs * p / 4.0 * std::sqrt(gamma_r / eta_n);
  return std::erfc(arg);
}

void require_quartic(const RadioConfig& cfg) {
  if (cfg.path_loss_exp != 4.0)
    throw UnsupportedModelError(
        "outage_analytic: closed form needs path-loss exponent 4; use mc_outage_oracle");
}

}  // namespace

double outage_analytic(const RadioConfig& cfg, const SlotAction& action, std::size_t n) {
  require_quartic(cfg);
  if (n >= action.p_cach.size() || n >= action.alpha.size())
    throw DomainError("outage_analytic: file index out of range");
  const double inv_sum = inverse_alpha_sum(action.alpha);
  return outage_from(cfg.lambda_bs, action.p_cach[n], gamma_R(cfg, harmonic_number(action.n_hb)),
                     action.alpha[n], inv_sum);
}

std::vector<double> outage_vector(const RadioConfig& cfg, const SlotAction& action) {
  require_quartic(cfg);
  if (action.p_cach.size() != action.alpha.size())
    throw DomainError("outage_vector: p_cach and alpha differ in length");
  const double inv_sum = inverse_alpha_sum(action.alpha);
  const double gr = gamma_R(cfg, harmonic_number(action.n_hb));
  std::vector<double> out(action.p_cach.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = outage_from(cfg.lambda_bs, action.p_cach[i], gr, action.alpha[i], inv_sum);
  return out;
}

double bandwidth_total(const RadioConfig& cfg, const SlotAction& action) {
  return harmonic_number(action.n_hb) * cfg.rate_R * inverse_alpha_sum(action.alpha);
}

double mc_disk_radius(const RadioConfig& cfg, const SlotAction& action, std::size_t n,
                      const McOptions& opts) {
  if (opts.disk_radius > 0.0) return opts.disk_radius;
  if (!(opts.tail_tolerance > 0.0)) throw DomainError("McOptions.tail_tolerance must be > 0");
  const double e = cfg.path_loss_exp;
  const double gamma_tx = gamma_R(cfg, harmonic_number(action.n_hb)) / inverse_alpha_sum(action.alpha);
  const double threshold = (std::exp2(action.alpha.at(n)) - 1.0) / gamma_tx;
  const double rate = cfg.lambda_bs * action.p_cach.at(n);
  if (rate <= 0.0) return 1.0;
  // E[sum beyond R] = 2 pi lambda R^(2-e) / (e-2)
  const double r = std::pow(2.0 * std::numbers::pi * rate / ((e - 2.0) * opts.tail_tolerance * threshold),
                            1.0 / (e - 2.0));
  return r;
}

McEstimate mc_outage_oracle_serial(const RadioConfig& cfg, const SlotAction& action,
                                   std::size_t n, std::uint64_t samples, std::uint64_t seed,
                                   const McOptions& opts) {
  double radius = 0.0;
  const OutageKernel k = make_kernel(cfg, action, n, samples, opts, radius);
  const std::uint64_t chunks = (samples + opts.chunk_size - 1) / opts.chunk_size;
  std::uint64_t outages = 0;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    const std::uint64_t first = c * opts.chunk_size;
    const std::uint64_t count = std::min(opts.chunk_size, samples - first);
    outages += k.count_chunk(seed, c, count);
  }
  return finish(outages, samples, radius);
}

McEstimate mc_outage_oracle(const RadioConfig& cfg, const SlotAction& action, std::size_t n,
                            std::uint64_t samples, std::uint64_t seed, const McOptions& opts) {
  double radius = 0.0;
  const OutageKernel k = make_kernel(cfg, action, n, samples, opts, radius);
  const auto chunks = static_cast<std::int64_t>((samples + opts.chunk_size - 1) / opts.chunk_size);
  std::uint64_t outages = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : outages)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const auto uc = static_cast<std::uint64_t>(c);
    const std::uint64_t first = uc * opts.chunk_size;
    const std::uint64_t count = std::min(opts.chunk_size, samples - first);
    outages += k.count_chunk(seed, uc, count);
  }
  return finish(outages, samples, radius);
}

}  // namespace fbcast
