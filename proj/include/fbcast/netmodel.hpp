#pragma once

// Physical layer of the cache-aided multicast network: harmonic broadcasting,
// OMPMC outage under a PPP of caching base stations, and bandwidth accounting.
//
// Distances are in units of the 1 km reference distance, intensities in points
// per km^2. Every quantity here is linear-scale SI; dB conversions happen once
// when a configuration is loaded.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fbcast {

struct RadioConfig {
  double lambda_bs = 100.0;       // BS intensity, points / km^2
  double p_tx = 0.19952623149688797;  // W (23 dBm)
  double n0 = 3.1622776601683795e-20; // W/Hz (-174 dBm/Hz + 9 dB noise figure)
  double antenna_gain = 6.309573444801933;  // linear (8 dBi)
  double path_loss_ref = 6.456542290346556e12;  // linear, 128.1 dB at 1 km
  double path_loss_exp = 4.0;
  double rate_R = 1e6;            // bit/s
  double file_len_L = 600.0;      // s
  std::size_t num_files_N = 200;
  std::size_t cache_cap_C = 10;

  // Throws DomainError naming the offending field.
  void validate() const;
};

// Per-slot control a(t). `n_hb` is the harmonic index M, so the bandwidth
// inflation is H(M) and the slot lasts L / M.
struct SlotAction {
  std::vector<double> p_cach;
  std::vector<double> alpha;
  long n_hb = 1;
};

inline constexpr double kCacheSumTolerance = 1e-9;

// Throws DomainError if the action breaks the capped-simplex, positivity or
// harmonic-index constraints for a library of `num_files` and capacity `cap`.
void validate_action(const SlotAction& action, std::size_t num_files, std::size_t cap);

double harmonic_number(long m);

// Largest m with H(m) <= target.
long inverse_harmonic(double target_nhb);

double slot_duration(double file_len_L, long m);

// Sum over the library of 1 / alpha_m.
double inverse_alpha_sum(std::span<const double> alpha);

double eta(std::span<const double> alpha, std::size_t n);

// (p_tx G / (N0 PL_ref)) / (R N_hb): the receive SNR scale at the reference
// distance per unit of spectral-efficiency-normalized bandwidth.
double gamma_R(const RadioConfig& cfg, double n_hb_value);

// Closed-form outage for path-loss exponent 4 (Rayleigh fading, PPP of
// intensity lambda_bs * p_cach[n]). Throws UnsupportedModelError otherwise.
double outage_analytic(const RadioConfig& cfg, const SlotAction& action, std::size_t n);

// outage_analytic for every file, sharing the alpha sum.
std::vector<double> outage_vector(const RadioConfig& cfg, const SlotAction& action);

// W = H(M) * sum_n R / alpha_n, in Hz.
double bandwidth_total(const RadioConfig& cfg, const SlotAction& action);

struct McEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t outages = 0;
  double disk_radius = 0.0;
};

struct McOptions {
  // <= 0 selects the radius from `tail_tolerance`.
  double disk_radius = 0.0;
  // Expected aggregate path gain beyond the disk, as a fraction of the
  // decoding threshold (in path-gain units). That expectation is added to
  // every sample, so only the tail's fluctuation is neglected.
  double tail_tolerance = 1e-2;
  // Samples per RNG stream. Fixed so results do not depend on thread count.
  std::uint64_t chunk_size = 4096;
};

// Disk radius for the Monte-Carlo oracle under `opts`.
double mc_disk_radius(const RadioConfig& cfg, const SlotAction& action, std::size_t n,
                      const McOptions& opts = {});

// Brute-force spatial estimate of the outage of file n. Works for any
// path-loss exponent > 2. OpenMP-parallel over chunks; bit-identical to
// mc_outage_oracle_serial for the same arguments.
McEstimate mc_outage_oracle(const RadioConfig& cfg, const SlotAction& action, std::size_t n,
                            std::uint64_t samples, std::uint64_t seed, const McOptions& opts = {});

McEstimate mc_outage_oracle_serial(const RadioConfig& cfg, const SlotAction& action,
                                   std::size_t n, std::uint64_t samples, std::uint64_t seed,
                                   const McOptions& opts = {});

}  // namespace fbcast
