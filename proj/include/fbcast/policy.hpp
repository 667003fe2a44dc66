#pragma once

// Stochastic actor head: Gaussian raw vectors for cache placement and spectral
// efficiency, a categorical over a harmonic-index menu, and the deterministic
// transforms that turn raw samples into feasible slot actions.
//
// Log-probabilities are taken in raw space; the projection and softplus are
// treated as part of the environment and never differentiated.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fbcast/dynamics.hpp"
#include "fbcast/netmodel.hpp"
#include "fbcast/nn.hpp"
#include "fbcast/rng.hpp"

namespace fbcast {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kDefaultAlphaFloor = 0.05;

struct HarmonicMenu {
  std::vector<long> values{1, 2, 5, 10, 20, 50, 100, 200, 620};
  void validate() const;
};

struct PolicyHead {
  MlpParams actor;
  std::size_t num_files = 0;
  std::size_t cache_cap = 0;
  HarmonicMenu menu;
  double alpha_floor = kDefaultAlphaFloor;

  std::size_t feature_size() const { return num_files + 1; }
  std::size_t output_size() const { return 4 * num_files + menu.values.size(); }
};

// Actor with the given hidden widths. Log-std output biases start at
// `init_log_std`.
PolicyHead make_policy_head(std::size_t num_files, std::size_t cache_cap, HarmonicMenu menu,
                            const std::vector<std::size_t>& hidden, std::uint64_t seed,
                            double init_log_std = -0.5, double alpha_floor = kDefaultAlphaFloor);

// (p_req, t/T) with t counted from 1.
std::vector<double> state_features(const ForwardState& state, std::size_t horizon);

struct RawSample {
  std::vector<double> cache;
  std::vector<double> alpha;
  std::size_t harmonic_choice = 0;
};

struct SampledAction {
  SlotAction action;
  RawSample raw;
  double log_prob = 0.0;
};

// Euclidean projection onto {0 <= x <= 1, sum x = cap}: bisection on the shift
// tau with sum clip(raw - tau, 0, 1) = cap, then an exact solve of tau on the
// identified active set.
std::vector<double> transform_cache(std::span<const double> raw, std::size_t cap);

// softplus(raw) + floor.
std::vector<double> transform_alpha(std::span<const double> raw, double floor = kDefaultAlphaFloor);

SlotAction to_action(const PolicyHead& head, const RawSample& raw);

SampledAction sample_action(const PolicyHead& head, std::span<const double> features, Rng& rng);

// Means for the Gaussian channels, most likely harmonic index.
SampledAction greedy_action(const PolicyHead& head, std::span<const double> features);

// Log-density, entropy, and their derivatives with respect to the network
// outputs for one (state, raw sample) pair. `cache` holds the forward pass.
struct PolicyTerms {
  double log_prob = 0.0;
  double entropy = 0.0;
  std::vector<double> dlogp_dout;
  std::vector<double> dentropy_dout;
  MlpCache cache;
};

PolicyTerms policy_terms(const PolicyHead& head, std::span<const double> features, const RawSample& raw);

struct LogProbGrad {
  double log_prob = 0.0;
  MlpGradient grad;
};

LogProbGrad log_prob_and_grad(const PolicyHead& head, std::span<const double> features, const RawSample& raw);

// Head checkpoint: "FBHEAD01", N, C, alpha floor, menu, then the actor network.
void save_policy(std::ostream& os, const PolicyHead& head);
PolicyHead load_policy(std::istream& is);

// Acts with a policy head, either sampling or greedily.
class HeadPolicy : public ActionSource {
public:
  HeadPolicy(const PolicyHead& head, bool greedy) : head_(&head), greedy_(greedy) {}
  SlotAction act(const ForwardState& state, std::size_t horizon, Rng& rng) override;

private:
  const PolicyHead* head_;
  bool greedy_;
};

}  // namespace fbcast
