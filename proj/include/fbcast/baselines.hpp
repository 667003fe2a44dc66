#pragma once

// Reference policies: rule-based LFU multicast, forward-only learned multicast
// (A2C- and PPO-style), and an on-demand unicast model.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fbcast/dynamics.hpp"
#include "fbcast/fbmoac.hpp"
#include "fbcast/netmodel.hpp"
#include "fbcast/policy.hpp"

namespace fbcast {

// --- LFU ---------------------------------------------------------------------

struct LfuState {
  std::vector<double> freq;        // running sums of observed p_req
  std::vector<double> alpha_star;  // fixed spectral efficiencies
  long m_star = 1;                 // fixed harmonic index
};

LfuState make_lfu(std::size_t num_files, std::vector<double> alpha_star, long m_star);

// Accumulate p_req, cache the C most frequent files (ties to the lower index).
SlotAction lfu_policy_step(LfuState& state, const ForwardState& obs, std::size_t cap);

// Time-averaged spectral efficiencies (per file) and harmonic number of a set of
// trajectories, mapped back to an index with inverse_harmonic.
LfuState lfu_from_trajectories(std::span<const Trajectory> trajs);

class LfuPolicy : public ActionSource {
public:
  LfuPolicy(LfuState initial, std::size_t cap) : initial_(std::move(initial)), state_(initial_), cap_(cap) {}
  void begin_episode(std::size_t) override { state_ = initial_; }
  SlotAction act(const ForwardState& state, std::size_t horizon, Rng& rng) override;

private:
  LfuState initial_;
  LfuState state_;
  std::size_t cap_;
};

// --- forward-only learners -----------------------------------------------------

enum class ForwardOnlyVariant { a2c, ppo };

struct PpoConfig {
  double clip = 0.2;
  std::size_t epochs = 4;
};

// Gradient of the clipped surrogate
//   -(1/T) sum_t min(rho_t A_t, clip(rho_t, 1-eps, 1+eps) A_t) - c (1/T) sum_t H_t
// with rho_t = exp(log pi(a_t|s_t) - old_log_prob_t).
ActorGradient ppo_actor_gradient(const PolicyHead& head, const std::vector<std::vector<double>>& features,
                                 const std::vector<RawSample>& raw, std::span<const double> old_log_prob,
                                 std::span<const double> advantages, double clip, double entropy_coef);

// Learns from forward rewards only: (r_qos, r_bw, d(t)), with the slot
// duration standing in for the latency objective. Preference weights are read
// in that order.
class ForwardOnlyLearner {
public:
  ForwardOnlyLearner(Environment env, LearnerConfig cfg, ForwardOnlyVariant variant, PpoConfig ppo = {});

  EpisodeStats train_episode();
  std::vector<EpisodeStats> train(std::size_t episodes, std::ostream* csv = nullptr);

  const PolicyHead& actor() const { return actor_; }
  const MlpParams& critic() const { return critic_; }
  ForwardOnlyVariant variant() const { return variant_; }

private:
  Environment env_;
  LearnerConfig cfg_;
  ForwardOnlyVariant variant_;
  PpoConfig ppo_;
  ObjectiveScales scales_;
  PolicyHead actor_;
  MlpParams critic_;
  AdamState adam_actor_, adam_critic_;
  RunningMoments moments_;
  std::size_t episode_ = 0;
};

// Trains a forward-only policy for cfg.episodes episodes and returns its head.
PolicyHead forward_only_learner(ForwardOnlyVariant variant, const Environment& env, const LearnerConfig& cfg,
                                std::ostream* csv = nullptr, PpoConfig ppo = {});

// --- unicast -------------------------------------------------------------------

// On-demand unicast: every UE gets a dedicated band from its nearest BS.
struct UnicastConfig {
  double lambda_ue = 1000.0;   // UEs / km^2
  double area_km2 = 1.0;       // area whose aggregate bandwidth is reported
  double alpha_uc = 0.0;       // spectral efficiency; <= 0 selects it from target_outage
  double target_outage = 0.01;

  void validate() const;
};

// Nearest-BS Rayleigh outage at spectral efficiency `alpha_uc`. Each BS splits
// p_tx over its cell's (lambda_ue / lambda_bs) users in proportion to
// bandwidth; with path-loss exponent 4 the success probability is
// sqrt(pi) z erfcx(z), z = pi lambda_bs / (2 sqrt(s)), s = (2^alpha - 1) / snr_tx.
double unicast_outage(const RadioConfig& radio, const UnicastConfig& uc, double alpha_uc);

// Largest spectral efficiency whose unicast outage stays within the target.
double tune_unicast_alpha(const RadioConfig& radio, const UnicastConfig& uc);

// Per-slot (r_qos, r_bw, r_lat = 0) for an episode of popularity `track`.
std::vector<RewardVector> unicast_eval(const UnicastConfig& uc, const RadioConfig& radio,
                                       const PopularityTrack& track);

// Mean undiscounted cumulative unicast costs over the evaluation seeds.
std::array<double, 3> evaluate_unicast(const UnicastConfig& uc, const Environment& env,
                                       std::span<const std::uint64_t> eval_seeds);

}  // namespace fbcast
