#pragma once

// Forward-backward multi-objective actor-critic.
//
// Each episode runs three phases in order: a forward rollout that samples
// actions from the actor, a backward pass that evaluates the latency
// recursion from the horizon towards the first slot, and a bidirectional
// update in which a forward critic (QoS, bandwidth) and a backward critic
// (latency, evaluated along the reversed sequence) produce per-objective TD(0)
// advantages. Advantages are normalized by exponential moving moments and
// scalarized with preference weights before the actor step.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fbcast/dynamics.hpp"
#include "fbcast/netmodel.hpp"
#include "fbcast/nn.hpp"
#include "fbcast/policy.hpp"

namespace fbcast {

struct LearnerConfig {
  double gamma = 0.99;
  std::array<double, 3> preference{1.0, 0.3, 0.3};  // QoS, bandwidth, latency
  double gamma_mov = 0.95;
  double lr_actor = 3e-4;
  double lr_forward_critic = 3e-4;
  double lr_backward_critic = 3e-4;
  std::size_t episodes = 2000;
  double entropy_coef = 1e-3;
  std::uint64_t seed = 1;
  std::vector<std::size_t> hidden{100};
  double init_log_std = -0.5;
  HarmonicMenu menu;
  double alpha_floor = kDefaultAlphaFloor;

  void validate() const;
};

// Fixed divisors that bring the three costs to comparable magnitude for the
// critics and for reported scalarized returns.
struct ObjectiveScales {
  double qos = 1.0;
  double bw = 1.0;   // N * R: bandwidth of unit spectral efficiency without HB
  double lat = 1.0;  // file length L

  static ObjectiveScales from(const RadioConfig& cfg);
  double operator[](std::size_t i) const { return i == 0 ? qos : i == 1 ? bw : lat; }
};

// The environment a learner trains in: physics plus the popularity process.
// Every episode draws a fresh popularity track from its own seed.
struct Environment {
  RadioConfig radio;
  PopularityParams popularity;

  PopularityTrack track(std::uint64_t seed) const;
};

// Samples from a head and keeps what the update needs.
class RecordingPolicy : public ActionSource {
public:
  explicit RecordingPolicy(const PolicyHead& head) : head_(&head) {}
  void begin_episode(std::size_t horizon) override;
  SlotAction act(const ForwardState& state, std::size_t horizon, Rng& rng) override;

  std::vector<std::vector<double>> features;
  std::vector<RawSample> raw;
  std::vector<double> log_prob;

private:
  const PolicyHead* head_;
};

struct CriticPair {
  MlpParams forward;   // (p_req, t/T) -> one value per forward objective
  MlpParams backward;  // (L / L_file, t/T) -> latency value
};

CriticPair make_critics(std::size_t num_files, const std::vector<std::size_t>& hidden, std::uint64_t seed,
                        std::size_t forward_outputs = 2);

std::vector<double> backward_features(const BackwardState& state, std::size_t horizon, double file_len);

// A(t) = -cost(t) + gamma v(t+1) - v(t) with v(T) = 0.
std::vector<double> td0_advantages(std::span<const double> cost, std::span<const double> values, double gamma);

// Per slot: {A_qos, A_bw} from the forward critic on scaled costs.
std::vector<std::array<double, 2>> forward_advantages(const Trajectory& traj, const MlpParams& forward_critic,
                                                      double gamma, const ObjectiveScales& scales);

// Backward-critic inputs per slot: the state the reversed process is in just
// before slot t acts, y(t+1), with the all-zero boundary for the last slot.
std::vector<std::vector<double>> backward_inputs(const Trajectory& traj, const ObjectiveScales& scales);

// Latency advantages along the reversed sequence y(T+1) -> y(1), indexed by
// slot: A_lat(t) = -r_lat(t) + gamma V(y(t)) - V(y(t+1)), zero value after y(1).
std::vector<double> backward_advantages(const Trajectory& traj, const MlpParams& backward_critic, double gamma,
                                        const ObjectiveScales& scales);

// Exponential moving mean/variance per objective, initialized to (0, 1).
struct RunningMoments {
  std::vector<double> mean;
  std::vector<double> var;
  double smoothing = 0.95;

  RunningMoments() = default;
  RunningMoments(std::size_t objectives, double smoothing);
  void update(std::size_t objective, std::span<const double> batch);
  double normalize(std::size_t objective, double x) const;
};

// One semi-gradient step on 1/(2T) sum_t ||delta(t)||^2, where delta(t) is the
// TD error per critic output (targets held fixed). Returns the loss.
double critic_step(MlpParams& critic, AdamState& adam, const std::vector<std::vector<double>>& inputs,
                   const std::vector<std::vector<double>>& td_errors);

struct ActorGradient {
  MlpGradient grad;
  double mean_entropy = 0.0;
};

// Gradient of -(1/T) sum_t [log pi(a_t|s_t) A(t) + entropy_coef H(pi(.|s_t))].
ActorGradient actor_gradient(const PolicyHead& head, const std::vector<std::vector<double>>& features,
                             const std::vector<RawSample>& raw, std::span<const double> advantages,
                             double entropy_coef);

// Discounted costs as in the FB-MDP objective: forward costs discounted from
// the first slot, latency discounted from the last.
std::array<double, 3> discounted_costs(const Trajectory& traj, double gamma);

// -sum_i w_i J_i / scale_i
double scalarized_return(const std::array<double, 3>& costs, const std::array<double, 3>& preference,
                         const ObjectiveScales& scales);

struct EpisodeStats {
  std::size_t episode = 0;
  std::array<double, 3> cost{};  // discounted cumulative r_qos, r_bw, r_lat
  double scalarized = 0.0;
  double entropy = 0.0;
};

inline constexpr const char* kEpisodeSchema = "fbcast.episodes/1";
void write_episode_header(std::ostream& os);
void write_episode_row(std::ostream& os, const EpisodeStats& s);

class FbMoacLearner {
public:
  FbMoacLearner(Environment env, LearnerConfig cfg);

  EpisodeStats train_episode();
  // Runs `episodes` more episodes, streaming rows to `csv` when given.
  std::vector<EpisodeStats> train(std::size_t episodes, std::ostream* csv = nullptr);

  const PolicyHead& actor() const { return actor_; }
  PolicyHead& actor() { return actor_; }
  const CriticPair& critics() const { return critics_; }
  CriticPair& critics() { return critics_; }
  const RunningMoments& moments() const { return moments_; }
  const Environment& env() const { return env_; }
  const LearnerConfig& config() const { return cfg_; }
  std::size_t episodes_done() const { return episode_; }

private:
  Environment env_;
  LearnerConfig cfg_;
  ObjectiveScales scales_;
  PolicyHead actor_;
  CriticPair critics_;
  AdamState adam_actor_, adam_forward_, adam_backward_;
  RunningMoments moments_;
  std::size_t episode_ = 0;
};

// --- Pareto evaluation -----------------------------------------------------

using PolicyFactory = std::function<std::unique_ptr<ActionSource>()>;

struct NamedPolicy {
  std::string name;
  PolicyFactory make;
};

struct PolicyCosts {
  std::string name;
  std::array<double, 3> cost{};  // mean undiscounted cumulative r_qos, r_bw, r_lat
};

// x dominates y iff x <= y in every cost and x < y in at least one.
bool pareto_dominates(const std::array<double, 3>& x, const std::array<double, 3>& y);

struct DominanceReport {
  std::vector<PolicyCosts> policies;
  std::vector<std::pair<std::size_t, std::size_t>> dominates;  // (winner, loser)

  bool is_dominated(std::size_t i) const;
  bool dominates_pair(std::size_t winner, std::size_t loser) const;
};

DominanceReport dominance_report(std::vector<PolicyCosts> policies);

// Mean undiscounted cumulative costs over one rollout per evaluation seed.
// Seeds are spread over OpenMP threads; each thread builds its own policy.
std::array<double, 3> evaluate_policy(const PolicyFactory& make, const Environment& env,
                                      std::span<const std::uint64_t> eval_seeds);

// Single-threaded reference for evaluate_policy; identical results.
std::array<double, 3> evaluate_policy_serial(const PolicyFactory& make, const Environment& env,
                                             std::span<const std::uint64_t> eval_seeds);

DominanceReport pareto_eval(const std::vector<NamedPolicy>& policies, const Environment& env,
                            std::span<const std::uint64_t> eval_seeds);

std::array<double, 3> cumulative_costs(const Trajectory& traj);

}  // namespace fbcast
