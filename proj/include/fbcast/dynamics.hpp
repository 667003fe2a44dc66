#pragma once

// Forward-backward MDP of the streaming network.
//
// Slots are 0-based in code: t = 0 .. T-1 corresponds to slots 1 .. T. The
// forward state is the request distribution p_req(t); the backward state is the
// expected latency L(t), obtained from the boundary L(T+1) = 0 by running the
// latency recursion from the last slot towards the first.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fbcast/netmodel.hpp"
#include "fbcast/rng.hpp"

namespace fbcast {

inline constexpr double kSimplexTolerance = 1e-9;

struct ForwardState {
  std::vector<double> p_req;
  std::size_t slot = 0;
};

struct BackwardState {
  std::vector<double> lat;
  std::size_t slot = 0;
};

struct RewardVector {
  double r_qos = 0.0;  // probability
  double r_bw = 0.0;   // Hz
  double r_lat = 0.0;  // s
};

// Time-varying Zipf popularity: T rows of N probabilities, row-major.
struct PopularityTrack {
  std::size_t num_files = 0;
  std::size_t horizon = 0;
  double skew = 0.0;
  std::size_t churn_k = 0;
  std::uint64_t seed = 0;
  std::vector<double> p_pop;

  std::span<const double> row(std::size_t t) const {
    return {p_pop.data() + t * num_files, num_files};
  }
};

struct PopularityParams {
  std::size_t horizon = 256;
  double skew = 0.6;
  std::size_t churn_k = 0;  // 0 with `auto_churn` selects ceil(N / 10)
  bool auto_churn = true;

  std::size_t churn_for(std::size_t num_files) const {
    return auto_churn ? (num_files + 9) / 10 : churn_k;
  }
};

// Zipf(skew) over the identity ranking in row 0; every later row re-ranks the
// previous one by `churn_k` uniformly chosen adjacent transpositions.
PopularityTrack make_popularity(std::size_t num_files, std::size_t horizon, double skew,
                                std::size_t churn_k, std::uint64_t seed);

// Request dynamics: repeated requests after outage plus fresh popularity-driven
// requests from the satisfied mass. Throws DomainError on non-simplex inputs.
std::vector<double> forward_step(std::span<const double> prev_p_req,
                                 std::span<const double> outage_prev,
                                 std::span<const double> pop_t);

ForwardState forward_step(const ForwardState& prev, std::span<const double> outage_prev,
                          std::span<const double> pop_t);

// Latency recursion L(t) = O(t) (d + L(t+1)) + (1 - O(t)) d / 2.
std::vector<double> backward_step(std::span<const double> next_lat, std::span<const double> outage_t,
                                  double d_t);

RewardVector slot_rewards(const ForwardState& state, const SlotAction& action,
                          std::span<const double> outage, std::span<const double> lat,
                          const RadioConfig& cfg);

struct Trajectory {
  std::vector<ForwardState> forward;
  std::vector<SlotAction> actions;
  std::vector<std::vector<double>> outage;
  std::vector<double> duration;
  std::vector<RewardVector> rewards;
  std::vector<BackwardState> backward;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::size_t size() const { return forward.size(); }
  double wall_clock() const;
};

// Anything that can choose slot actions: learned heads, LFU, fixed actions.
class ActionSource {
public:
  virtual ~ActionSource() = default;
  virtual void begin_episode(std::size_t /*horizon*/) {}
  virtual SlotAction act(const ForwardState& state, std::size_t horizon, Rng& rng) = 0;
};

// Forward pass (actions, outages, durations, request dynamics), then the
// time-reversed backward pass, then per-slot rewards. The policy RNG is seeded
// from `seed`.
Trajectory rollout(ActionSource& policy, const PopularityTrack& pop, const RadioConfig& cfg,
                   std::uint64_t seed);

// Recompute backward states and rewards of a trajectory whose forward part is
// filled in (used by tests that hand-set outages).
void backward_pass(Trajectory& traj, const RadioConfig& cfg);

inline constexpr const char* kTrajectorySchema = "fbcast.trajectory/1";

// One row per slot: t, d, m, r_qos, r_bw, r_lat, cache_sum, outage_min, outage_max.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace fbcast
