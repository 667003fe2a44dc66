#include "fbcast/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "fbcast/csv.hpp"
#include "fbcast/error.hpp"

namespace fbcast {

namespace {

void require_simplex(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw DomainError(std::string(what) + " does not sum to 1 (sum = " + fmt_double(sum) + ")");
}

void require_probabilities(std::span<const double> o, const char* what) {
  for (double v : o)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " entry outside [0, 1]");
}

}  // namespace

PopularityTrack make_popularity(std::size_t num_files, std::size_t horizon, double skew,
                                std::size_t churn_k, std::uint64_t seed) {
  if (num_files == 0 || horizon == 0) throw DomainError("make_popularity: N and T must be >= 1");
  if (!(skew >= 0.0) || !std::isfinite(skew)) throw DomainError("make_popularity: skew must be >= 0");

  std::vector<double> weight(num_files);
  for (std::size_t r = 0; r < num_files; ++r) weight[r] = std::pow(static_cast<double>(r + 1), -skew);
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  for (double& w : weight) w /= total;

  PopularityTrack track;
  track.num_files = num_files;
  track.horizon = horizon;
  track.skew = skew;
  track.churn_k = churn_k;
  track.seed = seed;
  track.p_pop.resize(num_files * horizon);

  // order[rank] = file holding that rank
  std::vector<std::size_t> order(num_files);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(stream_seed(seed, 0x706f70));
  for (std::size_t t = 0; t < horizon; ++t) {
    if (t > 0 && num_files > 1) {
      for (std::size_t k = 0; k < churn_k; ++k) {
        const auto i = static_cast<std::size_t>(uniform_index(rng, num_files - 1));
        std::swap(order[i], order[i + 1]);
      }
    }
    double* row = track.p_pop.data() + t * num_files;
    for (std::size_t r = 0; r < num_files; ++r) row[order[r]] = weight[r];
  }
  return track;
}

std::vector<double> forward_step(std::span<const double> prev_p_req,
                                 std::span<const double> outage_prev,
                                 std::span<const double> pop_t) {
  const std::size_t n = prev_p_req.size();
  if (outage_prev.size() != n || pop_t.size() != n)
    throw DomainError("forward_step: size mismatch");
  require_simplex(prev_p_req, "forward_step: p_req");
  require_simplex(pop_t, "forward_step: popularity");
  require_probabilities(outage_prev, "forward_step: outage");

  // On the simplex served = 1 - deferred. Taking whichever side is derived
  // from the smaller sum makes the no-outage and full-outage limits exact.
  double served = 0.0, deferred = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    served += (1.0 - outage_prev[m]) * prev_p_req[m];
    deferred += outage_prev[m] * prev_p_req[m];
  }
  if (deferred <= served) served = 1.0 - deferred;
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) next[i] = prev_p_req[i] * outage_prev[i] + pop_t[i] * served;
  return next;
}

ForwardState forward_step(const ForwardState& prev, std::span<const double> outage_prev,
                          std::span<const double> pop_t) {
  return {forward_step(prev.p_req, outage_prev, pop_t), prev.slot + 1};
}

std::vector<double> backward_step(std::span<const double> next_lat, std::span<const double> outage_t,
                                  double d_t) {
  if (next_lat.size() != outage_t.size()) throw DomainError("backward_step: size mismatch");
  if (!(d_t > 0.0)) throw DomainError("backward_step: slot duration must be > 0");
  require_probabilities(outage_t, "backward_step: outage");
  std::vector<double> lat(next_lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!(next_lat[i] >= 0.0)) throw DomainError("backward_step: negative latency");
    lat[i] = outage_t[i] * (d_t + next_lat[i]) + (1.0 - outage_t[i]) * 0.5 * d_t;
  }
  return lat;
}

RewardVector slot_rewards(const ForwardState& state, const SlotAction& action,
                          std::span<const double> outage, std::span<const double> lat,
                          const RadioConfig& cfg) {
  const std::size_t n = state.p_req.size();
  if (outage.size() != n || lat.size() != n) throw DomainError("slot_rewards: size mismatch");
  RewardVector r;
  for (std::size_t i = 0; i < n; ++i) {
    r.r_qos += state.p_req[i] * outage[i];
    r.r_lat += state.p_req[i] * lat[i];
  }
  r.r_bw = bandwidth_total(cfg, action);
  return r;
}

double Trajectory::wall_clock() const { return std::accumulate(duration.begin(), duration.end(), 0.0); }

void backward_pass(Trajectory& traj, const RadioConfig& cfg) {
  const std::size_t T = traj.size();
  const std::size_t n = cfg.num_files_N;
  traj.backward.assign(T, {});
  traj.rewards.assign(T, {});
  std::vector<double> next(n, 0.0);  // L(T+1) = 0
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = T - 1 - k;
    traj.backward[t] = {backward_step(next, traj.outage[t], traj.duration[t]), t};
    next = traj.backward[t].lat;
  }
  for (std::size_t t = 0; t < T; ++t)
    traj.rewards[t] = slot_rewards(traj.forward[t], traj.actions[t], traj.outage[t],
                                   traj.backward[t].lat, cfg);
}

Trajectory rollout(ActionSource& policy, const PopularityTrack& pop, const RadioConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  if (pop.num_files != cfg.num_files_N)
    throw DomainError("rollout: popularity track and radio config disagree on N");
  const std::size_t T = pop.horizon;
  Rng rng(stream_seed(seed, 0x726f6c6c));

  Trajectory traj;
  traj.seed = seed;
  traj.forward.reserve(T);
  traj.actions.reserve(T);
  traj.outage.reserve(T);
  traj.duration.reserve(T);

  policy.begin_episode(T);
  ForwardState state{std::vector<double>(pop.row(0).begin(), pop.row(0).end()), 0};
  for (std::size_t t = 0; t < T; ++t) {
    SlotAction action = policy.act(state, T, rng);
    try {
      validate_action(action, cfg.num_files_N, cfg.cache_cap_C);
    } catch (const DomainError& e) {
      throw EnvironmentError(t + 1, e.what());
    }
    std::vector<double> outage = outage_vector(cfg, action);
    traj.duration.push_back(slot_duration(cfg.file_len_L, action.n_hb));
    traj.forward.push_back(state);
    if (t + 1 < T) state = forward_step(state, outage, pop.row(t + 1));
    traj.actions.push_back(std::move(action));
    traj.outage.push_back(std::move(outage));
  }
  backward_pass(traj, cfg);
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_schema_line(os, kTrajectorySchema);
  os << "t,d,m,r_qos,r_bw,r_lat,cache_sum,outage_min,outage_max\n";
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& a = traj.actions[t];
    const auto& o = traj.outage[t];
    const auto [lo, hi] = std::minmax_element(o.begin(), o.end());
    const double cache_sum = std::accumulate(a.p_cach.begin(), a.p_cach.end(), 0.0);
    const auto& r = traj.rewards[t];
    os << (t + 1) << ',' << fmt_double(traj.duration[t]) << ',' << a.n_hb << ','
       << fmt_double(r.r_qos) << ',' << fmt_double(r.r_bw) << ',' << fmt_double(r.r_lat) << ','
       << fmt_double(cache_sum) << ',' << fmt_double(*lo) << ',' << fmt_double(*hi) << '\n';
  }
}

}  // namespace fbcast
