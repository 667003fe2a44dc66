#include "fbcast/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fbcast/error.hpp"

namespace fbcast {

LfuState make_lfu(std::size_t num_files, std::vector<double> alpha_star, long m_star) {
  if (alpha_star.size() != num_files) throw DomainError("make_lfu: alpha_star needs one entry per file");
  for (double a : alpha_star)
    if (!(a > 0.0)) throw DomainError("make_lfu: alpha_star entries must be > 0");
  if (m_star < 1) throw DomainError("make_lfu: m_star must be >= 1");
  return {std::vector<double>(num_files, 0.0), std::move(alpha_star), m_star};
}

SlotAction lfu_policy_step(LfuState& state, const ForwardState& obs, std::size_t cap) {
  const std::size_t n = state.freq.size();
  if (obs.p_req.size() != n) throw DomainError("lfu_policy_step: observation size mismatch");
  if (cap > n) throw DomainError("lfu_policy_step: capacity exceeds library size");
  for (std::size_t i = 0; i < n; ++i) state.freq[i] += obs.p_req[i];

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return state.freq[a] > state.freq[b]; });
  SlotAction a;
  a.p_cach.assign(n, 0.0);
  for (std::size_t k = 0; k < cap; ++k) a.p_cach[idx[k]] = 1.0;
  a.alpha = state.alpha_star;
  a.n_hb = state.m_star;
  return a;
}

LfuState lfu_from_trajectories(std::span<const Trajectory> trajs) {
  if (trajs.empty() || trajs.front().size() == 0) throw DomainError("lfu_from_trajectories: no slots");
  const std::size_t n = trajs.front().actions.front().alpha.size();
  std::vector<double> alpha(n, 0.0);
  double nhb = 0.0;
  std::size_t slots = 0;
  for (const auto& tr : trajs) {
    for (const auto& a : tr.actions) {
      for (std::size_t i = 0; i < n; ++i) alpha[i] += a.alpha.at(i);
      nhb += harmonic_number(a.n_hb);
      ++slots;
    }
  }
  for (double& v : alpha) v /= static_cast<double>(slots);
  return make_lfu(n, std::move(alpha), inverse_harmonic(nhb / static_cast<double>(slots)));
}

SlotAction LfuPolicy::act(const ForwardState& state, std::size_t, Rng&) {
  return lfu_policy_step(state_, state, cap_);
}

// --- forward-only learners ---------------------------------------------------

ActorGradient ppo_actor_gradient(const PolicyHead& head, const std::vector<std::vector<double>>& features,
                                 const std::vector<RawSample>& raw, std::span<const double> old_log_prob,
                                 std::span<const double> advantages, double clip, double entropy_coef) {
  const std::size_t T = features.size();
  if (raw.size() != T || old_log_prob.size() != T || advantages.size() != T || T == 0)
    throw DomainError("ppo_actor_gradient: size mismatch");
  const double inv_t = 1.0 / static_cast<double>(T);
  ActorGradient out{zeros_like(head.actor), 0.0};
  std::vector<double> g(head.output_size());
  for (std::size_t t = 0; t < T; ++t) {
    const PolicyTerms terms = policy_terms(head, features[t], raw[t]);
    const double ratio = std::exp(terms.log_prob - old_log_prob[t]);
    const double adv = advantages[t];
    // The unclipped branch is the active minimum unless the ratio has left the
    // trust region in the direction the advantage rewards.
    const bool active = adv >= 0.0 ? ratio < 1.0 + clip : ratio > 1.0 - clip;
    const double w = active ? adv * ratio : 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] = -inv_t * (w * terms.dlogp_dout[k] + entropy_coef * terms.dentropy_dout[k]);
    mlp_backward(head.actor, terms.cache, g, out.grad);
    out.mean_entropy += terms.entropy * inv_t;
  }
  return out;
}

ForwardOnlyLearner::ForwardOnlyLearner(Environment env, LearnerConfig cfg, ForwardOnlyVariant variant, PpoConfig ppo)
    : env_(std::move(env)),
      cfg_(std::move(cfg)),
      variant_(variant),
      ppo_(ppo),
      scales_(ObjectiveScales::from(env_.radio)) {
  env_.radio.validate();
  cfg_.validate();
  if (!(ppo_.clip > 0.0) || ppo_.epochs == 0) throw DomainError("PpoConfig: clip must be > 0 and epochs >= 1");
  const std::size_t n = env_.radio.num_files_N;
  actor_ = make_policy_head(n, env_.radio.cache_cap_C, cfg_.menu, cfg_.hidden, stream_seed(cfg_.seed, 0x6163),
                            cfg_.init_log_std, cfg_.alpha_floor);
  critic_ = make_critics(n, cfg_.hidden, stream_seed(cfg_.seed, 0x6372), 3).forward;
  adam_actor_ = make_adam(actor_.actor, cfg_.lr_actor);
  adam_critic_ = make_adam(critic_, cfg_.lr_forward_critic);
  moments_ = RunningMoments(3, cfg_.gamma_mov);
}

EpisodeStats ForwardOnlyLearner::train_episode() {
  const std::uint64_t ep_seed = stream_seed(cfg_.seed, episode_ + 1);
  const PopularityTrack track = env_.track(stream_seed(ep_seed, 1));
  RecordingPolicy rec(actor_);
  const Trajectory traj = rollout(rec, track, env_.radio, stream_seed(ep_seed, 2));
  const std::size_t T = traj.size();

  std::array<std::vector<double>, 3> cost, value;
  for (auto& c : cost) c.resize(T);
  for (auto& v : value) v.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    cost[0][t] = traj.rewards[t].r_qos / scales_.qos;
    cost[1][t] = traj.rewards[t].r_bw / scales_.bw;
    cost[2][t] = traj.duration[t] / scales_.lat;
    const auto v = mlp_forward(critic_, rec.features[t]);
    for (std::size_t i = 0; i < 3; ++i) value[i][t] = v[i];
  }
  std::array<std::vector<double>, 3> adv;
  for (std::size_t i = 0; i < 3; ++i) {
    adv[i] = td0_advantages(cost[i], value[i], cfg_.gamma);
    for (std::size_t t = 0; t < T; ++t)
      if (!std::isfinite(adv[i][t]))
        throw NumericalError("phase=forward-advantage slot=" + std::to_string(t + 1) + ": non-finite value");
    moments_.update(i, adv[i]);
  }
  std::vector<double> scalar(T, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < 3; ++i) scalar[t] += cfg_.preference[i] * moments_.normalize(i, adv[i][t]);

  std::vector<std::vector<double>> errors(T);
  for (std::size_t t = 0; t < T; ++t) errors[t] = {adv[0][t], adv[1][t], adv[2][t]};
  critic_step(critic_, adam_critic_, rec.features, errors);

  double entropy = 0.0;
  if (variant_ == ForwardOnlyVariant::a2c) {
    const ActorGradient ag = actor_gradient(actor_, rec.features, rec.raw, scalar, cfg_.entropy_coef);
    adam_step(actor_.actor, ag.grad, adam_actor_);
    entropy = ag.mean_entropy;
  } else {
    for (std::size_t e = 0; e < ppo_.epochs; ++e) {
      const ActorGradient ag =
          ppo_actor_gradient(actor_, rec.features, rec.raw, rec.log_prob, scalar, ppo_.clip, cfg_.entropy_coef);
      adam_step(actor_.actor, ag.grad, adam_actor_);
      if (e == 0) entropy = ag.mean_entropy;
    }
  }
  require_finite(actor_.actor, "phase=actor-update");

  EpisodeStats s;
  s.episode = ++episode_;
  s.cost = discounted_costs(traj, cfg_.gamma);
  s.scalarized = scalarized_return(s.cost, cfg_.preference, scales_);
  s.entropy = entropy;
  return s;
}

std::vector<EpisodeStats> ForwardOnlyLearner::train(std::size_t episodes, std::ostream* csv) {
  std::vector<EpisodeStats> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    out.push_back(train_episode());
    if (csv) write_episode_row(*csv, out.back());
  }
  return out;
}

PolicyHead forward_only_learner(ForwardOnlyVariant variant, const Environment& env, const LearnerConfig& cfg,
                                std::ostream* csv, PpoConfig ppo) {
  ForwardOnlyLearner learner(env, cfg, variant, ppo);
  learner.train(cfg.episodes, csv);
  return learner.actor();
}

// --- unicast -------------------------------------------------------------------

void UnicastConfig::validate() const {
  if (!(lambda_ue > 0.0)) throw DomainError("UnicastConfig.lambda_ue must be > 0");
  if (!(area_km2 > 0.0)) throw DomainError("UnicastConfig.area_km2 must be > 0");
  if (!(target_outage > 0.0 && target_outage < 1.0)) throw DomainError("UnicastConfig.target_outage must lie in (0, 1)");
}

namespace {

// exp(z^2) erfc(z) for z >= 0
double erfcx(double z) {
  if (z < 25.0) return std::exp(z * z) * std::erfc(z);
  const double iz2 = 1.0 / (z * z);
  return (1.0 - 0.5 * iz2 + 0.75 * iz2 * iz2 - 1.875 * iz2 * iz2 * iz2) / (z * std::sqrt(std::numbers::pi));
}

}  // namespace

double unicast_outage(const RadioConfig& radio, const UnicastConfig& uc, double alpha_uc) {
  radio.validate();
  uc.validate();
  if (radio.path_loss_exp != 4.0)
    throw UnsupportedModelError("unicast_outage: closed form needs path-loss exponent 4");
  if (!(alpha_uc > 0.0)) throw DomainError("unicast_outage: spectral efficiency must be > 0");
  const double cell_bw = (uc.lambda_ue / radio.lambda_bs) * radio.rate_R / alpha_uc;
  const double snr_tx = radio.p_tx * radio.antenna_gain / (radio.n0 * radio.path_loss_ref * cell_bw);
  const double s = (std::exp2(alpha_uc) - 1.0) / snr_tx;
  const double z = std::numbers::pi * radio.lambda_bs / (2.0 * std::sqrt(s));
  const double coverage = std::sqrt(std::numbers::pi) * z * erfcx(z);
  return std::clamp(1.0 - coverage, 0.0, 1.0);
}

double tune_unicast_alpha(const RadioConfig& radio, const UnicastConfig& uc) {
  if (uc.alpha_uc > 0.0) return uc.alpha_uc;
  double lo = 1e-3, hi = 64.0;
  if (unicast_outage(radio, uc, lo) > uc.target_outage) return lo;
  if (unicast_outage(radio, uc, hi) <= uc.target_outage) return hi;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (unicast_outage(radio, uc, mid) <= uc.target_outage) lo = mid;
    else hi = mid;
  }
  return lo;
}

std::vector<RewardVector> unicast_eval(const UnicastConfig& uc, const RadioConfig& radio, const PopularityTrack& track) {
  const double alpha = tune_unicast_alpha(radio, uc);
  const double outage = unicast_outage(radio, uc, alpha);
  const std::size_t n = track.num_files;
  const std::vector<double> o(n, outage);
  std::vector<double> p_req(track.row(0).begin(), track.row(0).end());
  std::vector<RewardVector> trace(track.horizon);
  for (std::size_t t = 0; t < track.horizon; ++t) {
    const double mass = std::accumulate(p_req.begin(), p_req.end(), 0.0);
    double qos = 0.0;
    for (std::size_t i = 0; i < n; ++i) qos += p_req[i] * outage;
    trace[t] = {qos, uc.lambda_ue * uc.area_km2 * mass * radio.rate_R / alpha, 0.0};
    if (t + 1 < track.horizon) p_req = forward_step(p_req, o, track.row(t + 1));
  }
  return trace;
}

std::array<double, 3> evaluate_unicast(const UnicastConfig& uc, const Environment& env,
                                       std::span<const std::uint64_t> eval_seeds) {
  if (eval_seeds.empty()) throw DomainError("evaluate_unicast: need at least one seed");
  std::array<double, 3> total{};
  for (std::uint64_t seed : eval_seeds) {
    for (const auto& r : unicast_eval(uc, env.radio, env.track(stream_seed(seed, 1)))) {
      total[0] += r.r_qos;
      total[1] += r.r_bw;
      total[2] += r.r_lat;
    }
  }
  for (double& v : total) v /= static_cast<double>(eval_seeds.size());
  return total;
}

}  // namespace fbcast
