#include "fbcast/fbmoac.hpp"

#include <cmath>
#include <exception>
#include <ostream>
#include <string>

#include "fbcast/csv.hpp"
#include "fbcast/error.hpp"

namespace fbcast {

void LearnerConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("LearnerConfig.gamma must lie in [0, 1]");
  if (!(gamma_mov >= 0.0 && gamma_mov < 1.0)) throw DomainError("LearnerConfig.gamma_mov must lie in [0, 1)");
  bool any = false;
  for (double w : preference) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("LearnerConfig.preference weights must be >= 0");
    any = any || w > 0.0;
  }
  if (!any) throw DomainError("LearnerConfig.preference needs at least one positive weight");
  for (double lr : {lr_actor, lr_forward_critic, lr_backward_critic})
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw DomainError("LearnerConfig learning rates must be >= 0");
  if (!(entropy_coef >= 0.0)) throw DomainError("LearnerConfig.entropy_coef must be >= 0");
  for (auto h : hidden)
    if (h == 0) throw DomainError("LearnerConfig.hidden widths must be >= 1");
  menu.validate();
  if (!(alpha_floor > 0.0)) throw DomainError("LearnerConfig.alpha_floor must be > 0");
}

ObjectiveScales ObjectiveScales::from(const RadioConfig& cfg) {
  return {1.0, static_cast<double>(cfg.num_files_N) * cfg.rate_R, cfg.file_len_L};
}

PopularityTrack Environment::track(std::uint64_t seed) const {
  return make_popularity(radio.num_files_N, popularity.horizon, popularity.skew,
                         popularity.churn_for(radio.num_files_N), seed);
}

void RecordingPolicy::begin_episode(std::size_t horizon) {
  features.clear();
  raw.clear();
  log_prob.clear();
  features.reserve(horizon);
  raw.reserve(horizon);
  log_prob.reserve(horizon);
}

SlotAction RecordingPolicy::act(const ForwardState& state, std::size_t horizon, Rng& rng) {
  features.push_back(state_features(state, horizon));
  SampledAction s = sample_action(*head_, features.back(), rng);
  raw.push_back(std::move(s.raw));
  log_prob.push_back(s.log_prob);
  return std::move(s.action);
}

CriticPair make_critics(std::size_t num_files, const std::vector<std::size_t>& hidden, std::uint64_t seed,
                        std::size_t forward_outputs) {
  auto sizes = [&](std::size_t out) {
    std::vector<std::size_t> s{num_files + 1};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
  };
  return {make_mlp(sizes(forward_outputs), stream_seed(seed, 0x666f7277)),
          make_mlp(sizes(1), stream_seed(seed, 0x6261636b))};
}

std::vector<double> backward_features(const BackwardState& state, std::size_t horizon, double file_len) {
  std::vector<double> f(state.lat.size() + 1);
  for (std::size_t i = 0; i < state.lat.size(); ++i) f[i] = state.lat[i] / file_len;
  f.back() = static_cast<double>(state.slot + 1) / static_cast<double>(horizon);
  return f;
}

std::vector<double> td0_advantages(std::span<const double> cost, std::span<const double> values, double gamma) {
  if (cost.size() != values.size()) throw DomainError("td0_advantages: size mismatch");
  const std::size_t T = cost.size();
  std::vector<double> a(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double next = t + 1 < T ? values[t + 1] : 0.0;
    a[t] = -cost[t] + gamma * next - values[t];
  }
  return a;
}

std::vector<std::array<double, 2>> forward_advantages(const Trajectory& traj, const MlpParams& forward_critic,
                                                      double gamma, const ObjectiveScales& scales) {
  const std::size_t T = traj.size();
  std::vector<double> v_qos(T), v_bw(T), c_qos(T), c_bw(T);
  for (std::size_t t = 0; t < T; ++t) {
    const auto v = mlp_forward(forward_critic, state_features(traj.forward[t], T));
    v_qos[t] = v.at(0);
    v_bw[t] = v.at(1);
    c_qos[t] = traj.rewards[t].r_qos / scales.qos;
    c_bw[t] = traj.rewards[t].r_bw / scales.bw;
  }
  const auto a_qos = td0_advantages(c_qos, v_qos, gamma);
  const auto a_bw = td0_advantages(c_bw, v_bw, gamma);
  std::vector<std::array<double, 2>> out(T);
  for (std::size_t t = 0; t < T; ++t) out[t] = {a_qos[t], a_bw[t]};
  return out;
}

std::vector<std::vector<double>> backward_inputs(const Trajectory& traj, const ObjectiveScales& scales) {
  const std::size_t T = traj.size();
  std::vector<std::vector<double>> in(T);
  for (std::size_t t = 0; t + 1 < T; ++t) in[t] = backward_features(traj.backward[t + 1], T, scales.lat);
  if (T > 0) {
    const BackwardState boundary{std::vector<double>(traj.backward[0].lat.size(), 0.0), T};
    in[T - 1] = backward_features(boundary, T, scales.lat);
  }
  return in;
}

std::vector<double> backward_advantages(const Trajectory& traj, const MlpParams& backward_critic, double gamma,
                                        const ObjectiveScales& scales) {
  const std::size_t T = traj.size();
  const auto inputs = backward_inputs(traj, scales);
  std::vector<double> value(T);
  for (std::size_t t = 0; t < T; ++t) value[t] = mlp_forward(backward_critic, inputs[t]).at(0);
  // In reversed time the action of slot t moves y(t+1) to y(t); the next
  // reversed decision sees y(t), whose pre-action state is value[t-1].
  std::vector<double> adv(T);
  for (std::size_t tau = 0; tau < T; ++tau) {
    const std::size_t t = T - 1 - tau;
    const double successor = t > 0 ? value[t - 1] : 0.0;
    adv[t] = -traj.rewards[t].r_lat / scales.lat + gamma * successor - value[t];
  }
  return adv;
}

RunningMoments::RunningMoments(std::size_t objectives, double s)
    : mean(objectives, 0.0), var(objectives, 1.0), smoothing(s) {}

void RunningMoments::update(std::size_t objective, std::span<const double> batch) {
  if (batch.empty()) return;
  double m = 0.0;
  for (double x : batch) m += x;
  m /= static_cast<double>(batch.size());
  double v = 0.0;
  for (double x : batch) v += (x - m) * (x - m);
  v /= static_cast<double>(batch.size());
  mean.at(objective) = smoothing * mean[objective] + (1.0 - smoothing) * m;
  var.at(objective) = smoothing * var[objective] + (1.0 - smoothing) * v;
}

double RunningMoments::normalize(std::size_t objective, double x) const {
  return (x - mean.at(objective)) / std::sqrt(var.at(objective) + 1e-8);
}

double critic_step(MlpParams& critic, AdamState& adam, const std::vector<std::vector<double>>& inputs,
                   const std::vector<std::vector<double>>& td_errors) {
  if (inputs.size() != td_errors.size() || inputs.empty()) throw DomainError("critic_step: size mismatch");
  const double inv_t = 1.0 / static_cast<double>(inputs.size());
  MlpGradient grad = zeros_like(critic);
  MlpCache cache;
  std::vector<double> out_grad(critic.output_size());
  double loss = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    mlp_forward(critic, inputs[t], &cache);
    for (std::size_t k = 0; k < out_grad.size(); ++k) {
      const double delta = td_errors[t].at(k);
      out_grad[k] = -delta * inv_t;
      loss += 0.5 * delta * delta * inv_t;
    }
    mlp_backward(critic, cache, out_grad, grad);
  }
  adam_step(critic, grad, adam);
  return loss;
}

ActorGradient actor_gradient(const PolicyHead& head, const std::vector<std::vector<double>>& features,
                             const std::vector<RawSample>& raw, std::span<const double> advantages,
                             double entropy_coef) {
  const std::size_t T = features.size();
  if (raw.size() != T || advantages.size() != T || T == 0) throw DomainError("actor_gradient: size mismatch");
  const double inv_t = 1.0 / static_cast<double>(T);
  ActorGradient out{zeros_like(head.actor), 0.0};
  std::vector<double> g(head.output_size());
  for (std::size_t t = 0; t < T; ++t) {
    const PolicyTerms terms = policy_terms(head, features[t], raw[t]);
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] = -inv_t * (advantages[t] * terms.dlogp_dout[k] + entropy_coef * terms.dentropy_dout[k]);
    mlp_backward(head.actor, terms.cache, g, out.grad);
    out.mean_entropy += terms.entropy * inv_t;
  }
  return out;
}

std::array<double, 3> discounted_costs(const Trajectory& traj, double gamma) {
  std::array<double, 3> j{};
  const std::size_t T = traj.size();
  double disc = 1.0;
  for (std::size_t k = 0; k < T; ++k) {
    j[0] += disc * traj.rewards[k].r_qos;
    j[1] += disc * traj.rewards[k].r_bw;
    j[2] += disc * traj.rewards[T - 1 - k].r_lat;
    disc *= gamma;
  }
  return j;
}

double scalarized_return(const std::array<double, 3>& costs, const std::array<double, 3>& preference,
                         const ObjectiveScales& scales) {
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) s -= preference[i] * costs[i] / scales[i];
  return s;
}

void write_episode_header(std::ostream& os) {
  write_schema_line(os, kEpisodeSchema);
  os << "episode,r_qos,r_bw,r_lat,scalarized,entropy\n";
}

void write_episode_row(std::ostream& os, const EpisodeStats& s) {
  os << s.episode << ',' << fmt_double(s.cost[0]) << ',' << fmt_double(s.cost[1]) << ',' << fmt_double(s.cost[2])
     << ',' << fmt_double(s.scalarized) << ',' << fmt_double(s.entropy) << '\n';
}

FbMoacLearner::FbMoacLearner(Environment env, LearnerConfig cfg)
    : env_(std::move(env)), cfg_(std::move(cfg)), scales_(ObjectiveScales::from(env_.radio)) {
  env_.radio.validate();
  cfg_.validate();
  const std::size_t n = env_.radio.num_files_N;
  actor_ = make_policy_head(n, env_.radio.cache_cap_C, cfg_.menu, cfg_.hidden, stream_seed(cfg_.seed, 0x6163),
                            cfg_.init_log_std, cfg_.alpha_floor);
  critics_ = make_critics(n, cfg_.hidden, stream_seed(cfg_.seed, 0x6372), 2);
  adam_actor_ = make_adam(actor_.actor, cfg_.lr_actor);
  adam_forward_ = make_adam(critics_.forward, cfg_.lr_forward_critic);
  adam_backward_ = make_adam(critics_.backward, cfg_.lr_backward_critic);
  moments_ = RunningMoments(3, cfg_.gamma_mov);
}

namespace {

void require_finite_series(std::span<const double> v, const char* phase) {
  for (std::size_t t = 0; t < v.size(); ++t)
    if (!std::isfinite(v[t]))
      throw NumericalError(std::string("phase=") + phase + " slot=" + std::to_string(t + 1) + ": non-finite value");
}

}  // namespace

EpisodeStats FbMoacLearner::train_episode() {
  const std::uint64_t ep_seed = stream_seed(cfg_.seed, episode_ + 1);
  const PopularityTrack track = env_.track(stream_seed(ep_seed, 1));

  // (i) forward pass
  RecordingPolicy rec(actor_);
  // (ii) backward pass runs inside rollout once all actions are known
  const Trajectory traj = rollout(rec, track, env_.radio, stream_seed(ep_seed, 2));
  const std::size_t T = traj.size();

  // (iii) bidirectional learning
  const auto fwd = forward_advantages(traj, critics_.forward, cfg_.gamma, scales_);
  const auto bwd = backward_advantages(traj, critics_.backward, cfg_.gamma, scales_);
  std::vector<double> a_qos(T), a_bw(T);
  for (std::size_t t = 0; t < T; ++t) {
    a_qos[t] = fwd[t][0];
    a_bw[t] = fwd[t][1];
  }
  require_finite_series(a_qos, "forward-advantage");
  require_finite_series(a_bw, "forward-advantage");
  require_finite_series(bwd, "backward-advantage");

  moments_.update(0, a_qos);
  moments_.update(1, a_bw);
  moments_.update(2, bwd);
  std::vector<double> scalar(T);
  for (std::size_t t = 0; t < T; ++t)
    scalar[t] = cfg_.preference[0] * moments_.normalize(0, a_qos[t]) +
                cfg_.preference[1] * moments_.normalize(1, a_bw[t]) +
                cfg_.preference[2] * moments_.normalize(2, bwd[t]);

  std::vector<std::vector<double>> inputs(T), errors(T);
  inputs = backward_inputs(traj, scales_);
  for (std::size_t t = 0; t < T; ++t) errors[t] = {bwd[t]};
  critic_step(critics_.backward, adam_backward_, inputs, errors);
  for (std::size_t t = 0; t < T; ++t) {
    inputs[t] = rec.features[t];
    errors[t] = {a_qos[t], a_bw[t]};
  }
  critic_step(critics_.forward, adam_forward_, inputs, errors);

  const ActorGradient ag = actor_gradient(actor_, rec.features, rec.raw, scalar, cfg_.entropy_coef);
  adam_step(actor_.actor, ag.grad, adam_actor_);
  require_finite(actor_.actor, "phase=actor-update");

  EpisodeStats s;
  s.episode = ++episode_;
  s.cost = discounted_costs(traj, cfg_.gamma);
  s.scalarized = scalarized_return(s.cost, cfg_.preference, scales_);
  s.entropy = ag.mean_entropy;
  return s;
}

std::vector<EpisodeStats> FbMoacLearner::train(std::size_t episodes, std::ostream* csv) {
  std::vector<EpisodeStats> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    out.push_back(train_episode());
    if (csv) write_episode_row(*csv, out.back());
  }
  return out;
}

}  // namespace fbcast

namespace fbcast {

bool pareto_dominates(const std::array<double, 3>& x, const std::array<double, 3>& y) {
  bool strict = false;
  for (std::size_t i = 0; i < 3; ++i) {
    if (x[i] > y[i]) return false;
    if (x[i] < y[i]) strict = true;
  }
  return strict;
}

bool DominanceReport::is_dominated(std::size_t i) const {
  for (const auto& [w, l] : dominates)
    if (l == i) return true;
  return false;
}

bool DominanceReport::dominates_pair(std::size_t winner, std::size_t loser) const {
  for (const auto& [w, l] : dominates)
    if (w == winner && l == loser) return true;
  return false;
}

DominanceReport dominance_report(std::vector<PolicyCosts> policies) {
  DominanceReport r;
  r.policies = std::move(policies);
  for (std::size_t i = 0; i < r.policies.size(); ++i)
    for (std::size_t j = 0; j < r.policies.size(); ++j)
      if (i != j && pareto_dominates(r.policies[i].cost, r.policies[j].cost)) r.dominates.emplace_back(i, j);
  return r;
}

std::array<double, 3> cumulative_costs(const Trajectory& traj) {
  std::array<double, 3> c{};
  for (const auto& r : traj.rewards) {
    c[0] += r.r_qos;
    c[1] += r.r_bw;
    c[2] += r.r_lat;
  }
  return c;
}

namespace {

std::array<double, 3> eval_one(const PolicyFactory& make, const Environment& env, std::uint64_t seed) {
  auto policy = make();
  const PopularityTrack track = env.track(stream_seed(seed, 1));
  return cumulative_costs(rollout(*policy, track, env.radio, stream_seed(seed, 2)));
}

std::array<double, 3> mean_of(const std::vector<std::array<double, 3>>& per_seed) {
  std::array<double, 3> m{};
  for (const auto& c : per_seed)
    for (std::size_t i = 0; i < 3; ++i) m[i] += c[i];
  for (double& v : m) v /= static_cast<double>(per_seed.size());
  return m;
}

}  // namespace

std::array<double, 3> evaluate_policy_serial(const PolicyFactory& make, const Environment& env,
                                             std::span<const std::uint64_t> eval_seeds) {
  if (eval_seeds.empty()) throw DomainError("evaluate_policy: need at least one seed");
  std::vector<std::array<double, 3>> per_seed(eval_seeds.size());
  for (std::size_t i = 0; i < eval_seeds.size(); ++i) per_seed[i] = eval_one(make, env, eval_seeds[i]);
  return mean_of(per_seed);
}

std::array<double, 3> evaluate_policy(const PolicyFactory& make, const Environment& env,
                                      std::span<const std::uint64_t> eval_seeds) {
  if (eval_seeds.empty()) throw DomainError("evaluate_policy: need at least one seed");
  const auto n = static_cast<std::int64_t>(eval_seeds.size());
  std::vector<std::array<double, 3>> per_seed(eval_seeds.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      per_seed[static_cast<std::size_t>(i)] = eval_one(make, env, eval_seeds[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(fbcast_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return mean_of(per_seed);
}

DominanceReport pareto_eval(const std::vector<NamedPolicy>& policies, const Environment& env,
                            std::span<const std::uint64_t> eval_seeds) {
  if (policies.empty()) throw DomainError("pareto_eval: need at least one policy");
  std::vector<PolicyCosts> costs;
  for (const auto& p : policies) costs.push_back({p.name, evaluate_policy(p.make, env, eval_seeds)});
  return dominance_report(std::move(costs));
}

}  // namespace fbcast
