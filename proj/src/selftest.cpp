#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "fbcast/harness.hpp"
#include "fbcast/rng.hpp"

namespace fbcast {

namespace {

using Check = std::function<std::string()>;  // empty string on success

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = exponential1(rng));
  for (double& x : v) x /= s;
  return v;
}

std::string check_harmonic() {
  if (std::abs(harmonic_number(620) - 7.0) > 0.01) return "H(620) is not 7 +- 0.01";
  for (long m = 1; m <= 2000; ++m)
    if (inverse_harmonic(harmonic_number(m)) != m) return "inverse_harmonic(H(" + std::to_string(m) + ")) != m";
  return {};
}

std::string check_forward(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 11));
  const std::size_t n = cfg.radio.num_files_N;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_simplex(n, rng), pop = random_simplex(n, rng);
    std::vector<double> o(n);
    for (double& x : o) x = uniform01(rng);
    double s = 0.0;
    for (double x : forward_step(p, o, pop)) s += x;
    if (std::abs(s - 1.0) > 1e-9) return "forward step left the simplex (sum " + std::to_string(s) + ")";
  }
  const auto p = random_simplex(n, rng), pop = random_simplex(n, rng);
  if (forward_step(p, std::vector<double>(n, 0.0), pop) != pop) return "zero outage does not reset to popularity";
  if (forward_step(p, std::vector<double>(n, 1.0), pop) != p) return "full outage does not keep requests";
  return {};
}

std::string check_backward(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.radio.num_files_N, T = cfg.popularity.horizon;
  const double d = 7.5;
  std::vector<double> lat_full(n, 0.0), lat_none(n, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = T - k;  // 1-based slot being computed
    lat_full = backward_step(lat_full, std::vector<double>(n, 1.0), d);
    lat_none = backward_step(lat_none, std::vector<double>(n, 0.0), d);
    const double expect = static_cast<double>(T - t + 1) * d;
    if (std::abs(lat_full[0] - expect) > 1e-9 * expect) return "full-outage latency differs from (T-t+1)d";
    if (lat_none[0] != d / 2.0) return "outage-free latency differs from d/2";
  }
  return {};
}

std::string check_outage(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.radio.num_files_N, c = cfg.radio.cache_cap_C;
  SlotAction a{std::vector<double>(n, static_cast<double>(c) / static_cast<double>(n)), std::vector<double>(n, 1.0), 1};
  double prev = 2.0;
  for (double p : {0.0, 0.01, 0.05, 0.2, 0.5, 1.0}) {
    a.p_cach[0] = p;
    const double o = outage_analytic(cfg.radio, a, 0);
    if (!(o >= 0.0 && o <= 1.0)) return "outage outside [0, 1]";
    if (o > prev) return "outage increased with caching probability";
    prev = o;
  }
  return {};
}

std::string check_projection(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 12));
  const std::size_t n = cfg.radio.num_files_N, c = cfg.radio.cache_cap_C;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> raw(n);
    for (double& x : raw) x = 3.0 * standard_normal(rng);
    const auto x = transform_cache(raw, c);
    double s = 0.0;
    for (double v : x) {
      if (v < 0.0 || v > 1.0) return "projection left the box";
      s += v;
    }
    if (std::abs(s - static_cast<double>(c)) > 1e-9) return "projection sum differs from C";
  }
  return {};
}

std::string check_gradient(const ExperimentConfig& cfg) {
  const MlpParams net = make_mlp({5, 7, 3}, stream_seed(cfg.seed, 13));
  Rng rng(stream_seed(cfg.seed, 14));
  std::vector<double> x(5), w(3);
  for (double& v : x) v = standard_normal(rng);
  for (double& v : w) v = standard_normal(rng);
  MlpCache cache;
  mlp_forward(net, x, &cache);
  const MlpGradient g = mlp_backward(net, cache, w);
  auto loss = [&](const MlpParams& p) {
    const auto y = mlp_forward(p, x);
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += w[k] * y[k];
    return s;
  };
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    MlpParams plus = net, minus = net;
    const double h = 1e-6;
    plus.parameter(i) += h;
    minus.parameter(i) -= h;
    const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    const double an = g.parameter(i);
    if (std::abs(fd - an) > 1e-5 * std::max(1.0, std::abs(fd))) return "parameter " + std::to_string(i) + " gradient mismatch";
  }
  return {};
}

std::string check_rollout(const ExperimentConfig& cfg) {
  const Environment env = environment(cfg);
  const PolicyHead head = make_policy_head(cfg.radio.num_files_N, cfg.radio.cache_cap_C, cfg.learner.menu,
                                           cfg.learner.hidden, cfg.seed, cfg.learner.init_log_std,
                                           cfg.learner.alpha_floor);
  const PopularityTrack track = env.track(stream_seed(cfg.seed, 15));
  HeadPolicy a(head, false), b(head, false);
  const Trajectory t1 = rollout(a, track, env.radio, 99), t2 = rollout(b, track, env.radio, 99);
  for (std::size_t t = 0; t < t1.size(); ++t) {
    const auto &r1 = t1.rewards[t], &r2 = t2.rewards[t];
    if (r1.r_qos != r2.r_qos || r1.r_bw != r2.r_bw || r1.r_lat != r2.r_lat) return "rollout is not reproducible";
    if (!(r1.r_qos >= 0.0 && r1.r_qos <= 1.0 + 1e-12) || r1.r_bw < 0.0 || r1.r_lat < 0.0) return "reward out of range";
  }
  return {};
}

std::string check_lfu(const ExperimentConfig& cfg) {
  const Environment env = environment(cfg);
  const std::size_t n = cfg.radio.num_files_N, c = cfg.radio.cache_cap_C;
  LfuPolicy lfu(make_lfu(n, std::vector<double>(n, 1.0), 2), c);
  const Trajectory t = rollout(lfu, env.track(stream_seed(cfg.seed, 16)), env.radio, 1);
  for (const auto& a : t.actions) {
    std::size_t ones = 0;
    for (double v : a.p_cach) {
      if (v != 0.0 && v != 1.0) return "LFU produced a fractional cache decision";
      ones += v == 1.0;
    }
    if (ones != c) return "LFU cached the wrong number of files";
  }
  return {};
}

}  // namespace

std::vector<SelftestResult> run_selftest(const ExperimentConfig& cfg) {
  const std::vector<std::pair<std::string, Check>> suites{
      {"harmonic", check_harmonic},
      {"forward_conservation", [&] { return check_forward(cfg); }},
      {"backward_limits", [&] { return check_backward(cfg); }},
      {"outage_range", [&] { return check_outage(cfg); }},
      {"capped_simplex", [&] { return check_projection(cfg); }},
      {"mlp_gradient", [&] { return check_gradient(cfg); }},
      {"rollout_determinism", [&] { return check_rollout(cfg); }},
      {"lfu_feasible", [&] { return check_lfu(cfg); }},
  };
  std::vector<SelftestResult> out;
  for (const auto& [name, check] : suites) {
    SelftestResult r{name, false, {}};
    try {
      r.detail = check();
      r.passed = r.detail.empty();
      if (r.passed) r.detail = "ok";
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fbcast
