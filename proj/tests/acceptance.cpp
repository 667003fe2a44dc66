// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "fbcast/harness.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace fbcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = exponential1(rng));
  for (double& x : v) x /= s;
  return v;
}

Outcome outage_equivalence() {
  const auto pts = validate_outage(100000, 1);
  std::size_t pass = 0;
  double worst = 0.0;
  for (const auto& p : pts) {
    pass += p.pass();
    worst = std::max(worst, p.z_score());
  }
  return {pts.size() >= 5 && pass == pts.size(),
          std::to_string(pass) + "/" + std::to_string(pts.size()) + " grid points within 3 SE, max |z| " +
              fmt("%.2f", worst)};
}

Outcome harmonic_numbers() {
  const double h = harmonic_number(620);
  const double half_slot = slot_duration(3600.0, 620) / 2.0;
  return {std::abs(h - 7.0) <= 0.01 && half_slot >= 2.8 && half_slot <= 3.0,
          "H(620) = " + fmt("%.6f", h) + ", start latency of a 1 h file " + fmt("%.4f", half_slot) + " s"};
}

Outcome forward_conservation() {
  Rng rng(stream_seed(1, 3));
  const std::size_t sizes[] = {2, 10, 200};
  double worst = 0.0;
  bool limits = true;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = sizes[trial % 3];
    const auto p = random_simplex(n, rng), pop = random_simplex(n, rng);
    std::vector<double> o(n);
    for (double& x : o) x = uniform01(rng);
    const auto next = forward_step(p, o, pop);
    worst = std::max(worst, std::abs(std::accumulate(next.begin(), next.end(), 0.0) - 1.0));
    if (trial % 10 == 0) {
      limits = limits && forward_step(p, std::vector<double>(n, 0.0), pop) == pop;
      limits = limits && forward_step(p, std::vector<double>(n, 1.0), pop) == p;
    }
  }
  return {worst <= 1e-9 && limits, "max |sum - 1| " + fmt("%.2e", worst) + (limits ? ", limits exact" : ", limits broken")};
}

Outcome backward_oracle() {
  RadioConfig cfg;
  cfg.num_files_N = 3;
  cfg.cache_cap_C = 1;
  const std::size_t T = 256;
  const double d = slot_duration(600.0, 620);
  auto make = [&](double o) {
    Trajectory tr;
    for (std::size_t t = 0; t < T; ++t) {
      tr.forward.push_back({std::vector<double>(3, 1.0 / 3.0), t});
      tr.actions.push_back({{1.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 620});
      tr.outage.push_back(std::vector<double>(3, o));
      tr.duration.push_back(d);
    }
    backward_pass(tr, cfg);
    return tr;
  };
  bool full = true, none = true;
  const Trajectory all_out = make(1.0), no_out = make(0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const double expect = static_cast<double>(T - t) * d;  // (T - t + 1) d with 1-based t
    for (double l : all_out.backward[t].lat) full = full && std::abs(l - expect) <= 1e-12 * expect;
    for (double l : no_out.backward[t].lat) none = none && l == d / 2.0;
  }
  Rng rng(stream_seed(1, 4));
  std::size_t exact = 0;
  for (int seq = 0; seq < 100; ++seq) {
    const std::size_t len = 1 + uniform_index(rng, 64);
    Trajectory tr;
    for (std::size_t t = 0; t < len; ++t) {
      tr.forward.push_back({std::vector<double>(3, 1.0 / 3.0), t});
      tr.actions.push_back({{1.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 1});
      std::vector<double> o(3);
      for (double& x : o) x = uniform01(rng);
      tr.outage.push_back(o);
      tr.duration.push_back(600.0 / static_cast<double>(1 + uniform_index(rng, 620)));
    }
    backward_pass(tr, cfg);
    const auto K = oracle::reversed_latency(tr.outage, tr.duration);
    bool same = true;
    for (std::size_t t = 0; t < len; ++t) same = same && tr.backward[t].lat == K[len - 1 - t];
    exact += same;
  }
  return {full && none && exact == 100, std::string("full outage ") + (full ? "ok" : "wrong") + ", no outage " +
                                            (none ? "ok" : "wrong") + ", reversed recursion exact on " +
                                            std::to_string(exact) + "/100"};
}

// FD check of one critic-shaped network on a random weighted output.
gradcheck::Result check_network(const std::vector<std::size_t>& sizes, std::uint64_t seed, std::size_t max_params) {
  const MlpParams p = make_mlp(sizes, seed);
  Rng rng(stream_seed(seed, 1));
  std::vector<double> x(sizes.front()), w(sizes.back());
  for (double& v : x) v = uniform01(rng);
  for (double& v : w) v = standard_normal(rng);
  MlpCache cache;
  mlp_forward(p, x, &cache);
  const auto g = mlp_backward(p, cache, w);
  auto loss = [&](const MlpParams& q) {
    const auto y = oracle::mlp_forward_ld(q, x);
    long double s = 0.0L;
    for (std::size_t k = 0; k < y.size(); ++k) s += y[k] * w[k];
    return s;
  };
  auto pattern = [&](const MlpParams& q) {
    std::vector<bool> pat;
    oracle::mlp_forward_ld(q, x, &pat);
    return pat;
  };
  auto idx = gradcheck::all_indices(p);
  if (idx.size() > max_params) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_params);
  }
  return gradcheck::check(p, g, loss, pattern, idx);
}

gradcheck::Result check_actor(std::size_t n, std::size_t c, std::size_t hidden, std::uint64_t seed,
                              std::size_t max_params) {
  const PolicyHead head = make_policy_head(n, c, {}, {hidden}, seed);
  Rng rng(stream_seed(seed, 1));
  std::vector<double> f = random_simplex(n, rng);
  f.push_back(uniform01(rng));
  const auto s = sample_action(head, f, rng);
  const double coef = 0.5;
  const PolicyTerms t = policy_terms(head, f, s.raw);
  std::vector<double> og(t.dlogp_dout.size());
  for (std::size_t k = 0; k < og.size(); ++k) og[k] = t.dlogp_dout[k] + coef * t.dentropy_dout[k];
  const auto g = mlp_backward(head.actor, t.cache, og);
  PolicyHead work = head;
  auto loss = [&](const MlpParams& q) {
    work.actor = q;
    return oracle::policy_objective_ld(work, f, s.raw, coef);
  };
  auto pattern = [&](const MlpParams& q) {
    work.actor = q;
    std::vector<bool> pat;
    oracle::policy_objective_ld(work, f, s.raw, coef, &pat);
    return pat;
  };
  auto idx = gradcheck::all_indices(head.actor);
  if (idx.size() > max_params) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_params);
  }
  return gradcheck::check(head.actor, g, loss, pattern, idx);
}

Outcome gradients() {
  struct Arch {
    std::string name;
    std::function<gradcheck::Result(std::uint64_t)> run;
  };
  // tiny sizes are checked on every parameter, the published sizes on a
  // random subset per point
  const std::vector<Arch> archs{
      {"actor tiny", [](std::uint64_t s) { return check_actor(20, 10, 64, s, SIZE_MAX); }},
      {"actor paper", [](std::uint64_t s) { return check_actor(200, 10, 100, s, 400); }},
      {"forward critic tiny", [](std::uint64_t s) { return check_network({21, 64, 2}, s, SIZE_MAX); }},
      {"forward critic paper", [](std::uint64_t s) { return check_network({201, 100, 2}, s, 400); }},
      {"backward critic tiny", [](std::uint64_t s) { return check_network({21, 64, 1}, s, SIZE_MAX); }},
      {"backward critic paper", [](std::uint64_t s) { return check_network({201, 100, 1}, s, 400); }},
      {"forward-only critic tiny", [](std::uint64_t s) { return check_network({21, 64, 3}, s, SIZE_MAX); }},
      {"forward-only critic paper", [](std::uint64_t s) { return check_network({201, 100, 3}, s, 400); }},
  };
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  std::string worst_name;
  for (const auto& a : archs) {
    for (std::uint64_t point = 0; point < 20; ++point) {
      const auto r = a.run(stream_seed(5, point));
      checked += r.checked;
      skipped += r.skipped;
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_name = a.name;
      }
    }
  }
  return {worst < 1e-4, std::to_string(archs.size()) + " architectures x 20 points, " + std::to_string(checked) +
                            " parameters checked (" + std::to_string(skipped) + " at kinks), max rel error " +
                            fmt("%.2e", worst) + (worst_name.empty() ? "" : " (" + worst_name + ")")};
}

Outcome projection() {
  Rng rng(stream_seed(1, 6));
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    const std::size_t c = 1 + uniform_index(rng, n);
    std::vector<double> raw(n);
    for (double& v : raw) v = 2.5 * standard_normal(rng);
    const auto x = transform_cache(raw, c);
    const auto ref = oracle::capped_simplex_qp(raw, c);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += (x[i] - ref[i]) * (x[i] - ref[i]);
    worst = std::max(worst, std::sqrt(d));
  }
  return {worst <= 1e-6, "1000 inputs, max distance to brute-force minimizer " + fmt("%.2e", worst)};
}

Outcome learning_improves() {
  const std::vector<std::array<double, 3>> prefs{{0.3, 0.3, 1.0}, {1.0, 1.0, 0.3}, {0.3, 1.0, 0.3}};
  const int seeds = 5;
  std::vector<double> first(prefs.size() * seeds), last(prefs.size() * seeds);
  const int jobs = static_cast<int>(prefs.size()) * seeds;
#pragma omp parallel for schedule(dynamic, 1)
  for (int job = 0; job < jobs; ++job) {
    ExperimentConfig cfg = preset("tiny");
    cfg.seed = static_cast<std::uint64_t>(job % seeds) + 1;
    cfg.learner.preference = prefs[static_cast<std::size_t>(job / seeds)];
    cfg.resolve();
    FbMoacLearner learner(environment(cfg), cfg.learner);
    const auto stats = learner.train(cfg.learner.episodes);
    const std::size_t k = std::max<std::size_t>(1, stats.size() / 10);
    std::vector<double> head, tail;
    for (std::size_t i = 0; i < k; ++i) {
      head.push_back(stats[i].scalarized);
      tail.push_back(stats[stats.size() - 1 - i].scalarized);
    }
    first[static_cast<std::size_t>(job)] = median(head);
    last[static_cast<std::size_t>(job)] = median(tail);
  }
  bool ok = true;
  std::string detail;
  for (std::size_t p = 0; p < prefs.size(); ++p) {
    std::vector<double> f(first.begin() + static_cast<long>(p * seeds), first.begin() + static_cast<long>((p + 1) * seeds));
    std::vector<double> l(last.begin() + static_cast<long>(p * seeds), last.begin() + static_cast<long>((p + 1) * seeds));
    const double mf = median(f), ml = median(l);
    ok = ok && ml > mf;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s[%.1f,%.1f,%.1f] %.4g -> %.4g", p ? "; " : "", prefs[p][0], prefs[p][1],
                  prefs[p][2], mf, ml);
    detail += buf;
  }
  return {ok, detail};
}

Outcome comparison() {
  ExperimentConfig cfg = preset("tiny");
  cfg.resolve();
  const ComparisonResult res = run_compare(cfg, omp_get_max_threads());
  const auto& r = res.report;
  const auto& fb = r.policies[0].cost;
  const auto& lfu = r.policies[3].cost;
  const auto& uni = r.policies[4].cost;
  const bool a = !r.dominates_pair(1, 0) && !r.dominates_pair(2, 0);
  const double bw_ratio = fb[1] / lfu[1];
  const bool b = fb[0] < lfu[0] && bw_ratio <= 2.0 && bw_ratio >= 0.5;
  const double uni_ratio = uni[1] / fb[1];
  const bool c = cfg.unicast.lambda_ue == 1000.0 && uni_ratio >= 5.0;
  bool d = uni[2] == 0.0;
  const Environment env = environment(cfg);
  for (std::uint64_t s : eval_seeds(cfg))
    for (const auto& slot : unicast_eval(cfg.unicast, env.radio, env.track(stream_seed(s, 1)))) d = d && slot.r_lat == 0.0;
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "(a) %s: fb not dominated by a2c/ppo; (b) %s: qos fb %.3g vs lfu %.3g, bw ratio %.3f; "
                "(c) %s: unicast/fb bandwidth %.2fx; (d) %s: unicast latency zero",
                a ? "ok" : "FAIL", b ? "ok" : "FAIL", fb[0], lfu[0], bw_ratio, c ? "ok" : "FAIL", uni_ratio,
                d ? "ok" : "FAIL");
  return {a && b && c && d, buf};
}

Outcome determinism() {
  const auto root = cli_runner::scratch("acceptance-determinism");
  const std::string R = root.string();
  struct Cmd {
    std::string name;
    std::vector<std::string> args;  // --out is appended
  };
  const std::string ckpt = R + "/train-a/policy.bin";
  const std::vector<Cmd> cmds{
      {"train", {"train", "--preset", "tiny", "--episodes", "30", "--seed", "4"}},
      {"eval", {"eval", "--preset", "tiny", "--seed", "4", "--checkpoint", ckpt}},
      {"eval-sampled", {"eval", "--preset", "tiny", "--seed", "4", "--checkpoint", ckpt, "--sample"}},
      {"compare", {"compare", "--preset", "tiny", "--episodes", "30", "--seed", "4", "--jobs", "1"}},
      {"validate-outage", {"validate-outage", "--samples", "20000", "--seed", "4"}},
      {"selftest", {"selftest", "--preset", "tiny", "--seed", "4"}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cmds) {
    auto a = c.args, b = c.args;
    a.insert(a.end(), {"--out", R + "/" + c.name + "-a"});
    b.insert(b.end(), {"--out", R + "/" + c.name + "-b"});
    const int ea = cli_runner::run(a), eb = cli_runner::run(b);
    const auto fa = cli_runner::csv_files(R + "/" + c.name + "-a"), fb = cli_runner::csv_files(R + "/" + c.name + "-b");
    const bool same = ea == 0 && eb == 0 && !fa.empty() && fa == fb &&
                      cli_runner::slurp(R + "/" + c.name + "-a/manifest.txt") ==
                          cli_runner::slurp(R + "/" + c.name + "-b/manifest.txt");
    ok = ok && same;
    detail += (detail.empty() ? "" : ", ") + c.name + (same ? " identical" : " DIFFERS");
  }
  // thread count must not change results
  const int e3 = cli_runner::run({"compare", "--preset", "tiny", "--episodes", "30", "--seed", "4", "--jobs", "3",
                                  "--out", R + "/compare-c"});
  const bool threads = e3 == 0 && cli_runner::csv_files(R + "/compare-a") == cli_runner::csv_files(R + "/compare-c");
  ok = ok && threads;
  detail += std::string(", compare with 3 jobs ") + (threads ? "identical" : "DIFFERS");
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // <= 0: no budget
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "outage formula equivalence", 120.0, outage_equivalence},
      {2, "harmonic broadcasting numbers", 1.0, harmonic_numbers},
      {3, "forward-dynamics conservation", 5.0, forward_conservation},
      {4, "backward-dynamics boundary and reversed recursion", 5.0, backward_oracle},
      {5, "gradient correctness", 60.0, gradients},
      {6, "projection optimality", 30.0, projection},
      {7, "learning improves", 900.0, learning_improves},
      {8, "comparative ordering", 1800.0, comparison},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
