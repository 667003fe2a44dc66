#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fbcast/error.hpp"
#include "fbcast/policy.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace fbcast;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("cache projection") {
  SUBCASE("equal raw values share the capacity") {
    const auto x = transform_cache(std::vector<double>(8, 0.3), 3);
    for (double v : x) CHECK(v == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
  }
  SUBCASE("full capacity caches everything") {
    CHECK(transform_cache(std::vector<double>{-5.0, 0.1, 9.0}, 3) == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("hand example") {
    const std::vector<double> raw{3.0, 0.0, -3.0};
    const auto x = transform_cache(raw, 1);
    CHECK(distance(x, {1.0, 0.0, 0.0}) < 1e-12);
    CHECK(distance(x, oracle::capped_simplex_qp(raw, 1)) < 1e-9);
  }
  SUBCASE("matches brute force on small libraries") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 2 + uniform_index(rng, 5);
      const std::size_t c = 1 + uniform_index(rng, n);
      std::vector<double> raw(n);
      for (double& v : raw) v = 2.0 * standard_normal(rng);
      const auto x = transform_cache(raw, c);
      REQUIRE(distance(x, oracle::capped_simplex_qp(raw, c)) < 1e-6);
    }
  }
  SUBCASE("feasible vectors are fixed points") {
    Rng rng(32);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> raw(12);
      for (double& v : raw) v = 3.0 * standard_normal(rng);
      const auto x = transform_cache(raw, 4);
      CHECK(std::abs(sum(x) - 4.0) < 1e-9);
      for (double v : x) CHECK((v >= 0.0 && v <= 1.0));
      const auto y = transform_cache(x, 4);
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(transform_cache(std::vector<double>{1.0, 2.0}, 3), DomainError);
}

TEST_CASE("spectral-efficiency transform") {
  CHECK(transform_alpha(std::vector<double>{0.0})[0] == doctest::Approx(0.7431471805599453).epsilon(1e-15));
  CHECK(transform_alpha(std::vector<double>{-800.0})[0] == 0.05);
  CHECK(transform_alpha(std::vector<double>{800.0})[0] == doctest::Approx(800.05));
  double prev = 0.0;
  for (double r = -30.0; r < 30.0; r += 0.25) {
    const double a = transform_alpha(std::vector<double>{r})[0];
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("head layout and actions") {
  const PolicyHead head = make_policy_head(6, 2, {}, {16}, 3);
  CHECK(head.output_size() == 4 * 6 + 9);
  CHECK(head.actor.input_size() == 7);
  const ForwardState s{std::vector<double>(6, 1.0 / 6.0), 3};
  const auto f = state_features(s, 8);
  CHECK(f.size() == 7);
  CHECK(f.back() == 0.5);

  SUBCASE("every sampled action is feasible") {
    Rng rng(4);
    for (int k = 0; k < 500; ++k) {
      const auto a = sample_action(head, f, rng);
      CHECK_NOTHROW(validate_action(a.action, 6, 2));
      for (double al : a.action.alpha) CHECK(al >= 0.05);
      CHECK(std::find(head.menu.values.begin(), head.menu.values.end(), a.action.n_hb) != head.menu.values.end());
      CHECK(std::isfinite(a.log_prob));
    }
  }
  SUBCASE("greedy action is the transform of the means") {
    const auto out = mlp_forward(head.actor, f);
    const auto g = greedy_action(head, f);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(g.raw.cache[i] == out[i]);
      CHECK(g.raw.alpha[i] == out[6 + i]);
    }
    CHECK(g.action.p_cach == transform_cache(g.raw.cache, 2));
  }
  SUBCASE("tiny spread collapses samples onto the greedy action") {
    PolicyHead sharp = head;
    auto& last = sharp.actor.layers.back();
    for (std::size_t i = 0; i < 12; ++i) {
      last.b[12 + i] = kLogStdMin;
      for (std::size_t j = 0; j < last.in; ++j) last.w[(12 + i) * last.in + j] = 0.0;
    }
    Rng rng(5);
    const auto g = greedy_action(sharp, f);
    const auto s1 = sample_action(sharp, f, rng);
    CHECK(distance(s1.action.p_cach, g.action.p_cach) < 0.05);
    CHECK(distance(s1.action.alpha, g.action.alpha) < 0.05);
  }
  SUBCASE("same seed, same sample") {
    Rng a(99), b(99);
    const auto x = sample_action(head, f, a), y = sample_action(head, f, b);
    CHECK(x.raw.cache == y.raw.cache);
    CHECK(x.raw.alpha == y.raw.alpha);
    CHECK(x.raw.harmonic_choice == y.raw.harmonic_choice);
    CHECK(x.log_prob == y.log_prob);
  }
}

TEST_CASE("log-probability") {
  SUBCASE("sample at the mean") {
    const PolicyHead head = make_policy_head(3, 1, {}, {8}, 6, -0.5);
    const std::vector<double> f{0.2, 0.3, 0.5, 0.1};
    const auto out = mlp_forward(head.actor, f);
    RawSample raw{{out[0], out[1], out[2]}, {out[3], out[4], out[5]}, 0};
    const auto t = policy_terms(head, f, raw);
    double gauss = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      const double sigma = std::exp(std::clamp(out[6 + i], kLogStdMin, kLogStdMax));
      gauss += -0.5 * std::log(2.0 * oracle::kPi * sigma * sigma);
    }
    double z = 0.0;
    for (std::size_t k = 0; k < 9; ++k) z += std::exp(out[12 + k]);
    CHECK(t.log_prob == doctest::Approx(gauss + out[12] - std::log(z)).epsilon(1e-12));
  }
  SUBCASE("single menu entry contributes nothing") {
    PolicyHead head = make_policy_head(2, 1, HarmonicMenu{{4}}, {8}, 6);
    const std::vector<double> f{0.5, 0.5, 0.5};
    const auto out = mlp_forward(head.actor, f);
    RawSample raw{{0.1, 0.2}, {0.3, -0.4}, 0};
    double gauss = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double x = i < 2 ? raw.cache[i] : raw.alpha[i - 2];
      const double ls = std::clamp(out[4 + i], kLogStdMin, kLogStdMax);
      const double zz = (x - out[i]) / std::exp(ls);
      gauss += -0.5 * zz * zz - ls - 0.5 * std::log(2.0 * oracle::kPi);
    }
    CHECK(log_prob_and_grad(head, f, raw).log_prob == doctest::Approx(gauss).epsilon(1e-12));
  }
  SUBCASE("uniform logits give -ln k") {
    PolicyHead head = make_policy_head(2, 1, {}, {8}, 6);
    auto& last = head.actor.layers.back();
    for (std::size_t k = 0; k < 9; ++k) {
      last.b[8 + k] = 0.0;
      for (std::size_t j = 0; j < last.in; ++j) last.w[(8 + k) * last.in + j] = 0.0;
    }
    const std::vector<double> f{0.5, 0.5, 0.5};
    RawSample raw{{0.1, 0.2}, {0.3, -0.4}, 4};
    RawSample other = raw;
    other.harmonic_choice = 7;
    const double a = policy_terms(head, f, raw).log_prob, b = policy_terms(head, f, other).log_prob;
    CHECK(a == b);
    const auto out = mlp_forward(head.actor, f);
    double gauss = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double x = i < 2 ? raw.cache[i] : raw.alpha[i - 2];
      const double ls = std::clamp(out[4 + i], kLogStdMin, kLogStdMax);
      gauss += -0.5 * std::pow((x - out[i]) / std::exp(ls), 2) - ls - 0.5 * std::log(2.0 * oracle::kPi);
    }
    CHECK(a - gauss == doctest::Approx(-std::log(9.0)).epsilon(1e-12));
  }
  SUBCASE("gradient matches finite differences") {
    const PolicyHead head = make_policy_head(5, 2, {}, {12}, 8, 0.0);
    Rng rng(10);
    for (int point = 0; point < 5; ++point) {
      std::vector<double> f(6);
      for (double& v : f) v = uniform01(rng);
      const auto s = sample_action(head, f, rng);
      const auto lg = log_prob_and_grad(head, f, s.raw);
      CHECK(lg.log_prob == doctest::Approx(s.log_prob).epsilon(1e-12));
      PolicyHead work = head;
      const auto r = gradcheck::check(
          head.actor, lg.grad,
          [&](const MlpParams& p) {
            work.actor = p;
            return oracle::policy_objective_ld(work, f, s.raw, 0.0);
          },
          [&](const MlpParams& p) {
            work.actor = p;
            std::vector<bool> pat;
            oracle::policy_objective_ld(work, f, s.raw, 0.0, &pat);
            return pat;
          },
          gradcheck::all_indices(head.actor));
      CHECK(r.max_rel_error < 1e-4);
    }
  }
  SUBCASE("clamped log-std passes no gradient") {
    PolicyHead head = make_policy_head(2, 1, {}, {8}, 6);
    head.actor.layers.back().b[4] = 50.0;  // first cache log-std far above the clamp
    const std::vector<double> f{0.5, 0.5, 0.5};
    const auto t = policy_terms(head, f, RawSample{{0.1, 0.2}, {0.3, -0.4}, 0});
    CHECK(t.dlogp_dout[4] == 0.0);
    CHECK(t.dentropy_dout[4] == 0.0);
    CHECK(std::isfinite(t.log_prob));
  }
  SUBCASE("mismatched sample is rejected") {
    const PolicyHead head = make_policy_head(2, 1, {}, {8}, 6);
    const std::vector<double> f{0.5, 0.5, 0.5};
    CHECK_THROWS_AS(policy_terms(head, f, RawSample{{0.1}, {0.3, -0.4}, 0}), DomainError);
    CHECK_THROWS_AS(policy_terms(head, f, RawSample{{0.1, 0.2}, {0.3, -0.4}, 9}), DomainError);
  }
}

TEST_CASE("sampling snapshot") {
  const PolicyHead head = make_policy_head(4, 2, {}, {8}, 2024);
  const std::vector<double> f{0.4, 0.3, 0.2, 0.1, 0.25};
  Rng rng(7);
  const auto s = sample_action(head, f, rng);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g %ld %zu", s.log_prob, s.action.n_hb, s.raw.harmonic_choice);
  CHECK(std::string(buf) == "-9.9385378256225128 620 8");
}

TEST_CASE("menu and head validation") {
  CHECK_THROWS_AS(make_policy_head(3, 4, {}, {8}, 1), DomainError);
  CHECK_THROWS_AS(make_policy_head(3, 1, HarmonicMenu{{2, 2}}, {8}, 1), DomainError);
  CHECK_THROWS_AS(make_policy_head(3, 1, HarmonicMenu{{0, 2}}, {8}, 1), DomainError);
  CHECK_THROWS_AS(make_policy_head(3, 1, HarmonicMenu{{}}, {8}, 1), DomainError);
}

TEST_CASE("policy checkpoint round trip") {
  const PolicyHead head = make_policy_head(5, 2, HarmonicMenu{{1, 3, 7}}, {9, 4}, 12, -1.0, 0.1);
  std::stringstream ss;
  save_policy(ss, head);
  const PolicyHead back = load_policy(ss);
  CHECK(back.num_files == 5);
  CHECK(back.cache_cap == 2);
  CHECK(back.alpha_floor == 0.1);
  CHECK(back.menu.values == head.menu.values);
  for (std::size_t i = 0; i < head.actor.parameter_count(); ++i)
    REQUIRE(back.actor.parameter(i) == head.actor.parameter(i));
}
