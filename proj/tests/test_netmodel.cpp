#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <omp.h>

#include "fbcast/error.hpp"
#include "fbcast/netmodel.hpp"
#include "fbcast/rng.hpp"
#include "oracles.hpp"

using namespace fbcast;

namespace {

// A link budget whose reference SNR factor p_tx G / (n0 PL R) equals `snr_r`.
RadioConfig scaled_radio(double snr_r, std::size_t n = 1, std::size_t c = 1) {
  RadioConfig cfg;
  cfg.num_files_N = n;
  cfg.cache_cap_C = c;
  cfg.path_loss_ref = cfg.p_tx * cfg.antenna_gain / (cfg.n0 * cfg.rate_R * snr_r);
  return cfg;
}

}  // namespace

TEST_CASE("harmonic numbers match long-double summation") {
  CHECK(harmonic_number(1) == 1.0);
  CHECK(harmonic_number(2) == 1.5);
  CHECK(harmonic_number(3) == doctest::Approx(11.0 / 6.0).epsilon(1e-15));
  for (long m : {10L, 100L, 620L, 5000L})
    CHECK(harmonic_number(m) == doctest::Approx(static_cast<double>(oracle::harmonic(m))).epsilon(1e-13));
  CHECK(std::abs(harmonic_number(620) - 7.0) < 0.01);
  CHECK_THROWS_AS(harmonic_number(0), DomainError);
}

TEST_CASE("inverse harmonic is the largest index not exceeding the target") {
  long expect = 0;
  while (oracle::harmonic(expect + 1) <= 7.0L) ++expect;
  CHECK(inverse_harmonic(7.0) == expect);
  CHECK(inverse_harmonic(7.0) == 615);
  CHECK(inverse_harmonic(1.0) == 1);
  CHECK(inverse_harmonic(1.4999) == 1);
  CHECK(inverse_harmonic(1.5) == 2);
  for (long m = 1; m <= 3000; ++m) REQUIRE(inverse_harmonic(harmonic_number(m)) == m);
  CHECK_THROWS_AS(inverse_harmonic(0.5), DomainError);
}

TEST_CASE("slot duration divides the file length") {
  CHECK(slot_duration(3600.0, 620) == doctest::Approx(3600.0 / 620.0));
  CHECK(slot_duration(600.0, 620) == doctest::Approx(0.96774193548387).epsilon(1e-12));
  CHECK(slot_duration(600.0, 1) == 600.0);
  const double half = slot_duration(3600.0, 620) / 2.0;
  CHECK(half > 2.8);
  CHECK(half < 3.0);
  CHECK_THROWS_AS(slot_duration(600.0, 0), DomainError);
}

TEST_CASE("eta combines the file's threshold with the inverse rate sum") {
  const std::vector<double> alpha{0.5, 2.0};
  CHECK(eta(alpha, 1) == doctest::Approx(7.5).epsilon(1e-15));
  CHECK(eta(alpha, 0) == doctest::Approx((std::sqrt(2.0) - 1.0) * 2.5).epsilon(1e-15));
  CHECK(inverse_alpha_sum(alpha) == 2.5);
  CHECK_THROWS_AS(eta(alpha, 2), DomainError);
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(inverse_alpha_sum(bad), DomainError);
}

TEST_CASE("reference SNR factor from the default link budget") {
  const RadioConfig cfg;
  const double p_tx = std::pow(10.0, (23.0 - 30.0) / 10.0);
  const double gain = std::pow(10.0, 0.8);
  const double n0 = std::pow(10.0, (-174.0 + 9.0 - 30.0) / 10.0);
  const double pl = std::pow(10.0, 12.81);
  CHECK(cfg.p_tx == doctest::Approx(p_tx).epsilon(1e-14));
  CHECK(cfg.antenna_gain == doctest::Approx(gain).epsilon(1e-14));
  CHECK(cfg.n0 == doctest::Approx(n0).epsilon(1e-14));
  CHECK(cfg.path_loss_ref == doctest::Approx(pl).epsilon(1e-14));
  const double h = static_cast<double>(oracle::harmonic(5));
  CHECK(gamma_R(cfg, h) == doctest::Approx(p_tx * gain / (n0 * pl) / (1e6 * h)).epsilon(1e-13));
  CHECK(gamma_R(cfg, 1.0) == doctest::Approx(6.165950018614817).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_R(cfg, 0.5), DomainError);
}

TEST_CASE("closed-form outage reproduces a complementary error function table") {
  // alpha = 1 makes eta = 1; the reference SNR factor is 1 so the erfc
  // argument is pi^2 lambda p / 4.
  const RadioConfig cfg = scaled_radio(1.0);
  const double table[][2] = {{0.0, 1.0},
                             {0.05, 0.94362802220298337304},
                             {0.1, 0.8875370839817151016},
                             {0.25, 0.72367360983176306701},
                             {0.5, 0.47950012218695346232},
                             {1.0, 0.15729920705028513066},
                             {1.5, 0.033894853524689272933},
                             {2.0, 0.0046777349810472658379},
                             {3.0, 0.000022090496998585441373},
                             {5.0, 1.5374597944280348502e-12}};
  for (const auto& row : table) {
    const double p = 4.0 * row[0] / (oracle::kPi * oracle::kPi * cfg.lambda_bs);
    const SlotAction a{{p}, {1.0}, 1};
    CAPTURE(row[0]);
    CHECK(outage_analytic(cfg, a, 0) == doctest::Approx(row[1]).epsilon(1e-12));
  }
}

TEST_CASE("outage vector agrees with the scratch formula") {
  RadioConfig cfg = scaled_radio(3e-3, 4, 2);
  const SlotAction a{{0.9, 0.6, 0.4, 0.1}, {0.7, 1.5, 2.5, 4.0}, 7};
  const auto o = outage_vector(cfg, a);
  const double snr = cfg.p_tx * cfg.antenna_gain / (cfg.n0 * cfg.path_loss_ref);
  for (std::size_t i = 0; i < 4; ++i) {
    const double expect = oracle::multicast_outage(cfg.lambda_bs, a.p_cach[i], a.alpha[i], a.alpha, snr,
                                                   cfg.rate_R, static_cast<double>(oracle::harmonic(7)));
    CHECK(o[i] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(o[i] == outage_analytic(cfg, a, i));
  }
}

TEST_CASE("outage properties") {
  const RadioConfig cfg = scaled_radio(1e-3);
  SUBCASE("no caching means certain outage") {
    const SlotAction a{{0.0}, {1.0}, 1};
    CHECK(outage_analytic(cfg, a, 0) == 1.0);
  }
  SUBCASE("monotone in caching probability, rate and harmonic index") {
    double prev = 1.0;
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      const double o = outage_analytic(cfg, {{p}, {1.0}, 1}, 0);
      CHECK(o <= prev);
      CHECK(o >= 0.0);
      prev = o;
    }
    prev = 0.0;
    for (double alpha = 0.1; alpha < 6.0; alpha += 0.3) {
      const double o = outage_analytic(cfg, {{0.3}, {alpha}, 1}, 0);
      CHECK(o >= prev);
      prev = o;
    }
    prev = 0.0;
    for (long m : {1L, 2L, 5L, 20L, 620L}) {
      const double o = outage_analytic(cfg, {{0.3}, {1.0}, m}, 0);
      CHECK(o >= prev);
      prev = o;
    }
  }
  SUBCASE("other path-loss exponents have no closed form") {
    RadioConfig c3 = cfg;
    c3.path_loss_exp = 3.5;
    CHECK_THROWS_AS(outage_analytic(c3, {{0.3}, {1.0}, 1}, 0), UnsupportedModelError);
  }
}

TEST_CASE("bandwidth is harmonic index times rate times inverse efficiency sum") {
  RadioConfig cfg;
  const SlotAction a{std::vector<double>(200, 0.05), std::vector<double>(200, 2.0), 620};
  const double bw = bandwidth_total(cfg, a);
  CHECK(bw == doctest::Approx(static_cast<double>(oracle::harmonic(620)) * 1e6 * 100.0).epsilon(1e-12));
  CHECK(std::abs(bw - 700e6) < 1e6);

  Rng rng(3);
  SlotAction b{std::vector<double>(6, 0.5), {}, 3};
  for (int i = 0; i < 6; ++i) b.alpha.push_back(0.2 + 3.0 * uniform01(rng));
  const double ref = bandwidth_total(cfg, b);
  std::sort(b.alpha.begin(), b.alpha.end());
  do {
    CHECK(bandwidth_total(cfg, b) == doctest::Approx(ref).epsilon(1e-14));
  } while (std::next_permutation(b.alpha.begin(), b.alpha.end()));
}

TEST_CASE("action validation") {
  CHECK_NOTHROW(validate_action({{0.5, 0.5}, {1.0, 1.0}, 1}, 2, 1));
  CHECK_THROWS_AS(validate_action({{0.5, 0.6}, {1.0, 1.0}, 1}, 2, 1), DomainError);
  CHECK_THROWS_AS(validate_action({{1.2, -0.2}, {1.0, 1.0}, 1}, 2, 1), DomainError);
  CHECK_THROWS_AS(validate_action({{0.5, 0.5}, {1.0, 0.0}, 1}, 2, 1), DomainError);
  CHECK_THROWS_AS(validate_action({{0.5, 0.5}, {1.0, 1.0}, 0}, 2, 1), DomainError);
  CHECK_THROWS_AS(validate_action({{1.0}, {1.0}, 1}, 2, 1), DomainError);
}

TEST_CASE("Monte-Carlo oracle") {
  SUBCASE("no caching gives certain outage") {
    const RadioConfig cfg = scaled_radio(1e-4);
    const auto est = mc_outage_oracle(cfg, {{0.0}, {1.0}, 1}, 0, 1000, 5);
    CHECK(est.probability == 1.0);
    CHECK(est.outages == 1000);
  }
  SUBCASE("parallel kernel equals the serial reference for any thread count") {
    const RadioConfig cfg = scaled_radio(1e-4);
    const SlotAction a{{0.2}, {2.0}, 1};
    const auto serial = mc_outage_oracle_serial(cfg, a, 0, 50000, 77);
    for (int threads : {1, 2, 3, 4}) {
      omp_set_num_threads(threads);
      const auto par = mc_outage_oracle(cfg, a, 0, 50000, 77);
      CHECK(par.outages == serial.outages);
      CHECK(par.probability == serial.probability);
    }
    omp_set_num_threads(omp_get_num_procs());
  }
  SUBCASE("mid-range point agrees with the closed form") {
    // ten files at alpha 2, H(4) ~ 2.08, link budget scaled into the
    // transition region of the outage curve
    RadioConfig cfg = scaled_radio(2e-4, 10, 2);
    cfg.lambda_bs = 100.0;
    SlotAction a{std::vector<double>(10, 0.2), std::vector<double>(10, 2.0), 4};
    const double analytic = outage_analytic(cfg, a, 0);
    CHECK(analytic > 0.05);
    CHECK(analytic < 0.95);
    const auto est = mc_outage_oracle(cfg, a, 0, 200000, 2024);
    CAPTURE(analytic);
    CAPTURE(est.probability);
    CHECK(std::abs(est.probability - analytic) < 3.0 * est.std_error);
  }
  SUBCASE("works beyond exponent 4") {
    RadioConfig cfg = scaled_radio(1e-4);
    cfg.path_loss_exp = 3.5;
    const auto est = mc_outage_oracle(cfg, {{0.5}, {1.0}, 1}, 0, 20000, 1);
    CHECK(est.probability >= 0.0);
    CHECK(est.probability <= 1.0);
    cfg.path_loss_exp = 2.0;
    CHECK_THROWS_AS(mc_outage_oracle(cfg, {{0.5}, {1.0}, 1}, 0, 100, 1), UnsupportedModelError);
  }
  SUBCASE("bad arguments") {
    const RadioConfig cfg = scaled_radio(1e-4);
    CHECK_THROWS_AS(mc_outage_oracle(cfg, {{0.5}, {1.0}, 1}, 0, 0, 1), DomainError);
    CHECK_THROWS_AS(mc_outage_oracle(cfg, {{0.5}, {1.0}, 1}, 1, 10, 1), DomainError);
  }
}
