#include <doctest.h>

#include <cmath>
#include <limits>

#include "urllc/linkphy.hpp"

using namespace urllc;

namespace {

// Reference values from a 40-digit evaluation of the same formulas.
constexpr double kQ42649 = 9.99958769247953154636551587360961e-06;
constexpr double kInvQ1e5 = 4.264890793922824628498524698906344;
constexpr double kGammaTh1e5 = 2.660100671929362947409099461806918;
constexpr double kGammaTh05 = 1.428389768790093722825719586066702;

}  // namespace

TEST_CASE("q_function reference points") {
  CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q_function(40.0) < 1e-300);
  CHECK(q_function(4.2649) == doctest::Approx(kQ42649).epsilon(1e-10));
  CHECK(std::abs(q_function(4.2649) - 1e-5) < 1e-8);
  CHECK(q_function(-2.0) == doctest::Approx(1.0 - q_function(2.0)).epsilon(1e-14));
}

TEST_CASE("q_function is decreasing") {
  // Strict on [-5, 8]; below -5 the values sit within a few ulps of 1.
  double prev = q_function(-5.0);
  for (int i = 1; i <= 1300; ++i) {
    const double q = q_function(-5.0 + i * 0.01);
    CHECK(q < prev);
    prev = q;
  }
  for (int i = 1; i <= 300; ++i) CHECK(q_function(-8.0 + i * 0.01) <= q_function(-8.0 + (i - 1) * 0.01));
}

TEST_CASE("inverse_q round trips") {
  CHECK(inverse_q(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inverse_q(1e-5) == doctest::Approx(kInvQ1e5).epsilon(1e-12));
  CHECK(inverse_q(q_function(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  for (double p : {1e-300, 1e-100, 1e-12, 1e-7, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9}) {
    const double x = inverse_q(p);
    CHECK(q_function(x) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(inverse_q(0.0), std::domain_error);
  CHECK_THROWS_AS(inverse_q(1.0), std::domain_error);
  CHECK_THROWS_AS(inverse_q(-0.1), std::domain_error);
}

TEST_CASE("achievable rate spot values") {
  QosSpec spec;
  const double scale = spec.blocklength() / (spec.packet_bits * std::log(2.0));
  CHECK(achievable_rate(3.0, 0.5, spec) == doctest::Approx(scale * std::log(4.0)).epsilon(1e-12));
  CHECK(achievable_rate(std::exp2(1.28) - 1.0, 0.5, spec) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(achievable_rate(2.66, 1e-5, spec) == doctest::Approx(0.99997002431718192).epsilon(1e-9));
}

TEST_CASE("achievable rate is monotone where positive") {
  QosSpec spec;
  for (double eps : {1e-7, 1e-5, 1e-3, 0.1}) {
    double prev = -1e300;
    for (int i = 0; i < 500; ++i) {
      const double r = achievable_rate(0.5 + 0.02 * i, eps, spec);
      if (r > 0.0 && prev > 0.0) CHECK(r >= prev);
      prev = r;
    }
  }
  for (double g : {1.0, 2.66, 10.0}) {
    double prev = -1e300;
    for (int i = 1; i < 300; ++i) {
      const double r = achievable_rate(g, std::pow(10.0, -9.0 + 0.03 * i), spec);
      if (r > 0.0 && prev > 0.0) CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("decoding error probability") {
  QosSpec spec;
  CHECK(decoding_error_prob(kGammaTh05, spec) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(decoding_error_prob(0.0, spec) == 1.0);
  CHECK(decoding_error_prob(1e-13, spec) == 1.0);
  CHECK(decoding_error_prob(std::numeric_limits<double>::infinity(), spec) == 0.0);
  const double e = decoding_error_prob(2.66, spec);
  CHECK(e == doctest::Approx(1.001238976469339e-05).epsilon(1e-8));
  CHECK(std::abs(e / 1e-5 - 1.0) < 0.5);
}

TEST_CASE("decoding error is non-increasing on a grid") {
  QosSpec spec;
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double e = decoding_error_prob(1e-4 * std::pow(1e8, i / 1000.0), spec);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("sir threshold") {
  QosSpec spec;
  CHECK(sir_threshold(0.5, spec) == doctest::Approx(kGammaTh05).epsilon(1e-7));
  CHECK(std::abs(sir_threshold(0.5, spec) - (std::exp2(1.28) - 1.0)) < 1e-4);
  CHECK(sir_threshold(1e-5, spec) == doctest::Approx(kGammaTh1e5).epsilon(1e-7));
  CHECK(sir_threshold(1e-2, spec) == doctest::Approx(2.024605242470409870).epsilon(1e-7));
  CHECK(sir_threshold(1e-4, spec) == doctest::Approx(2.467123581794270839).epsilon(1e-7));
  CHECK(sir_threshold(1e-6, spec) == doctest::Approx(2.842771431599712233).epsilon(1e-7));
  CHECK(sir_threshold(1e-9, spec) >= sir_threshold(1e-5, spec));
  // One channel use cannot carry 128 bits below the search ceiling.
  CHECK_THROWS_AS(sir_threshold(1e-5, 1.0, 128.0), InfeasibleError);
}

TEST_CASE("sir threshold inverts the decoding error") {
  QosSpec spec;
  for (double eps : {1e-2, 1e-4, 1e-6, 3e-8}) {
    const double g = sir_threshold(eps, spec);
    const double e = decoding_error_prob(g, spec);
    CHECK(e <= eps);
    CHECK(e >= 0.999 * eps);
    CHECK(decoding_error_prob(g * (1.0 - 1e-5), spec) > eps);
  }
}

TEST_CASE("fading moments") {
  QosSpec spec;
  Rng rng(2024);
  constexpr int n = 1'000'000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = sample_fading(FadingKind::rayleigh, spec, rng).gain;
    s1 += g;
    s2 += g * g;
  }
  double mean = s1 / n;
  CHECK(std::abs(mean - 1.0) < 0.01);
  CHECK(std::abs(mean - 1.0) < 3.0 * 1.0 / std::sqrt(double(n)));
  s1 = s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = sample_fading(FadingKind::nakagami, spec, rng).gain;
    CHECK_FALSE(g < 0.0);
    s1 += g;
    s2 += g * g;
  }
  mean = s1 / n;
  const double var = s2 / n - mean * mean;
  // Gamma(shape N_T m, rate m): mean N_T, variance N_T / m.
  CHECK(std::abs(mean - 16.0) < 0.1);
  CHECK(std::abs(mean - 16.0) < 3.0 * std::sqrt(16.0 / 3.0 / n));
  CHECK(std::abs(var - 16.0 / 3.0) < 0.2);
  s1 = 0.0;
  for (int i = 0; i < 100000; ++i) s1 += normalized_fading(FadingKind::nakagami, spec, rng);
  CHECK(std::abs(s1 / 100000 - 1.0) < 0.005);
  CHECK(sample_fading(FadingKind::deterministic, spec, rng).gain == 1.0);
}

TEST_CASE("spec validation") {
  QosSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.d_max_slots = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = QosSpec{};
  spec.eps_max = 1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = QosSpec{};
  spec.bandwidth_hz = 1000.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = QosSpec{};
  CHECK(spec.blocklength() == doctest::Approx(100.0));
  CHECK(spec.noise_w() == doctest::Approx(std::pow(10.0, -11.4 - 3.0)).epsilon(1e-12));
  CHECK(spec.tx_power_w() == doctest::Approx(0.19952623149688797));
}
