#include "urllc/linkphy.hpp"

#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace urllc {

void QosSpec::validate() const {
  if (d_max_slots < 2) throw ConfigError("qos.d_max_slots must be >= 2");
  if (!(eps_max > 0.0 && eps_max < 1.0)) throw ConfigError("qos.eps_max must lie in (0,1)");
  if (!(slot_ms > 0.0)) throw ConfigError("qos.slot_ms must be positive");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("qos.bandwidth_hz must be positive");
  if (packet_bits <= 0) throw ConfigError("qos.packet_bits must be positive");
  if (n_tx_antennas < 1) throw ConfigError("qos.n_tx_antennas must be >= 1");
  if (nakagami_m < 1) throw ConfigError("qos.nakagami_m must be >= 1");
  if (blocklength() < 1.0) throw ConfigError("qos: blocklength slot_ms*bandwidth_hz below one symbol");
}

double QosSpec::noise_w(double band_hz) const {
  const double dbm = noise_dbm ? *noise_dbm : -174.0 + 10.0 * std::log10(bandwidth_hz);
  // The configured value refers to the full band; sub-bands scale linearly.
  return dbm_to_watt(dbm) * band_hz / bandwidth_hz;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace {

// Acklam's rational approximation of the standard normal quantile.
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double inverse_q(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inverse_q: p must lie in (0,1)");
  // Q^{-1}(p) is the normal quantile at 1-p; start from the quantile at p and flip.
  double x = -acklam_quantile(p);
  for (int it = 0; it < 3; ++it) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0.0) break;
    const double err = q_function(x) - p;
    // Halley step on Q(x) - p, using Q'' = x * pdf.
    const double u = err / pdf;
    x += u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double achievable_rate(double gamma, double eps_d, const QosSpec& spec) {
  const double n = spec.blocklength();
  const double v = 1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma));
  return n / (spec.packet_bits * std::numbers::ln2) *
         (std::log1p(gamma) - std::sqrt(v / n) * inverse_q(eps_d));
}

double decoding_error_prob(double gamma, double blocklength, double packet_bits) {
  if (!(gamma > 0.0)) return 1.0;
  if (std::isinf(gamma)) return 0.0;
  const double v = 1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma));
  if (v < 1e-12) return 1.0;
  const double arg = std::sqrt(blocklength / v) *
                     (std::log1p(gamma) - packet_bits * std::numbers::ln2 / blocklength);
  return std::clamp(q_function(arg), 0.0, 1.0);
}

double sir_threshold(double eps_th, double blocklength, double packet_bits) {
  if (!(eps_th > 0.0 && eps_th < 1.0))
    throw std::domain_error("sir_threshold: eps_th must lie in (0,1)");
  double hi = 1e9;
  if (decoding_error_prob(hi, blocklength, packet_bits) > eps_th)
    throw InfeasibleError("sir_threshold: target " + std::to_string(eps_th) +
                          " unreachable for SIR up to 1e9");
  double lo = 1e-12;
  if (decoding_error_prob(lo, blocklength, packet_bits) <= eps_th) return lo;
  while (hi / lo - 1.0 > 1e-9) {
    const double mid = std::sqrt(lo * hi);
    if (decoding_error_prob(mid, blocklength, packet_bits) <= eps_th)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

FadingDraw sample_fading(FadingKind kind, const QosSpec& spec, Rng& rng) {
  switch (kind) {
    case FadingKind::rayleigh: {
      std::exponential_distribution<double> e(1.0);
      return {e(rng)};
    }
    case FadingKind::nakagami: {
      std::gamma_distribution<double> g(double(spec.n_tx_antennas) * spec.nakagami_m,
                                        1.0 / spec.nakagami_m);
      return {g(rng)};
    }
    case FadingKind::deterministic:
      return {1.0};
  }
  return {1.0};
}

double normalized_fading(FadingKind kind, const QosSpec& spec, Rng& rng) {
  const double g = sample_fading(kind, spec, rng).gain;
  return kind == FadingKind::nakagami ? g / spec.n_tx_antennas : g;
}

}  // namespace urllc
