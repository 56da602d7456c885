#pragma once

#include <cmath>
#include <optional>

#include "urllc/common.hpp"

namespace urllc {

enum class QueueConvention {
  slot_units,         // eps_q = exp(-lambda * Dq * (e^theta - 1))
  scaled_by_slot_ms,  // same exponent divided by the numeric slot length in ms
};

struct QosSpec {
  int d_max_slots = 50;
  double eps_max = 1e-5;
  double slot_ms = 0.1;
  double bandwidth_hz = 1e6;
  int packet_bits = 128;
  int n_tx_antennas = 16;
  double tx_power_dbm = 23.0;
  std::optional<double> noise_dbm;  // thermal -174 dBm/Hz over the band when unset
  int nakagami_m = 3;
  QueueConvention queue_convention = QueueConvention::slot_units;

  void validate() const;
  double blocklength() const { return slot_ms * 1e-3 * bandwidth_hz; }
  double tx_power_w() const { return dbm_to_watt(tx_power_dbm); }
  // Noise power for a link that only owns `band_hz` of spectrum.
  double noise_w(double band_hz) const;
  double noise_w() const { return noise_w(bandwidth_hz); }

  static double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
};

struct FadingDraw {
  double gain = 1.0;
};

enum class FadingKind { rayleigh, nakagami, deterministic };

double q_function(double x);
double inverse_q(double p);

// Packets per slot; a negative value signals that the rate cannot carry a packet.
double achievable_rate(double gamma, double eps_d, const QosSpec& spec);

double decoding_error_prob(double gamma, double blocklength, double packet_bits);
inline double decoding_error_prob(double gamma, const QosSpec& spec) {
  return decoding_error_prob(gamma, spec.blocklength(), spec.packet_bits);
}

double sir_threshold(double eps_th, double blocklength, double packet_bits);
inline double sir_threshold(double eps_th, const QosSpec& spec) {
  return sir_threshold(eps_th, spec.blocklength(), spec.packet_bits);
}

// Channel power draw.  Rayleigh gives an Exp(1) variate.  Nakagami gives the
// raw h*h, a Gamma(N_T m, rate m) variate with mean N_T; callers divide by
// N_T (see normalized_fading) before it enters the SINR.
FadingDraw sample_fading(FadingKind kind, const QosSpec& spec, Rng& rng);

// Unit-mean power gain for the SINR: Nakagami draws are divided by N_T.
double normalized_fading(FadingKind kind, const QosSpec& spec, Rng& rng);

}  // namespace urllc
