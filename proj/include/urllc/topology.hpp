#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "urllc/common.hpp"

namespace urllc {

// Large-scale path gain as a function of distance in meters.
struct PathLoss {
  enum class Kind { power_law, log_distance };
  Kind kind = Kind::power_law;
  double alpha = 4.0;       // power_law: gain = r^-alpha
  double intercept_db = 35.3;  // log_distance: loss_db = intercept + slope*log10(r)
  double slope_db = 37.6;

  double gain(double distance_m) const;
  static PathLoss power(double alpha) { return {Kind::power_law, alpha, 0.0, 0.0}; }
  static PathLoss log_distance(double intercept_db, double slope_db) {
    return {Kind::log_distance, 0.0, intercept_db, slope_db};
  }
};

// Distances below this are floored before the path-loss law is applied.
inline constexpr double kMinDistanceM = 1.0;

struct NetworkInstance {
  Eigen::MatrixX2d tx_pos;
  Eigen::MatrixX2d rx_pos;
  Eigen::MatrixXd gain;  // (i,k): transmitter i to receiver k, linear
  Eigen::VectorXd arrival;
  Eigen::VectorXi reuse_group;
  Eigen::VectorXd bandwidth_hz;
  // Links whose statistics are reported; padding links only interfere.
  Eigen::Array<bool, Eigen::Dynamic, 1> measured;
  PathLoss path_loss;
  // Columns are the two periods of a periodic layout.
  std::optional<Eigen::Matrix2d> torus;

  int k_links() const { return static_cast<int>(tx_pos.rows()); }
  int measured_count() const { return static_cast<int>(measured.count()); }
  // Transmitter i to receiver k, using the minimum image on a torus.
  double distance(int i, int k) const;
  Eigen::Vector2d displacement(const Eigen::Vector2d& from, const Eigen::Vector2d& to) const;
  void rebuild_gain();
  void validate() const;
};

struct SymmetricScenario {
  double density_per_km2 = 28.0;
  double r0_m = 75.0;
  double lambda0 = 0.05;
  double alpha = 4.0;

  double density_per_m2() const { return density_per_km2 * 1e-6; }
  void validate() const;
};

// Negative guard selects the default width 5/sqrt(rho).
NetworkInstance gen_bipolar(const SymmetricScenario& scenario, double area_km2, Rng& rng,
                            double guard_m = -1.0);

struct RandomAreaOptions {
  double density_per_km2 = 28.0;
  double area_km2 = 9.0;
  double alpha = 4.0;
  double link_min_m = 50.0;
  double link_max_m = 100.0;
  double arrival_min = 0.01;
  double arrival_max = 0.1;
  double guard_m = -1.0;
};

NetworkInstance gen_random_area(const RandomAreaOptions& options, Rng& rng);

enum class HexBoundary { automatic, open, torus };

struct HexOptions {
  int regions = 1;  // 1, 2 or 4 blocks of 25 cells
  double cell_radius_m = 100.0;
  int reuse = 1;  // denominator of the reuse factor: 1, 3 or 7
  double link_min_m = 50.0;
  double link_max_m = 100.0;
  double arrival_min = 0.01;
  double arrival_max = 0.1;
  double total_bandwidth_hz = 1e6;
  HexBoundary boundary = HexBoundary::automatic;
};

NetworkInstance gen_hexagonal(const HexOptions& options, Rng& rng);

// Axial coordinates of the cells, in link order.
Eigen::MatrixX2i hex_cells(int regions);

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> interference_mask(
    const NetworkInstance& instance, double cutoff_m);

std::string instance_to_json(const NetworkInstance& instance);
NetworkInstance instance_from_json(const std::string& text);

}  // namespace urllc
