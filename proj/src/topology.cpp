#include "urllc/topology.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>

namespace urllc {

using json = nlohmann::json;

double PathLoss::gain(double distance_m) const {
  const double r = std::max(distance_m, kMinDistanceM);
  if (kind == Kind::power_law) return std::pow(r, -alpha);
  return std::pow(10.0, -(intercept_db + slope_db * std::log10(r)) / 10.0);
}

Eigen::Vector2d NetworkInstance::displacement(const Eigen::Vector2d& from,
                                              const Eigen::Vector2d& to) const {
  Eigen::Vector2d d = to - from;
  if (!torus) return d;
  // Reduce into the fundamental cell, then search neighbouring images.
  const Eigen::Vector2d c = torus->colPivHouseholderQr().solve(d);
  const Eigen::Vector2d base = d - (*torus) * c.array().round().matrix();
  Eigen::Vector2d best = base;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) {
      const Eigen::Vector2d cand = base + a * torus->col(0) + b * torus->col(1);
      if (cand.squaredNorm() < best.squaredNorm()) best = cand;
    }
  return best;
}

double NetworkInstance::distance(int i, int k) const {
  return displacement(tx_pos.row(i).transpose(), rx_pos.row(k).transpose()).norm();
}

void NetworkInstance::rebuild_gain() {
  const int k = k_links();
  gain.resize(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gain(i, j) = path_loss.gain(distance(i, j));
}

void NetworkInstance::validate() const {
  const int k = k_links();
  if (rx_pos.rows() != k || gain.rows() != k || gain.cols() != k || arrival.size() != k ||
      reuse_group.size() != k || bandwidth_hz.size() != k || measured.size() != k)
    throw ConfigError("instance: field lengths disagree with k_links");
  if (!(gain.array() > 0.0).all() || !gain.allFinite())
    throw ConfigError("instance: gains must be positive and finite");
  if (!((arrival.array() > 0.0) && (arrival.array() < 1.0)).all())
    throw ConfigError("instance: arrival rates must lie in (0,1)");
}

void SymmetricScenario::validate() const {
  if (!(density_per_km2 > 0.0)) throw ConfigError("scenario.density must be positive");
  if (!(r0_m > 0.0)) throw ConfigError("scenario.r0 must be positive");
  if (!(alpha > 2.0)) throw ConfigError("scenario.alpha must exceed 2");
  if (!(lambda0 > 0.0 && lambda0 < 1.0)) throw ConfigError("scenario.lambda0 must lie in (0,1)");
}

namespace {

struct Square {
  double inner_side;
  double guard;
  double side() const { return inner_side + 2.0 * guard; }
  bool interior(double x, double y) const {
    return x >= guard && x < guard + inner_side && y >= guard && y < guard + inner_side;
  }
};

// Uniform transmitters on the padded square; receivers placed by `place_rx`.
template <class PlaceRx>
NetworkInstance scatter(const Square& sq, double density_per_m2, Rng& rng, PlaceRx&& place_rx) {
  std::poisson_distribution<long> count(density_per_m2 * sq.side() * sq.side());
  const long n = count(rng);
  std::uniform_real_distribution<double> u(0.0, sq.side());
  NetworkInstance inst;
  inst.tx_pos.resize(n, 2);
  inst.rx_pos.resize(n, 2);
  inst.arrival.resize(n);
  inst.measured.resize(n);
  for (long i = 0; i < n; ++i) {
    inst.tx_pos(i, 0) = u(rng);
    inst.tx_pos(i, 1) = u(rng);
  }
  for (long i = 0; i < n; ++i) {
    place_rx(i, inst);
    inst.measured(i) = sq.interior(inst.tx_pos(i, 0), inst.tx_pos(i, 1));
  }
  inst.reuse_group = Eigen::VectorXi::Zero(n);
  inst.bandwidth_hz = Eigen::VectorXd::Constant(n, 1e6);
  return inst;
}

}  // namespace

NetworkInstance gen_bipolar(const SymmetricScenario& scenario, double area_km2, Rng& rng,
                            double guard_m) {
  scenario.validate();
  if (!(area_km2 > 0.0)) throw ConfigError("bipolar: area must be positive");
  const double rho = scenario.density_per_m2();
  const Square sq{std::sqrt(area_km2) * 1e3, guard_m < 0.0 ? 5.0 / std::sqrt(rho) : guard_m};
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  NetworkInstance inst = scatter(sq, rho, rng, [&](long i, NetworkInstance& in) {
    const double phi = angle(rng);
    in.rx_pos(i, 0) = in.tx_pos(i, 0) + scenario.r0_m * std::cos(phi);
    in.rx_pos(i, 1) = in.tx_pos(i, 1) + scenario.r0_m * std::sin(phi);
    in.arrival(i) = scenario.lambda0;
  });
  inst.path_loss = PathLoss::power(scenario.alpha);
  inst.rebuild_gain();
  return inst;
}

NetworkInstance gen_random_area(const RandomAreaOptions& o, Rng& rng) {
  if (!(o.density_per_km2 > 0.0 && o.area_km2 > 0.0))
    throw ConfigError("random_area: density and area must be positive");
  if (!(o.link_min_m > 0.0 && o.link_min_m <= o.link_max_m))
    throw ConfigError("random_area: invalid link distance range");
  if (!(o.arrival_min > 0.0 && o.arrival_min <= o.arrival_max && o.arrival_max < 1.0))
    throw ConfigError("random_area: invalid arrival range");
  if (!(o.alpha > 2.0)) throw ConfigError("random_area: alpha must exceed 2");
  const double rho = o.density_per_km2 * 1e-6;
  const Square sq{std::sqrt(o.area_km2) * 1e3, o.guard_m < 0.0 ? 5.0 / std::sqrt(rho) : o.guard_m};
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> dist(o.link_min_m, o.link_max_m);
  std::uniform_real_distribution<double> lam(o.arrival_min, o.arrival_max);
  NetworkInstance inst = scatter(sq, rho, rng, [&](long i, NetworkInstance& in) {
    const double phi = angle(rng);
    const double r = dist(rng);
    in.rx_pos(i, 0) = in.tx_pos(i, 0) + r * std::cos(phi);
    in.rx_pos(i, 1) = in.tx_pos(i, 1) + r * std::sin(phi);
    in.arrival(i) = lam(rng);
  });
  inst.path_loss = PathLoss::power(o.alpha);
  inst.rebuild_gain();
  return inst;
}

namespace {

struct HexBlocks {
  int nx;
  int ny;
};

HexBlocks hex_blocks(int regions) {
  switch (regions) {
    case 1: return {1, 1};
    case 2: return {2, 1};
    case 4: return {2, 2};
    default:
      throw ConfigError("topology.regions must be 1, 2 or 4 (got " + std::to_string(regions) + ")");
  }
}

}  // namespace

Eigen::MatrixX2i hex_cells(int regions) {
  const HexBlocks blocks = hex_blocks(regions);
  Eigen::MatrixX2i cells(25 * regions, 2);
  int n = 0;
  // Blocks of 5x5 cells in offset rows, so the layout is roughly rectangular.
  for (int by = 0; by < blocks.ny; ++by)
    for (int bx = 0; bx < blocks.nx; ++bx)
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) {
          const int row = 5 * by + j;
          cells(n, 0) = 5 * bx + i - row / 2;
          cells(n, 1) = row;
          ++n;
        }
  return cells;
}

NetworkInstance gen_hexagonal(const HexOptions& o, Rng& rng) {
  const HexBlocks blocks = hex_blocks(o.regions);
  if (o.reuse != 1 && o.reuse != 3 && o.reuse != 7)
    throw ConfigError("topology.reuse must be 1, 3 or 7 (got " + std::to_string(o.reuse) + ")");
  if (!(o.cell_radius_m > 0.0)) throw ConfigError("topology.cell_radius must be positive");
  if (!(o.link_min_m > 0.0 && o.link_min_m <= o.link_max_m))
    throw ConfigError("topology: invalid link distance range");
  if (!(o.arrival_min > 0.0 && o.arrival_min <= o.arrival_max && o.arrival_max < 1.0))
    throw ConfigError("topology: invalid arrival range");

  const Eigen::MatrixX2i cells = hex_cells(o.regions);
  const int k = static_cast<int>(cells.rows());
  const double rad = o.cell_radius_m;
  const double sq3 = std::sqrt(3.0);
  NetworkInstance inst;
  inst.tx_pos.resize(k, 2);
  inst.rx_pos.resize(k, 2);
  inst.arrival.resize(k);
  inst.reuse_group.resize(k);
  inst.measured = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(k, true);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> dist(o.link_min_m, o.link_max_m);
  std::uniform_real_distribution<double> lam(o.arrival_min, o.arrival_max);
  for (int c = 0; c < k; ++c) {
    const int q = cells(c, 0);
    const int r = cells(c, 1);
    inst.tx_pos(c, 0) = sq3 * rad * (q + 0.5 * r);
    inst.tx_pos(c, 1) = 1.5 * rad * r;
    const double phi = angle(rng);
    const double d = dist(rng);
    inst.rx_pos(c, 0) = inst.tx_pos(c, 0) + d * std::cos(phi);
    inst.rx_pos(c, 1) = inst.tx_pos(c, 1) + d * std::sin(phi);
    inst.arrival(c) = lam(rng);
    // Proper colourings of the hex lattice in axial coordinates.
    if (o.reuse == 1)
      inst.reuse_group(c) = 0;
    else if (o.reuse == 3)
      inst.reuse_group(c) = ((q - r) % 3 + 3) % 3;
    else
      inst.reuse_group(c) = ((q + 3 * r) % 7 + 7) % 7;
  }
  inst.bandwidth_hz = Eigen::VectorXd::Constant(k, o.total_bandwidth_hz / o.reuse);
  inst.path_loss = PathLoss::log_distance(35.3, 37.6);

  HexBoundary boundary = o.boundary;
  if (boundary == HexBoundary::automatic)
    boundary = o.reuse == 1 ? HexBoundary::torus : HexBoundary::open;
  if (boundary == HexBoundary::torus) {
    if (o.reuse != 1)
      throw ConfigError("topology: torus boundary only supports reuse 1");
    Eigen::Matrix2d basis;
    basis.col(0) << sq3 * rad * 5 * blocks.nx, 0.0;
    basis.col(1) << sq3 * rad * 0.5 * 5 * blocks.ny, 1.5 * rad * 5 * blocks.ny;
    inst.torus = basis;
  }
  inst.rebuild_gain();
  return inst;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> interference_mask(
    const NetworkInstance& instance, double cutoff_m) {
  const int k = instance.k_links();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      mask(i, j) = i != j && instance.reuse_group(i) == instance.reuse_group(j) &&
                   instance.distance(i, j) <= cutoff_m;
  return mask;
}

namespace {

json matrix_rows(const Eigen::MatrixX2d& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back({m(i, 0), m(i, 1)});
  return out;
}

Eigen::MatrixX2d rows_matrix(const json& j, int k, const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != k)
    throw ConfigError(std::string("instance.") + field + ": expected " + std::to_string(k) + " rows");
  Eigen::MatrixX2d m(k, 2);
  for (int i = 0; i < k; ++i) {
    m(i, 0) = j[i].at(0).get<double>();
    m(i, 1) = j[i].at(1).get<double>();
  }
  return m;
}

template <class Vec>
Vec vector_of(const json& j, int k, const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != k)
    throw ConfigError(std::string("instance.") + field + ": expected " + std::to_string(k) + " entries");
  Vec v(k);
  for (int i = 0; i < k; ++i) v(i) = j[i].get<typename Vec::Scalar>();
  return v;
}

}  // namespace

std::string instance_to_json(const NetworkInstance& inst) {
  const int k = inst.k_links();
  json j;
  j["k_links"] = k;
  j["tx_pos"] = matrix_rows(inst.tx_pos);
  j["rx_pos"] = matrix_rows(inst.rx_pos);
  json gain = json::array();
  for (int i = 0; i < k; ++i)
    for (int c = 0; c < k; ++c) gain.push_back(inst.gain(i, c));
  j["gain"] = gain;
  j["arrival"] = std::vector<double>(inst.arrival.data(), inst.arrival.data() + k);
  j["reuse_group"] = std::vector<int>(inst.reuse_group.data(), inst.reuse_group.data() + k);
  j["bandwidth_hz"] = std::vector<double>(inst.bandwidth_hz.data(), inst.bandwidth_hz.data() + k);
  std::vector<int> measured(k);
  for (int i = 0; i < k; ++i) measured[i] = inst.measured(i) ? 1 : 0;
  j["measured"] = measured;
  if (inst.path_loss.kind == PathLoss::Kind::power_law)
    j["path_loss"] = {{"kind", "power_law"}, {"alpha", inst.path_loss.alpha}};
  else
    j["path_loss"] = {{"kind", "log_distance"},
                      {"intercept_db", inst.path_loss.intercept_db},
                      {"slope_db", inst.path_loss.slope_db}};
  if (inst.torus)
    j["torus"] = {{(*inst.torus)(0, 0), (*inst.torus)(1, 0)},
                  {(*inst.torus)(0, 1), (*inst.torus)(1, 1)}};
  return j.dump();
}

NetworkInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance: parse error: ") + e.what());
  }
  try {
    NetworkInstance inst;
    const int k = j.at("k_links").get<int>();
    if (k < 0) throw ConfigError("instance.k_links must be non-negative");
    inst.tx_pos = rows_matrix(j.at("tx_pos"), k, "tx_pos");
    inst.rx_pos = rows_matrix(j.at("rx_pos"), k, "rx_pos");
    const json& g = j.at("gain");
    if (!g.is_array() || static_cast<long>(g.size()) != long(k) * k)
      throw ConfigError("instance.gain: expected k_links^2 entries");
    inst.gain.resize(k, k);
    for (int i = 0; i < k; ++i)
      for (int c = 0; c < k; ++c) inst.gain(i, c) = g[i * k + c].get<double>();
    inst.arrival = vector_of<Eigen::VectorXd>(j.at("arrival"), k, "arrival");
    inst.reuse_group = vector_of<Eigen::VectorXi>(j.at("reuse_group"), k, "reuse_group");
    inst.bandwidth_hz = vector_of<Eigen::VectorXd>(j.at("bandwidth_hz"), k, "bandwidth_hz");
    inst.measured = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(k, true);
    if (j.contains("measured")) {
      const Eigen::VectorXi m = vector_of<Eigen::VectorXi>(j["measured"], k, "measured");
      for (int i = 0; i < k; ++i) inst.measured(i) = m(i) != 0;
    }
    if (j.contains("path_loss")) {
      const json& p = j["path_loss"];
      if (p.at("kind") == "power_law")
        inst.path_loss = PathLoss::power(p.at("alpha").get<double>());
      else
        inst.path_loss = PathLoss::log_distance(p.at("intercept_db").get<double>(),
                                                p.at("slope_db").get<double>());
    }
    if (j.contains("torus")) {
      const json& t = j["torus"];
      Eigen::Matrix2d b;
      b << t.at(0).at(0).get<double>(), t.at(1).at(0).get<double>(),
          t.at(0).at(1).get<double>(), t.at(1).at(1).get<double>();
      inst.torus = b;
    }
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
}

}  // namespace urllc
