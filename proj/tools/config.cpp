#include "config.hpp"

#include <cstdio>
#include <json.hpp>
#include <set>
#include <utility>

namespace urllc::cli {

using nlohmann::json;

namespace {

template <class E>
using NameTable = std::vector<std::pair<E, const char*>>;

const NameTable<TopologyKind> kTopologyKinds = {{TopologyKind::bipolar, "bipolar"},
                                                {TopologyKind::random_area, "random_area"},
                                                {TopologyKind::hexagonal, "hexagonal"},
                                                {TopologyKind::file, "file"}};
const NameTable<PolicySource> kPolicySources = {{PolicySource::es, "es"},
                                                {PolicySource::regnn, "regnn"},
                                                {PolicySource::no_rep, "no-rep"},
                                                {PolicySource::k_rep, "k-rep"},
                                                {PolicySource::explicit_nm, "explicit"}};
const NameTable<HexBoundary> kBoundaries = {{HexBoundary::automatic, "auto"},
                                            {HexBoundary::open, "open"},
                                            {HexBoundary::torus, "torus"}};
const NameTable<QueueConvention> kConventions = {
    {QueueConvention::slot_units, "slot_units"},
    {QueueConvention::scaled_by_slot_ms, "scaled_by_slot_ms"}};
const NameTable<ActivityModel> kActivity = {{ActivityModel::bernoulli, "bernoulli"},
                                            {ActivityModel::pattern, "pattern"}};
const NameTable<FadingKind> kFading = {{FadingKind::rayleigh, "rayleigh"},
                                       {FadingKind::nakagami, "nakagami"},
                                       {FadingKind::deterministic, "deterministic"}};
const NameTable<ViolationCriterion> kCriteria = {{ViolationCriterion::overall, "overall"},
                                                 {ViolationCriterion::min_slot, "min_slot"}};
const NameTable<Optimizer> kOptimizers = {{Optimizer::sgd, "sgd"}, {Optimizer::adam, "adam"}};
const NameTable<InitMean> kInitMeans = {{InitMean::zero, "zero"}, {InitMean::identity, "identity"}};

template <class E>
const char* name_of(const NameTable<E>& table, E value) {
  for (const auto& [v, n] : table)
    if (v == value) return n;
  return "?";
}

// Reads the keys of one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + display() + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: field '" + field(key) + "' has the wrong type");
    }
  }

  template <class E>
  void get_enum(const char* key, const NameTable<E>& table, E& out) {
    std::string s;
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    get(key, s);
    for (const auto& [v, n] : table)
      if (s == n) {
        out = v;
        return;
      }
    std::string allowed;
    for (const auto& [v, n] : table) allowed += std::string(allowed.empty() ? "" : ", ") + n;
    throw ConfigError("config: field '" + field(key) + "' must be one of " + allowed);
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, field(key));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("config: unknown field '" + field(k) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

void validate(const ExperimentConfig& c) {
  require(c.version == 1, "version must be 1");
  const TopologyConfig& t = c.topology;
  switch (t.kind) {
    case TopologyKind::bipolar:
      require(t.area_km2 > 0.0, "topology.area_km2 must be positive");
      require(t.symmetric.density_per_km2 > 0.0, "topology.density_per_km2 must be positive");
      require(t.symmetric.r0_m > 0.0, "topology.r0_m must be positive");
      require(t.symmetric.lambda0 > 0.0 && t.symmetric.lambda0 < 1.0,
              "topology.lambda0 must lie in (0,1)");
      require(t.symmetric.alpha > 2.0, "topology.alpha must exceed 2");
      break;
    case TopologyKind::random_area:
      require(t.random_area.area_km2 > 0.0, "topology.area_km2 must be positive");
      require(t.random_area.density_per_km2 > 0.0, "topology.density_per_km2 must be positive");
      break;
    case TopologyKind::hexagonal:
      require(t.hex.reuse == 1 || t.hex.reuse == 3 || t.hex.reuse == 7,
              "topology.reuse must be 1, 3 or 7");
      require(t.hex.regions == 1 || t.hex.regions == 2 || t.hex.regions == 4,
              "topology.regions must be 1, 2 or 4");
      require(t.hex.cell_radius_m > 0.0, "topology.cell_radius_m must be positive");
      break;
    case TopologyKind::file:
      require(!t.path.empty(), "topology.path is required for kind 'file'");
      break;
  }
  try {
    c.qos.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: qos: ") + e.what());
  }
  require(c.mc.realizations >= 1, "mc.realizations must be >= 1");
  require(c.mc.frames >= 1, "mc.frames must be >= 1");
  require(c.mc.cutoff_m > 0.0, "mc.cutoff_m must be positive");
  if (c.policy.source == PolicySource::explicit_nm)
    require(c.policy.m >= 1 && c.policy.m <= c.policy.n && c.policy.n <= 64,
            "policy.n and policy.m must satisfy 1 <= m <= n <= 64");
  if (c.policy.source == PolicySource::regnn)
    require(!c.policy.checkpoint.empty(), "policy.checkpoint is required for source 'regnn'");
  require(c.train.checkpoint_interval >= 1, "train.checkpoint_interval must be >= 1");
  try {
    c.train.config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  require(c.analyze.sweep == "density" || c.analyze.sweep == "lambda0" || c.analyze.sweep == "gamma",
          "analyze.sweep must be one of density, lambda0, gamma");
  require(c.analyze.n0 >= 0 && c.analyze.m0 >= 0 && c.analyze.m0 <= c.analyze.n0,
          "analyze.n0 and analyze.m0 must satisfy 0 <= m0 <= n0");
}

}  // namespace

std::string to_string(PolicySource source) { return name_of(kPolicySources, source); }

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.mc.seed = c.seed;
  c.train.config.seed = c.seed;
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  ExperimentConfig c = default_config();
  Section root(j, "");
  root.get("version", c.version);
  root.get("seed", c.seed);
  c.mc.seed = c.seed;
  c.train.config.seed = c.seed;

  {
    Section s = root.child("topology");
    TopologyConfig& t = c.topology;
    s.get_enum("kind", kTopologyKinds, t.kind);
    // Shared names map onto whichever generator the kind selects.
    double density = t.kind == TopologyKind::random_area ? t.random_area.density_per_km2
                                                         : t.symmetric.density_per_km2;
    double area = t.kind == TopologyKind::random_area ? t.random_area.area_km2 : t.area_km2;
    double guard = -1.0;
    double alpha = t.symmetric.alpha;
    s.get("density_per_km2", density);
    s.get("area_km2", area);
    s.get("guard_m", guard);
    s.get("alpha", alpha);
    s.get("r0_m", t.symmetric.r0_m);
    s.get("lambda0", t.symmetric.lambda0);
    s.get("regions", t.hex.regions);
    s.get("reuse", t.hex.reuse);
    s.get("cell_radius_m", t.hex.cell_radius_m);
    s.get("total_bandwidth_hz", t.hex.total_bandwidth_hz);
    s.get_enum("boundary", kBoundaries, t.hex.boundary);
    double lmin = t.hex.link_min_m, lmax = t.hex.link_max_m;
    double amin = t.hex.arrival_min, amax = t.hex.arrival_max;
    s.get("link_min_m", lmin);
    s.get("link_max_m", lmax);
    s.get("arrival_min", amin);
    s.get("arrival_max", amax);
    s.get("path", t.path);
    s.finish();
    t.symmetric.density_per_km2 = t.random_area.density_per_km2 = density;
    t.symmetric.alpha = t.random_area.alpha = alpha;
    t.guard_m = t.random_area.guard_m = guard;
    if (t.kind == TopologyKind::random_area) t.random_area.area_km2 = area;
    else t.area_km2 = area;
    t.hex.link_min_m = t.random_area.link_min_m = lmin;
    t.hex.link_max_m = t.random_area.link_max_m = lmax;
    t.hex.arrival_min = t.random_area.arrival_min = amin;
    t.hex.arrival_max = t.random_area.arrival_max = amax;
  }
  {
    Section s = root.child("qos");
    QosSpec& q = c.qos;
    s.get("d_max_slots", q.d_max_slots);
    s.get("eps_max", q.eps_max);
    s.get("slot_ms", q.slot_ms);
    s.get("bandwidth_hz", q.bandwidth_hz);
    s.get("packet_bits", q.packet_bits);
    s.get("n_tx_antennas", q.n_tx_antennas);
    s.get("tx_power_dbm", q.tx_power_dbm);
    if (s.has("noise_dbm")) {
      double n = 0.0;
      s.get("noise_dbm", n);
      q.noise_dbm = n;
    }
    s.get("nakagami_m", q.nakagami_m);
    s.get_enum("queue_convention", kConventions, q.queue_convention);
    s.finish();
  }
  {
    Section s = root.child("policy");
    s.get_enum("source", kPolicySources, c.policy.source);
    s.get("checkpoint", c.policy.checkpoint);
    s.get("n", c.policy.n);
    s.get("m", c.policy.m);
    s.finish();
  }
  {
    Section s = root.child("mc");
    McOptions& m = c.mc;
    s.get("realizations", m.realizations);
    s.get("frames", m.frames);
    s.get("seed", m.seed);
    s.get_enum("activity", kActivity, m.activity);
    s.get_enum("fading", kFading, m.fading);
    s.get("refresh_per_slot", m.refresh_per_slot);
    s.get("cutoff_m", m.cutoff_m);
    s.get("nearest_only", m.nearest_only);
    s.get_enum("criterion", kCriteria, m.criterion);
    s.finish();
  }
  {
    Section s = root.child("train");
    TrainConfig& t = c.train.config;
    s.get("batch", t.batch);
    s.get("lr_n", t.lr_n);
    s.get("lr_m", t.lr_m);
    s.get("iterations", t.iterations);
    s.get("probe_frames", t.probe_frames);
    s.get("probe_cutoff_m", t.probe_cutoff_m);
    s.get("baseline", t.baseline);
    s.get("baseline_decay", t.baseline_decay);
    s.get_enum("optimizer", kOptimizers, t.optimizer);
    s.get("seed", t.seed);
    s.get("checkpoint_interval", c.train.checkpoint_interval);
    s.get("resume", c.train.resume);
    Section r = s.child("regnn");
    RegnnHyper& h = c.train.hyper;
    r.get("layers", h.layers);
    r.get("taps", h.taps);
    r.get("features", h.features);
    r.get("beta_min", h.beta_min);
    r.get("init_std", h.init_std);
    r.get_enum("init_mean", kInitMeans, h.init_mean);
    r.get("arrival_scale", h.arrival_scale);
    r.finish();
    s.finish();
  }
  {
    Section s = root.child("eval");
    if (s.has("compare")) {
      std::vector<std::string> names;
      s.get("compare", names);
      for (const std::string& n : names) {
        bool found = false;
        for (const auto& [v, name] : kPolicySources)
          if (n == name && v != PolicySource::explicit_nm && v != PolicySource::regnn) {
            c.eval.compare.push_back(v);
            found = true;
          }
        require(found, "field 'eval.compare' accepts es, no-rep and k-rep, got '" + n + "'");
      }
    }
    s.get("cdf", c.eval.cdf);
    s.finish();
  }
  {
    Section s = root.child("analyze");
    s.get("sweep", c.analyze.sweep);
    s.get("values", c.analyze.values);
    s.get("n0", c.analyze.n0);
    s.get("m0", c.analyze.m0);
    s.finish();
  }
  root.finish();
  validate(c);
  return c;
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["seed"] = c.seed;
  const TopologyConfig& t = c.topology;
  json& top = j["topology"];
  top["kind"] = name_of(kTopologyKinds, t.kind);
  switch (t.kind) {
    case TopologyKind::bipolar:
      top["density_per_km2"] = t.symmetric.density_per_km2;
      top["r0_m"] = t.symmetric.r0_m;
      top["lambda0"] = t.symmetric.lambda0;
      top["alpha"] = t.symmetric.alpha;
      top["area_km2"] = t.area_km2;
      top["guard_m"] = t.guard_m;
      break;
    case TopologyKind::random_area:
      top["density_per_km2"] = t.random_area.density_per_km2;
      top["area_km2"] = t.random_area.area_km2;
      top["alpha"] = t.random_area.alpha;
      top["guard_m"] = t.random_area.guard_m;
      top["link_min_m"] = t.random_area.link_min_m;
      top["link_max_m"] = t.random_area.link_max_m;
      top["arrival_min"] = t.random_area.arrival_min;
      top["arrival_max"] = t.random_area.arrival_max;
      break;
    case TopologyKind::hexagonal:
      top["regions"] = t.hex.regions;
      top["reuse"] = t.hex.reuse;
      top["cell_radius_m"] = t.hex.cell_radius_m;
      top["total_bandwidth_hz"] = t.hex.total_bandwidth_hz;
      top["boundary"] = name_of(kBoundaries, t.hex.boundary);
      top["link_min_m"] = t.hex.link_min_m;
      top["link_max_m"] = t.hex.link_max_m;
      top["arrival_min"] = t.hex.arrival_min;
      top["arrival_max"] = t.hex.arrival_max;
      break;
    case TopologyKind::file:
      top["path"] = t.path;
      break;
  }
  const QosSpec& q = c.qos;
  j["qos"] = {{"d_max_slots", q.d_max_slots},
              {"eps_max", q.eps_max},
              {"slot_ms", q.slot_ms},
              {"bandwidth_hz", q.bandwidth_hz},
              {"packet_bits", q.packet_bits},
              {"n_tx_antennas", q.n_tx_antennas},
              {"tx_power_dbm", q.tx_power_dbm},
              {"nakagami_m", q.nakagami_m},
              {"queue_convention", name_of(kConventions, q.queue_convention)}};
  if (q.noise_dbm) j["qos"]["noise_dbm"] = *q.noise_dbm;
  j["policy"] = {{"source", to_string(c.policy.source)}};
  if (c.policy.source == PolicySource::regnn) j["policy"]["checkpoint"] = c.policy.checkpoint;
  if (c.policy.source == PolicySource::explicit_nm) {
    j["policy"]["n"] = c.policy.n;
    j["policy"]["m"] = c.policy.m;
  }
  const McOptions& m = c.mc;
  j["mc"] = {{"realizations", m.realizations},
             {"frames", m.frames},
             {"seed", m.seed},
             {"activity", name_of(kActivity, m.activity)},
             {"fading", name_of(kFading, m.fading)},
             {"refresh_per_slot", m.refresh_per_slot},
             {"cutoff_m", m.cutoff_m},
             {"nearest_only", m.nearest_only},
             {"criterion", name_of(kCriteria, m.criterion)}};
  const TrainConfig& tr = c.train.config;
  const RegnnHyper& h = c.train.hyper;
  j["train"] = {{"batch", tr.batch},
                {"lr_n", tr.lr_n},
                {"lr_m", tr.lr_m},
                {"iterations", tr.iterations},
                {"probe_frames", tr.probe_frames},
                {"probe_cutoff_m", tr.probe_cutoff_m},
                {"baseline", tr.baseline},
                {"baseline_decay", tr.baseline_decay},
                {"optimizer", name_of(kOptimizers, tr.optimizer)},
                {"seed", tr.seed},
                {"checkpoint_interval", c.train.checkpoint_interval},
                {"resume", c.train.resume},
                {"regnn",
                 {{"layers", h.layers},
                  {"taps", h.taps},
                  {"features", h.features},
                  {"beta_min", h.beta_min},
                  {"init_std", h.init_std},
                  {"init_mean", name_of(kInitMeans, h.init_mean)},
                  {"arrival_scale", h.arrival_scale}}}};
  json compare = json::array();
  for (PolicySource p : c.eval.compare) compare.push_back(to_string(p));
  j["eval"] = {{"compare", compare}, {"cdf", c.eval.cdf}};
  j["analyze"] = {{"sweep", c.analyze.sweep},
                  {"values", c.analyze.values},
                  {"n0", c.analyze.n0},
                  {"m0", c.analyze.m0}};
  return j.dump();
}

std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_json(c))));
  return buf;
}

}  // namespace urllc::cli
