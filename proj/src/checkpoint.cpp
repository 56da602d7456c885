#include <fstream>
#include <json.hpp>
#include <sstream>

#include "urllc/regnn.hpp"

namespace urllc {

using json = nlohmann::json;

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw ConfigError("checkpoint: unknown activation '" + s + "'");
}

json params_json(const RegnnParams& p) {
  json nets = json::array();
  for (const auto& net : p.networks) {
    json layers = json::array();
    for (const auto& layer : net.layers) {
      json taps = json::array();
      for (const auto& t : layer.taps) {
        json rows = json::array();
        for (Eigen::Index f = 0; f < t.rows(); ++f) {
          json row = json::array();
          for (Eigen::Index g = 0; g < t.cols(); ++g) row.push_back(t(f, g));
          rows.push_back(row);
        }
        taps.push_back(rows);
      }
      layers.push_back({{"taps", taps}, {"activation", activation_name(layer.activation)}});
    }
    nets.push_back({{"layers", layers}});
  }
  const RegnnHyper& h = p.hyper;
  json hyper = {{"layers", h.layers},
                {"taps", h.taps},
                {"features", h.features},
                {"beta_min", h.beta_min},
                {"init_std", h.init_std},
                {"init_mean", h.init_mean == InitMean::identity ? "identity" : "zero"},
                {"arrival_scale", h.arrival_scale}};
  return {{"format", "urllc-regnn"}, {"version", 1}, {"networks", nets}, {"hyper", hyper}};
}

RegnnParams params_from(const json& j) {
  RegnnParams p;
  const json& h = j.at("hyper");
  p.hyper.layers = h.at("layers").get<int>();
  p.hyper.taps = h.at("taps").get<int>();
  p.hyper.features = h.at("features").get<int>();
  p.hyper.beta_min = h.at("beta_min").get<double>();
  p.hyper.init_std = h.value("init_std", 0.1);
  p.hyper.init_mean = h.value("init_mean", std::string("identity")) == "zero" ? InitMean::zero
                                                                                : InitMean::identity;
  p.hyper.arrival_scale = h.value("arrival_scale", 10.0);
  const json& nets = j.at("networks");
  if (!nets.is_array() || nets.size() != 2) throw ConfigError("checkpoint: expected 2 networks");
  for (int n = 0; n < 2; ++n) {
    const json& layers = nets[n].at("layers");
    if (!layers.is_array() || static_cast<int>(layers.size()) != p.hyper.layers)
      throw ConfigError("checkpoint: network " + std::to_string(n) + " expected " +
                        std::to_string(p.hyper.layers) + " layers");
    auto& net = p.networks[n];
    net.layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const int fin = l == 0 ? 1 : p.hyper.features;
      const int fout = l + 1 == layers.size() ? 2 : p.hyper.features;
      const json& taps = layers[l].at("taps");
      const std::string where =
          "checkpoint: network " + std::to_string(n) + " layer " + std::to_string(l);
      if (!taps.is_array() || static_cast<int>(taps.size()) != p.hyper.taps)
        throw ConfigError(where + ": expected " + std::to_string(p.hyper.taps) + " taps");
      net.layers[l].activation = activation_from(layers[l].at("activation").get<std::string>());
      for (std::size_t i = 0; i < taps.size(); ++i) {
        const json& rows = taps[i];
        const std::string tap_where = where + " tap " + std::to_string(i);
        if (!rows.is_array() || static_cast<int>(rows.size()) != fin)
          throw ConfigError(tap_where + ": expected " + std::to_string(fin) + " input rows");
        Eigen::MatrixXd t(fin, fout);
        for (int f = 0; f < fin; ++f) {
          if (!rows[f].is_array() || static_cast<int>(rows[f].size()) != fout)
            throw ConfigError(tap_where + ": expected " + std::to_string(fout) + " outputs per row");
          for (int g = 0; g < fout; ++g) {
            if (!rows[f][g].is_number()) throw ConfigError(tap_where + ": non-numeric coefficient");
            t(f, g) = rows[f][g].get<double>();
          }
        }
        if (!t.allFinite()) throw ConfigError(tap_where + ": non-finite coefficient");
        net.layers[l].taps.push_back(t);
      }
    }
  }
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::string checkpoint_to_json(const RegnnParams& params) { return params_json(params).dump(1) + "\n"; }

std::string checkpoint_to_json(const TrainState& s, std::uint64_t seed) {
  json j = params_json(s.params);
  json meta = {{"seed", seed},
               {"iteration", s.iteration},
               {"baseline", s.baseline},
               {"baseline_ready", s.baseline_ready},
               {"loss_trace", s.loss_trace}};
  if (s.adam_m.size()) {
    meta["adam_m"] = std::vector<double>(s.adam_m.data(), s.adam_m.data() + s.adam_m.size());
    meta["adam_v"] = std::vector<double>(s.adam_v.data(), s.adam_v.data() + s.adam_v.size());
  }
  j["meta"] = meta;
  return j.dump(1) + "\n";
}

TrainState checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: parse error: ") + e.what());
  }
  try {
    TrainState s;
    s.params = params_from(j);
    if (j.contains("meta")) {
      const json& m = j["meta"];
      s.iteration = m.value("iteration", 0);
      s.baseline = m.value("baseline", 0.0);
      s.baseline_ready = m.value("baseline_ready", false);
      s.loss_trace = m.value("loss_trace", std::vector<double>{});
      if (m.contains("adam_m")) {
        const auto am = m["adam_m"].get<std::vector<double>>();
        const auto av = m["adam_v"].get<std::vector<double>>();
        s.adam_m = Eigen::Map<const Eigen::VectorXd>(am.data(), am.size());
        s.adam_v = Eigen::Map<const Eigen::VectorXd>(av.data(), av.size());
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const RegnnParams& params, const std::string& path) {
  write_file(path, checkpoint_to_json(params));
}

RegnnParams load_checkpoint(const std::string& path) {
  return checkpoint_from_json(read_file(path)).params;
}

}  // namespace urllc
