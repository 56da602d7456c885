#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "config.hpp"
#include "urllc/baselines.hpp"
#include "urllc/queueing.hpp"
#include "urllc/regnn.hpp"
#include "urllc/stochgeom.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace urllc;
using namespace urllc::cli;

namespace {

struct Run {
  ExperimentConfig config;
  std::string hash;
  fs::path out;

  std::string header() const {
    return "# config_hash=" + hash + "\n# seed=" + std::to_string(config.seed) + "\n";
  }
  void tag(json& j) const {
    j["config_hash"] = hash;
    j["seed"] = config.seed;
  }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

NetworkInstance load_instance(const std::string& path) { return instance_from_json(read_text(path)); }

InstanceGenerator make_generator(const ExperimentConfig& c) {
  const TopologyConfig& t = c.topology;
  switch (t.kind) {
    case TopologyKind::bipolar:
      return [t](Rng& r) { return gen_bipolar(t.symmetric, t.area_km2, r, t.guard_m); };
    case TopologyKind::random_area:
      return [t](Rng& r) { return gen_random_area(t.random_area, r); };
    case TopologyKind::hexagonal:
      return [t](Rng& r) { return gen_hexagonal(t.hex, r); };
    case TopologyKind::file: {
      const NetworkInstance inst = load_instance(t.path);
      return [inst](Rng&) { return inst; };
    }
  }
  throw ConfigError("config: topology.kind is not supported");
}

PolicyMaker make_policy(PolicySource source, const ExperimentConfig& c) {
  const QosSpec spec = c.qos;
  switch (source) {
    case PolicySource::es: {
      const EsResult es = exhaustive_search(c.topology.symmetric, spec);
      return [es](const NetworkInstance& i) {
        return RepetitionPolicy::uniform(i.k_links(), es.n0, es.m0);
      };
    }
    case PolicySource::regnn: {
      const RegnnParams params = load_checkpoint(c.policy.checkpoint);
      return [params, spec](const NetworkInstance& i) { return regnn_policy(i, params, spec); };
    }
    case PolicySource::no_rep:
      return [](const NetworkInstance& i) { return no_repetition(i); };
    case PolicySource::k_rep:
      return [spec](const NetworkInstance& i) { return k_repetition(i, spec); };
    case PolicySource::explicit_nm: {
      const int n = c.policy.n, m = c.policy.m;
      return [n, m](const NetworkInstance& i) { return RepetitionPolicy::uniform(i.k_links(), n, m); };
    }
  }
  throw ConfigError("config: policy.source is not supported");
}

QosEstimate evaluate(const Run& run, const PolicyMaker& policy) {
  const ExperimentConfig& c = run.config;
  if (c.topology.kind == TopologyKind::file) {
    const NetworkInstance inst = load_instance(c.topology.path);
    return estimate_qos_violation(inst, policy(inst), c.qos, c.mc);
  }
  return estimate_over_instances(make_generator(c), policy, c.qos, c.mc);
}

void cmd_gen(const Run& run) {
  Rng rng = make_stream(run.config.seed, "instance", 0);
  const NetworkInstance inst = make_generator(run.config)(rng);
  json j = json::parse(instance_to_json(inst));
  run.tag(j);
  write_text(run.out / "instance.json", j.dump(1) + "\n");
  std::cout << "instance: " << inst.k_links() << " links\n";
}

void cmd_es(const Run& run) {
  const ExperimentConfig& c = run.config;
  const EsResult es = exhaustive_search(c.topology.symmetric, c.qos);
  write_text(run.out / "es_surface.csv", run.header() + surface_to_csv(es));
  json j = {{"n0", es.n0}, {"m0", es.m0}, {"objective", es.objective}};
  for (const EsPoint& p : es.surface)
    if (p.n0 == es.n0 && p.m0 == es.m0) {
      j["p_a1"] = p.p_a1;
      j["p_a2"] = p.p_a2;
      j["eps_q"] = p.eps_q;
      j["gamma_th"] = p.gamma_th;
    }
  run.tag(j);
  write_text(run.out / "es_optimum.json", j.dump(1) + "\n");
  std::cout << "es optimum: N0=" << es.n0 << " M0=" << es.m0 << " objective=" << es.objective << "\n";
}

void cmd_eval(const Run& run) {
  const ExperimentConfig& c = run.config;
  const QosEstimate main = evaluate(run, make_policy(c.policy.source, c));
  std::ostringstream summary;
  summary << run.header() << "policy,p_vio,std_error,trials,gain\n";
  summary << to_string(c.policy.source) << "," << fmt(main.p_vio) << "," << fmt(main.std_error) << ","
          << main.trials << ",0\n";
  std::cout << to_string(c.policy.source) << ": p_vio=" << main.p_vio << " se=" << main.std_error << "\n";
  for (PolicySource other : c.eval.compare) {
    const QosEstimate e = evaluate(run, make_policy(other, c));
    // Relative improvement of the evaluated policy over this baseline.
    const double gain = e.p_vio > 0.0 ? 1.0 - main.p_vio / e.p_vio : 0.0;
    summary << to_string(other) << "," << fmt(e.p_vio) << "," << fmt(e.std_error) << "," << e.trials
            << "," << fmt(gain) << "\n";
    std::cout << to_string(other) << ": p_vio=" << e.p_vio << " gain=" << gain << "\n";
  }
  write_text(run.out / "eval_summary.csv", summary.str());

  std::ostringstream per;
  per << run.header() << "realization,p_vio\n";
  if (main.realization_p_vio.empty()) per << "0," << fmt(main.p_vio) << "\n";
  for (std::size_t r = 0; r < main.realization_p_vio.size(); ++r)
    per << r << "," << fmt(main.realization_p_vio[r]) << "\n";
  write_text(run.out / "eval_realizations.csv", per.str());

  if (c.eval.cdf) {
    std::vector<double> pk(main.p_k.data(), main.p_k.data() + main.p_k.size());
    std::sort(pk.begin(), pk.end());
    std::ostringstream cdf;
    cdf << run.header() << "p_k,cdf\n";
    for (std::size_t i = 0; i < pk.size(); ++i)
      cdf << fmt(pk[i]) << "," << fmt(double(i + 1) / pk.size()) << "\n";
    write_text(run.out / "eval_cdf.csv", cdf.str());
  }
}

void cmd_train(const Run& run) {
  const ExperimentConfig& c = run.config;
  TrainState state;
  if (!c.train.resume.empty()) {
    state = checkpoint_from_json(read_text(c.train.resume));
  } else {
    Rng rng = make_stream(c.train.config.seed, "regnn-init");
    state.params = init_params(c.train.hyper, rng);
  }
  TrainConfig cfg = c.train.config;
  cfg.iterations = std::max(0, cfg.iterations - state.iteration);

  auto persist = [&](const TrainState& s) {
    json j = json::parse(checkpoint_to_json(s, cfg.seed));
    j["meta"]["config_hash"] = run.hash;
    write_text(run.out / "checkpoint.json", j.dump(1) + "\n");
    std::ostringstream trace;
    trace << run.header() << "iteration,loss\n";
    for (std::size_t i = 0; i < s.loss_trace.size(); ++i)
      trace << i + 1 << "," << fmt(s.loss_trace[i]) << "\n";
    write_text(run.out / "loss_trace.csv", trace.str());
  };
  train(state, cfg, make_generator(c), c.qos, [&](const TrainState& s) {
    if (s.iteration % c.train.checkpoint_interval == 0) {
      persist(s);
      std::cout << "iteration " << s.iteration << " loss " << s.loss_trace.back() << "\n";
    }
  });
  persist(state);
  std::cout << "trained to iteration " << state.iteration << "\n";
}

void cmd_analyze(const Run& run) {
  const ExperimentConfig& c = run.config;
  const AnalyzeBlock& a = c.analyze;
  std::vector<double> xs = a.values;
  if (xs.empty()) {
    for (int i = 1; i <= 20; ++i) {
      if (a.sweep == "density") xs.push_back(5.0 * i);
      else if (a.sweep == "lambda0") xs.push_back(0.005 * i);
      else xs.push_back(0.25 * i);
    }
  }
  std::ostringstream csv;
  csv << run.header() << a.sweep << ",n0,m0,p_a1,p_a2,objective\n";
  for (double x : xs) {
    SymmetricScenario sc = c.topology.symmetric;
    if (a.sweep == "density") sc.density_per_km2 = x;
    if (a.sweep == "lambda0") sc.lambda0 = x;
    int n0 = a.n0, m0 = a.m0;
    if (n0 == 0) {
      const EsResult es = exhaustive_search(sc, c.qos);
      n0 = es.n0;
      m0 = es.m0;
    }
    double gamma = x;
    if (a.sweep != "gamma") {
      const double eps_q = queue_violation_prob(sc.lambda0, n0, c.qos);
      if (eps_q >= c.qos.eps_max)
        throw InfeasibleError("analyze: queue target unreachable at N0=" + std::to_string(n0));
      gamma = sir_threshold(c.qos.eps_max - eps_q, c.qos);
    }
    const ApproxInputs in = make_approx_inputs(sc, n0, m0, gamma);
    const double p1 = approx_p_a1(in), p2 = approx_p_a2(in);
    csv << fmt(x) << "," << n0 << "," << m0 << "," << fmt(p1) << "," << fmt(p2) << ","
        << fmt(std::max(p1, p2)) << "\n";
  }
  write_text(run.out / "analyze_sweep.csv", csv.str());
  std::cout << "analyze: " << xs.size() << " points\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random repetition for grant-free URLLC: simulation, search and training"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned workers = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Global seed (overrides the config)");
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out, "Output directory");
  app.add_option("--workers", workers, "Worker threads (0 = available parallelism)");
  std::string chosen;
  for (const char* name : {"gen", "es", "eval", "train", "analyze"}) {
    static const std::map<std::string, std::string> help = {
        {"gen", "Generate a network instance"},
        {"es", "Exhaustive search over (N0, M0)"},
        {"eval", "Monte Carlo QoS evaluation of a policy"},
        {"train", "Train the graph-filter repetition policy"},
        {"analyze", "Sweep the analytical approximations"}};
    app.add_subcommand(name, help.at(name))->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Run run;
    run.config = config_path.empty() ? default_config() : parse_config(read_text(config_path));
    if (seed_opt->count() > 0) {
      run.config.seed = seed;
      run.config.mc.seed = seed;
      run.config.train.config.seed = seed;
    }
    set_worker_count(workers);
    run.hash = config_hash(run.config);
    run.out = out;
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec) throw IoError("cannot create output directory '" + out + "': " + ec.message());

    if (chosen == "gen") cmd_gen(run);
    else if (chosen == "es") cmd_es(run);
    else if (chosen == "eval") cmd_eval(run);
    else if (chosen == "train") cmd_train(run);
    else if (chosen == "analyze") cmd_analyze(run);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
