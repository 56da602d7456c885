#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("urllc_cli_" + std::to_string(std::rand()) + "_" +
                                       std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
  std::string read(const fs::path& p) const {
    std::ifstream in(p.is_absolute() ? p : dir / p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  // Runs the CLI with stdout and stderr captured in log.txt; returns the exit code.
  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + URLLC_CLI_PATH + "\" " + args + " > \"" +
                            (dir / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string log() const { return read(dir / "log.txt"); }
  std::string out(const std::string& sub) const { return (dir / sub).string(); }
};

std::string data_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

int count_data_rows(const std::string& csv) {
  int n = -1;  // column header
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++n;
  return n;
}

}  // namespace

TEST_CASE("gen is deterministic and sized by the region count") {
  Sandbox sb;
  const auto cfg = sb.write("hex.json", R"({"topology": {"kind": "hexagonal", "regions": 4}})");
  REQUIRE(sb.run("gen --config " + cfg.string() + " --seed 5 --out " + sb.out("a")) == 0);
  REQUIRE(sb.run("gen --config " + cfg.string() + " --seed 5 --out " + sb.out("b")) == 0);
  const std::string a = sb.read("a/instance.json");
  CHECK(a == sb.read("b/instance.json"));
  const json j = json::parse(a);
  CHECK(j["k_links"] == 100);
  CHECK(j["seed"] == 5);
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  REQUIRE(sb.run("gen --config " + cfg.string() + " --seed 6 --out " + sb.out("c")) == 0);
  CHECK(sb.read("c/instance.json") != a);
}

TEST_CASE("config errors name the field") {
  Sandbox sb;
  auto cfg = sb.write("bad.json", R"({"topology": {"kind": "hexagonal", "reuse": 4}})");
  CHECK(sb.run("gen --config " + cfg.string() + " --out " + sb.out("o")) == 2);
  CHECK(sb.log().find("topology.reuse") != std::string::npos);
  cfg = sb.write("typo.json", R"({"mc": {"frame": 10}})");
  CHECK(sb.run("eval --config " + cfg.string() + " --out " + sb.out("o")) == 2);
  CHECK(sb.log().find("mc.frame") != std::string::npos);
  cfg = sb.write("zero.json", R"({"mc": {"realizations": 0}})");
  CHECK(sb.run("eval --config " + cfg.string() + " --out " + sb.out("o")) == 2);
  CHECK(sb.log().find("mc.realizations") != std::string::npos);
  cfg = sb.write("type.json", R"({"seed": "x"})");
  CHECK(sb.run("es --config " + cfg.string()) == 2);
  CHECK(sb.run("nonsense") == 2);
  CHECK(sb.run("--help") == 0);
}

TEST_CASE("exit codes for infeasible models and missing files") {
  Sandbox sb;
  const auto cfg = sb.write("tight.json", R"({"qos": {"eps_max": 1e-300}})");
  CHECK(sb.run("es --config " + cfg.string() + " --out " + sb.out("o")) == 3);
  CHECK(sb.run("es --config " + (sb.dir / "missing.json").string()) == 4);
  const auto file = sb.write("file.json", R"({"topology": {"kind": "file", "path": "/nonexistent/x.json"},
                                              "policy": {"source": "no-rep"}})");
  CHECK(sb.run("eval --config " + file.string() + " --out " + sb.out("o")) == 4);
}

TEST_CASE("es writes the surface and optimum reproducibly") {
  Sandbox sb;
  REQUIRE(sb.run("es --out " + sb.out("a")) == 0);
  REQUIRE(sb.run("es --out " + sb.out("b")) == 0);
  const std::string csv = sb.read("a/es_surface.csv");
  CHECK(csv == sb.read("b/es_surface.csv"));
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find("# seed=1\n") != std::string::npos);
  const json opt = json::parse(sb.read("a/es_optimum.json"));
  CHECK(std::abs(opt["n0"].get<int>() - 7) <= 1);
  CHECK(std::abs(opt["m0"].get<int>() - 4) <= 1);
  // Six queue-feasible slot counts at the default load.
  CHECK(count_data_rows(csv) == 21);
}

TEST_CASE("eval compares policies on shared instances") {
  Sandbox sb;
  const auto cfg = sb.write("eval.json", R"({
    "topology": {"kind": "hexagonal"},
    "policy": {"source": "k-rep"},
    "mc": {"realizations": 4, "frames": 100},
    "eval": {"compare": ["no-rep"], "cdf": true}})");
  REQUIRE(sb.run("eval --config " + cfg.string() + " --workers 2 --out " + sb.out("a")) == 0);
  REQUIRE(sb.run("eval --config " + cfg.string() + " --workers 1 --out " + sb.out("b")) == 0);
  const std::string summary = sb.read("a/eval_summary.csv");
  CHECK(summary == sb.read("b/eval_summary.csv"));
  CHECK(summary.find("policy,p_vio,std_error,trials,gain\nk-rep,") != std::string::npos);
  CHECK(summary.find("\nno-rep,") != std::string::npos);
  CHECK(count_data_rows(sb.read("a/eval_realizations.csv")) == 4);
  CHECK(count_data_rows(sb.read("a/eval_cdf.csv")) == 100);
}

TEST_CASE("eval on a saved instance file") {
  Sandbox sb;
  REQUIRE(sb.run("gen --out " + sb.out("g")) == 0);
  const auto cfg = sb.write("f.json", R"({"topology": {"kind": "file", "path": ")" +
                                          sb.out("g/instance.json") + R"("},
    "policy": {"source": "explicit", "n": 6, "m": 3}, "mc": {"realizations": 2, "frames": 50}})");
  REQUIRE(sb.run("eval --config " + cfg.string() + " --out " + sb.out("e")) == 0);
  CHECK(count_data_rows(sb.read("e/eval_summary.csv")) == 1);
}

TEST_CASE("train writes a checkpoint and resumes exactly") {
  Sandbox sb;
  const std::string common = R"("topology": {"kind": "hexagonal"},
    "train": {"batch": 2, "probe_frames": 20, "checkpoint_interval": 1,
              "regnn": {"layers": 3, "taps": 2})";
  const auto full = sb.write("full.json", "{" + common + R"(, "iterations": 3}})");
  const auto half = sb.write("half.json", "{" + common + R"(, "iterations": 2}})");
  REQUIRE(sb.run("train --config " + full.string() + " --out " + sb.out("full")) == 0);
  CHECK(count_data_rows(sb.read("full/loss_trace.csv")) == 3);
  REQUIRE(sb.run("train --config " + half.string() + " --out " + sb.out("half")) == 0);
  const auto resume = sb.write("resume.json", "{" + common + R"(, "iterations": 3, "resume": ")" +
                                                  sb.out("half/checkpoint.json") + R"("}})");
  REQUIRE(sb.run("train --config " + resume.string() + " --out " + sb.out("resumed")) == 0);
  CHECK(data_lines(sb.read("resumed/loss_trace.csv")) == data_lines(sb.read("full/loss_trace.csv")));
  json a = json::parse(sb.read("full/checkpoint.json"));
  json b = json::parse(sb.read("resumed/checkpoint.json"));
  CHECK(a["networks"] == b["networks"]);
  CHECK(a["meta"]["iteration"] == 3);

  // The checkpoint drives eval.
  const auto ev = sb.write("ev.json", R"({"topology": {"kind": "hexagonal"},
    "policy": {"source": "regnn", "checkpoint": ")" + sb.out("full/checkpoint.json") + R"("},
    "mc": {"realizations": 2, "frames": 50}})");
  CHECK(sb.run("eval --config " + ev.string() + " --out " + sb.out("ev")) == 0);
}

TEST_CASE("analyze sweeps the approximations") {
  Sandbox sb;
  const auto cfg = sb.write("a.json", R"({"analyze": {"sweep": "density", "values": [14, 28, 56]}})");
  REQUIRE(sb.run("analyze --config " + cfg.string() + " --out " + sb.out("a")) == 0);
  const std::string csv = sb.read("a/analyze_sweep.csv");
  CHECK(count_data_rows(csv) == 3);
  CHECK(csv.find("density,n0,m0,p_a1,p_a2,objective\n") != std::string::npos);
  const auto g = sb.write("g.json", R"({"analyze": {"sweep": "gamma", "n0": 7, "m0": 4}})");
  REQUIRE(sb.run("analyze --config " + g.string() + " --out " + sb.out("g")) == 0);
  CHECK(count_data_rows(sb.read("g/analyze_sweep.csv")) == 20);
}
