#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

// End-to-end checks of the command-line interface: exit codes, output
// schemas, and determinism.

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cli() { return ENTCERT_CLI_PATH; }

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("entcert_cli_out_" +
                                                    std::to_string(counter++) + ".txt");
  const std::string cmd = cli() + " " + args + " > " + out.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WEXITSTATUS(rc);
  std::ifstream in(out);
  res.stdout_text.assign(std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
  fs::remove(out);
  return res;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

}  // namespace

TEST_CASE("detect exit codes", "[cli]") {
  SECTION("certified entangled state exits 0") {
    auto r = run("detect --state ghz:3 --noise white:0.5 --k 3 --max-iter 20000 --restarts 4");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("heuristic-entangled") != std::string::npos);
  }
  SECTION("fully mixed input certifies separability") {
    auto r = run("detect --state bell --noise white:1.0 --max-iter 3000 --restarts 3");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("separability-certified") != std::string::npos);
  }
  SECTION("boundary state with a tiny budget is inconclusive, exit 2") {
    auto r = run("detect --state bell --noise white:0.6664 --max-iter 2000 --restarts 3");
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.stdout_text.find("inconclusive") != std::string::npos);
  }
  SECTION("malformed specs exit 1") {
    REQUIRE(run("detect --state nosuch:3").exit_code == 1);
    REQUIRE(run("detect --state bell --noise white:2.0").exit_code == 1);
    REQUIRE(run("detect").exit_code != 0);
  }
}

TEST_CASE("detect outputs", "[cli]") {
  SECTION("result json carries numbers and a manifest") {
    const auto out = temp_file("detect_res.json");
    auto r = run("detect --state ghz:3 --noise white:0.5 --k 3 --max-iter 20000 "
                 "--restarts 4 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    json j = load_json(out);
    REQUIRE(j.at("verdict") == "heuristic-entangled");
    REQUIRE(j.at("numbers").contains("f"));
    REQUIRE(j.at("numbers").contains("r"));
    REQUIRE(j.at("manifest").at("command") == "detect");
    REQUIRE(j.at("manifest").contains("seed"));
    fs::remove(out);
  }
  SECTION("iteration trace is valid json-lines") {
    const auto trace = temp_file("detect_trace.jsonl");
    auto r = run("detect --state bell --max-iter 2000 --restarts 3 --trace " + trace.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(trace);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      json rec = json::parse(line);
      REQUIRE(rec.contains("iter"));
      REQUIRE(rec.contains("f"));
      REQUIRE(rec.contains("g"));
      REQUIRE(rec.contains("r"));
      REQUIRE(rec.contains("step_type"));
      REQUIRE(rec.contains("active_size"));
      REQUIRE(rec.contains("lmo_calls"));
      ++lines;
    }
    REQUIRE(lines >= 1);
    fs::remove(trace);
  }
  SECTION("witness export in rigorous mode") {
    const auto wit = temp_file("witness.json");
    auto r = run("detect --state bell --rigorous --net-n 10 --max-iter 3000 --restarts 3 "
                 "--witness-out " + wit.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("witness-certified") != std::string::npos);
    json j = load_json(wit);
    REQUIRE(j.contains("matrix_re"));
    REQUIRE(j.contains("matrix_im"));
    REQUIRE(j.contains("beta"));
    REQUIRE(j.contains("eps_hat"));
    REQUIRE(j.at("value_on_target").get<double>() < 0.0);
    fs::remove(wit);
  }
  SECTION("custom states load from json files") {
    const auto state = temp_file("mixed_state.json");
    {
      std::ofstream out(state);
      json j;
      j["local_dims"] = {2, 2};
      std::vector<std::vector<double>> re(4, std::vector<double>(4, 0.0));
      std::vector<std::vector<double>> im(4, std::vector<double>(4, 0.0));
      for (int i = 0; i < 4; ++i) re[i][i] = 0.25;
      j["matrix_re"] = re;
      j["matrix_im"] = im;
      out << j.dump();
    }
    auto r = run("detect --state file:" + state.string() + " --max-iter 3000 --restarts 3");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("separability-certified") != std::string::npos);
    fs::remove(state);
  }
}

TEST_CASE("determinism of outputs", "[cli]") {
  const auto out1 = temp_file("det_a.json");
  const auto out2 = temp_file("det_b.json");
  const std::string cmd = "detect --state ghz:3 --noise white:0.6 --k 3 --max-iter 10000 "
                          "--restarts 4 --seed 7 --out ";
  REQUIRE(run(cmd + out1.string()).exit_code == 0);
  REQUIRE(run(cmd + out2.string()).exit_code == 0);
  json a = load_json(out1), b = load_json(out2);
  a.erase("manifest");
  b.erase("manifest");
  REQUIRE(a.dump() == b.dump());  // byte-identical modulo the manifest
  fs::remove(out1);
  fs::remove(out2);
}

TEST_CASE("robustness subcommand", "[cli]") {
  const auto out = temp_file("sweep.json");
  const auto csv = temp_file("sweep.csv");
  auto r = run("robustness --state ghz:3 --channel white --k 3 --target-gap 0.05 "
               "--max-iter 40000 --restarts 3 --out " + out.string() + " --csv " +
               csv.string());
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.stdout_text.find("p_ent=") != std::string::npos);
  json j = load_json(out);
  const auto& row = j.at("results").at(0);
  const double p_ent = row.at("p_ent").get<double>();
  const double p_sep = row.at("p_sep").get<double>();
  REQUIRE(p_ent < p_sep);
  REQUIRE(p_ent <= 0.8);
  REQUIRE(p_sep >= 0.8);
  REQUIRE(p_sep - p_ent <= 0.05 + 1e-12);
  std::ifstream cin(csv);
  std::string header;
  std::getline(cin, header);
  REQUIRE(header ==
          "channel,a,p_ent,p_sep,gap,fidelity_ent,fidelity_sep,probes,wall_time");
  fs::remove(out);
  fs::remove(csv);
}

TEST_CASE("net subcommand", "[cli]") {
  SECTION("two-qubit net stats match the construction") {
    const auto dir = fs::temp_directory_path() / "entcert_nets";
    auto r = run("net --dims 2,2 --n 1 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.stdout_text.find("product vertices: 64") != std::string::npos);
    REQUIRE(r.stdout_text.find("eta: 0.25") != std::string::npos);
    json j = load_json(dir / "net_d4_n1.json");
    REQUIRE(j.at("dim_real") == 4);
    REQUIRE(j.at("vertices").size() == 8);
    fs::remove_all(dir);
  }
  SECTION("qutrit pair eta") {
    const auto dir = fs::temp_directory_path() / "entcert_nets2";
    auto r = run("net --dims 3,3 --n 2 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    // eta = 4/14
    REQUIRE(r.stdout_text.find("eta: 0.285714") != std::string::npos);
    fs::remove_all(dir);
  }
  SECTION("cardinality cap refusal reports the predicted count") {
    auto r = run("net --dims 2,2,2,2,2 --n 4");
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.stdout_text.find("exceeds cap") != std::string::npos);
  }
}
