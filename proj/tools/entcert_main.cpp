// entcert: entanglement certification from the command line.
//
// Subcommands: detect (single-state certification), robustness (certified
// noise thresholds), net (sphere-net construction and caching), bench
// (regenerates the benchmark artifacts).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "entcert/experiments.hpp"
#include "entcert/io.hpp"

using namespace entcert;
using nlohmann::json;

namespace {

struct ParsedState {
  DensityMatrix rho;
  std::optional<Vec> pure;
  std::string name;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Grammar: name[:param[,param]] -- bell | ghz:N | w:N | dicke:N[,M] |
// horodecki:A | file:PATH
ParsedState parse_state(const std::string& spec) {
  auto head = spec.substr(0, spec.find(':'));
  std::string args = spec.find(':') == std::string::npos ? "" : spec.substr(spec.find(':') + 1);
  ParsedState out;
  out.name = spec;
  if (head == "bell") {
    out.rho = make_bell();
    out.pure = bell_vector();
  } else if (head == "ghz") {
    const int n = std::stoi(args);
    out.rho = make_ghz(n);
    out.pure = ghz_vector(n);
  } else if (head == "w") {
    const int n = std::stoi(args);
    out.rho = make_w(n);
    out.pure = w_vector(n);
  } else if (head == "dicke") {
    auto parts = split(args, ',');
    const int n = std::stoi(parts.at(0));
    const int m = parts.size() > 1 ? std::stoi(parts.at(1)) : n / 2;
    out.rho = make_dicke(n, m);
    out.pure = dicke_vector(n, m);
  } else if (head == "horodecki") {
    out.rho = make_horodecki(std::stod(args));
  } else if (head == "file") {
    out.rho = io::load_state(args);
  } else {
    throw std::domain_error("unknown state spec: " + spec +
                            " (expected bell|ghz:n|w:n|dicke:n[,m]|horodecki:a|file:path)");
  }
  return out;
}

std::optional<NoiseChannel> channel_by_name(const std::string& name, int party) {
  if (name == "white") return std::nullopt;  // handled as the mixing path
  if (name == "gd") return NoiseChannel::global_depolarizing({0, 1});
  if (name == "bf") return NoiseChannel::bit_flip(party);
  if (name == "pf") return NoiseChannel::phase_flip(party);
  if (name == "ad") return NoiseChannel::amplitude_damping(party);
  if (name == "pd") return NoiseChannel::phase_damping(party);
  throw std::domain_error("unknown channel: " + name + " (expected white|gd|bf|pf|ad|pd)");
}

// Grammar: channel:strength, e.g. white:0.5 or ad:0.99
DensityMatrix apply_noise_spec(const DensityMatrix& rho, const std::string& spec) {
  auto parts = split(spec, ':');
  if (parts.size() != 2) throw std::domain_error("noise spec must be channel:strength");
  const double strength = std::stod(parts[1]);
  auto ch = channel_by_name(parts[0], 0);
  if (!ch) return mix_white_noise(rho, strength);
  return apply_channel(rho, *ch, strength);
}

struct CommonFlags {
  uint64_t seed = defaults::seed;
  int threads = 0;
  int64_t max_iter = defaults::max_iter;
  double r0 = defaults::r_threshold;
  int restarts = defaults::lmo_restarts;
  std::string config_file;
};

void apply_config_file(const std::string& path, CommonFlags& flags) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;
  if (j.contains("seed")) flags.seed = j["seed"].get<uint64_t>();
  if (j.contains("max_iter")) flags.max_iter = j["max_iter"].get<int64_t>();
  if (j.contains("r0")) flags.r0 = j["r0"].get<double>();
  if (j.contains("restarts")) flags.restarts = j["restarts"].get<int>();
  if (j.contains("threads")) flags.threads = j["threads"].get<int>();
}

json manifest_for(const std::string& command, const json& cfg, uint64_t seed,
                  const std::chrono::steady_clock::time_point& t0) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return io::make_manifest(command, cfg, seed, wall);
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << std::endl;
  else
    io::write_json(out_path, j);
}

int cmd_detect(const std::string& state_spec, const std::string& noise_spec, int k,
               const std::string& engine, bool rigorous, int net_n, CommonFlags flags,
               const std::string& out_path, const std::string& trace_path,
               const std::string& witness_path) {
  const auto t0 = std::chrono::steady_clock::now();
  ParsedState st = parse_state(state_spec);
  DensityMatrix rho = noise_spec.empty() ? st.rho : apply_noise_spec(st.rho, noise_spec);
  if (k <= 0) k = rho.num_parties();
  if (k < 1 || k > rho.num_parties())
    throw std::domain_error("k must lie between 1 and the party count");

  PipelineConfig pcfg;
  pcfg.solver.max_iter = flags.max_iter;
  pcfg.solver.r_threshold = flags.r0;
  pcfg.solver.lmo.restarts = flags.restarts;
  pcfg.solver.lmo.rng_seed = flags.seed;
  pcfg.solver.engine = engine == "vanilla" ? SolverEngine::Vanilla : SolverEngine::BPCG;
  pcfg.solver.record_trace = !trace_path.empty();
  pcfg.rigorous = rigorous;
  pcfg.witness_net_subdiv = net_n;
  if (rigorous) pcfg.solver.r_threshold = std::min(flags.r0, 1e-9);

  SolverOutcome out;
  CertResult res = run_certification(rho, SepTarget::k_separable(k), pcfg, &out);

  if (!trace_path.empty()) {
    std::ofstream trace_file(trace_path);
    if (!trace_file) throw std::runtime_error("cannot write trace file: " + trace_path);
    for (const auto& rec : out.trace)
      trace_file << io::iter_record_to_json(rec).dump() << '\n';
  }

  json cfg_snapshot = {{"state", state_spec}, {"noise", noise_spec},
                       {"k", k},              {"engine", engine},
                       {"rigorous", rigorous}, {"net_n", net_n},
                       {"max_iter", flags.max_iter}, {"r0", flags.r0},
                       {"restarts", flags.restarts}};
  json j = io::cert_result_to_json(res);
  j["manifest"] = manifest_for("detect", cfg_snapshot, flags.seed, t0);
  emit(j, out_path);
  if (!witness_path.empty() && res.witness)
    io::write_json(witness_path, io::witness_to_json(*res.witness));
  return res.verdict == Verdict::Inconclusive ? 2 : 0;
}

int cmd_robustness(const std::string& state_spec, const std::string& channel,
                   int channel_party, int k, double target_gap, double p_lo, double p_hi,
                   int max_probes, const std::string& a_grid, CommonFlags flags,
                   const std::string& out_path, const std::string& csv_path) {
  const auto t0 = std::chrono::steady_clock::now();

  SweepConfig cfg;
  cfg.solver.max_iter = flags.max_iter;
  cfg.solver.r_threshold = flags.r0;
  cfg.solver.lmo.restarts = flags.restarts;
  cfg.solver.lmo.rng_seed = flags.seed;
  cfg.solver.record_trace = false;
  cfg.max_probes = max_probes;
  cfg.pushout_eps = defaults::pushout_eps;
  cfg.pushout_ladder = defaults::pushout_ladder;

  json cfg_snapshot = {{"state", state_spec}, {"channel", channel},
                       {"k", k},              {"target_gap", target_gap},
                       {"max_iter", flags.max_iter}, {"restarts", flags.restarts},
                       {"r0", flags.r0}};

  std::vector<RobustnessResult> results;
  if (!a_grid.empty()) {
    // Horodecki multi-point sweep over the white-noise family
    std::vector<double> grid;
    for (const auto& tok : split(a_grid, ',')) grid.push_back(std::stod(tok));
    cfg.k = 2;
    cfg.target_gap = target_gap > 0 ? target_gap : defaults::target_gap_horodecki;
    cfg.p_lo = std::max(p_lo, 0.005);
    cfg.p_hi = p_hi;
    results = horodecki_sweep(grid, cfg);
  } else {
    ParsedState st = parse_state(state_spec);
    if (k <= 0) k = st.rho.num_parties();
    cfg.k = k;
    const bool horodecki_state = state_spec.rfind("horodecki", 0) == 0;
    cfg.target_gap = target_gap > 0 ? target_gap
                                    : (horodecki_state ? defaults::target_gap_horodecki
                                                       : defaults::target_gap_two_qubit);
    cfg.p_lo = p_lo;
    cfg.p_hi = p_hi;
    if ((channel == "bf" || channel == "pf") && p_hi == 1.0) cfg.p_hi = 0.5;
    if (horodecki_state && p_lo == 0.0) cfg.p_lo = 0.005;
    StateFamily fam;
    auto ch = channel_by_name(channel, channel_party);
    if (!ch)
      fam = white_noise_family(st.rho, st.pure);
    else
      fam = channel_family(st.rho, *ch, st.pure);
    results.push_back(bisect_threshold(fam, cfg));
  }

  bool all_ok = true;
  json rows = json::array();
  for (const auto& r : results) {
    all_ok = all_ok && r.success;
    rows.push_back(io::robustness_to_json(r));
    std::cout << "channel=" << r.channel;
    if (!std::isnan(r.a_param)) std::cout << " a=" << r.a_param;
    std::cout << " p_ent=" << r.p_ent << " p_sep=" << r.p_sep << " gap=" << r.gap
              << (r.success ? "" : "  [bracket FAILED: " + r.diagnostics + "]")
              << std::endl;
  }
  json j;
  j["results"] = rows;
  j["manifest"] = manifest_for("robustness", cfg_snapshot, flags.seed, t0);
  if (!out_path.empty()) io::write_json(out_path, j);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << io::robustness_csv_header() << '\n';
    for (const auto& r : results) csv << io::robustness_csv_row(r) << '\n';
  }
  return all_ok ? 0 : 2;
}

int cmd_net(const std::string& dims_spec, const std::string& partition_spec, int n,
            double cap, CommonFlags flags, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<int> dims;
  for (const auto& tok : split(dims_spec, ',')) dims.push_back(std::stoi(tok));
  HilbertStructure hs(dims);
  PartitionStructure part = PartitionStructure::finest(hs.num_parties());
  if (!partition_spec.empty()) {
    std::vector<std::vector<int>> blocks;
    for (const auto& blk : split(partition_spec, '|')) {
      std::vector<int> parties;
      for (const auto& tok : split(blk, ',')) parties.push_back(std::stoi(tok));
      blocks.push_back(parties);
    }
    part = PartitionStructure(blocks, hs.num_parties());
  }

  EpsNet net = product_net(hs, part, n, cap);
  std::cout << "product vertices: " << net.product_count() << "\n"
            << "eta: " << net.eta << "\n"
            << "epsilon: " << net.epsilon << std::endl;

  std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
  json cfg_snapshot = {{"dims", dims}, {"n", n}, {"cap", cap}};
  for (const auto& local : net.local_nets) {
    json j = io::sphere_net_to_json(local);
    j["manifest"] = manifest_for("net", cfg_snapshot, flags.seed, t0);
    const std::string path = (out_dir.empty() ? std::string(".") : out_dir) + "/" +
                             io::net_cache_name(local.dim_real, local.subdiv_n);
    io::write_json(path, j);
    std::cout << "wrote " << path << " (" << local.vertices.size() << " vertices)"
              << std::endl;
  }
  return 0;
}

int cmd_bench(const std::string& out_dir, bool quick, CommonFlags flags) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  json cfg_snapshot = {{"quick", quick}};
  auto stamp = [&](json j, const std::string& name) {
    j["manifest"] = manifest_for("bench", cfg_snapshot, flags.seed, t0);
    io::write_json(out_dir + "/" + name, j);
    std::cout << "wrote " << out_dir << "/" << name << std::endl;
  };
  auto detect_json = [](const experiments::DetectRun& r) {
    return json{{"name", r.name},         {"fired", r.fired},
                {"fired_iter", r.fired_iter}, {"iterations", r.iterations},
                {"lmo_calls", r.lmo_calls},   {"f", r.f},
                {"r", std::isnan(r.r) ? json() : json(r.r)},
                {"wall_time", r.wall_time_s}};
  };

  std::ofstream csv(out_dir + "/channels.csv");
  csv << io::robustness_csv_header() << '\n';

  {
    auto r = experiments::bell_white(flags.seed);
    stamp(io::robustness_to_json(r), "bell_white.json");
    csv << io::robustness_csv_row(r) << '\n';
  }
  for (auto kind : {NoiseChannel::Kind::BitFlip, NoiseChannel::Kind::PhaseFlip,
                    NoiseChannel::Kind::AmplitudeDamping, NoiseChannel::Kind::PhaseDamping}) {
    auto r = experiments::bell_channel(kind, flags.seed);
    stamp(io::robustness_to_json(r), std::string("bell_") + NoiseChannel::name(kind) + ".json");
    csv << io::robustness_csv_row(r) << '\n';
  }
  {
    auto g3 = experiments::ghz3_boundary(flags.seed);
    json j;
    j["detect_079"] = detect_json(g3.detect_079);
    j["probe_081"] = io::probe_to_json(g3.probe_081);
    stamp(j, "ghz3_boundary.json");
  }
  {
    auto r = experiments::ghz4_gme(flags.seed);
    stamp(io::robustness_to_json(r), "ghz4_gme.json");
    csv << io::robustness_csv_row(r) << '\n';
  }
  if (!quick) {
    for (auto runner : {experiments::ghz10_detect, experiments::dicke10_detect}) {
      auto r = runner(flags.seed);
      stamp(detect_json(r), r.name.substr(0, r.name.find('-')) + "_detect.json");
    }
    json grid = json::array();
    for (double a : {0.3, 0.5, 0.7}) {
      auto hp = experiments::horodecki_point(a, flags.seed);
      json j;
      j["a"] = hp.a;
      j["distance"] = hp.distance;
      j["net_epsilon_needed"] = hp.net_epsilon_needed;
      j["net_subdiv_used"] = hp.net_subdiv_used;
      j["witness_value"] = std::isnan(hp.witness_value) ? json() : json(hp.witness_value);
      j["witness_certified"] = hp.witness_certified;
      j["predicted_required_cardinality"] = hp.predicted_required_cardinality;
      j["sweep"] = io::robustness_to_json(hp.sweep);
      grid.push_back(j);
      csv << io::robustness_csv_row(hp.sweep) << '\n';
    }
    stamp(json{{"points", grid}}, "horodecki.json");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entanglement certification via conditional-gradient solvers"};
  app.require_subcommand(1);

  CommonFlags flags;
  app.add_option("--seed", flags.seed, "RNG seed for all stochastic pieces");
  app.add_option("--threads", flags.threads, "worker threads (default: all cores)");
  app.add_option("--config", flags.config_file, "JSON config file with default overrides");

  // detect
  auto* detect = app.add_subcommand("detect", "certify one state");
  std::string d_state, d_noise, d_engine = "bpcg", d_out, d_trace, d_witness;
  int d_k = 0, d_net_n = 0;
  bool d_rigorous = false;
  detect->add_option("--state", d_state, "state spec, e.g. ghz:3 or file:state.json")
      ->required();
  detect->add_option("--noise", d_noise, "noise spec channel:strength, e.g. white:0.5");
  detect->add_option("--k", d_k, "separability order k (default: party count)");
  detect->add_option("--engine", d_engine, "solver engine: bpcg or vanilla")
      ->check(CLI::IsMember({"bpcg", "vanilla"}));
  detect->add_flag("--rigorous", d_rigorous, "attempt an eps-net witness certificate");
  detect->add_option("--net-n", d_net_n, "net subdivision (0 = auto under the cap)");
  detect->add_option("--max-iter", flags.max_iter, "iteration budget");
  detect->add_option("--r0", flags.r0, "detection threshold on the dual gap ratio");
  detect->add_option("--restarts", flags.restarts, "LMO restarts");
  detect->add_option("--out", d_out, "result JSON path (default: stdout)");
  detect->add_option("--trace", d_trace, "JSON-lines iteration trace path");
  detect->add_option("--witness-out", d_witness, "witness export path");

  // robustness
  auto* robust = app.add_subcommand("robustness", "certified noise-robustness interval");
  std::string r_state, r_channel = "white", r_out, r_csv, r_agrid;
  int r_k = 0, r_party = 0, r_probes = defaults::max_probes;
  double r_gap = 0.0, r_plo = 0.0, r_phi = 1.0;
  robust->add_option("--state", r_state, "state spec")->required();
  robust->add_option("--channel", r_channel, "white|gd|bf|pf|ad|pd")
      ->check(CLI::IsMember({"white", "gd", "bf", "pf", "ad", "pd"}));
  robust->add_option("--channel-party", r_party, "party a one-sided channel acts on");
  robust->add_option("--k", r_k, "separability order k (default: party count)");
  robust->add_option("--target-gap", r_gap, "stop when p_sep - p_ent is below this");
  robust->add_option("--p-lo", r_plo, "initial entangled endpoint");
  robust->add_option("--p-hi", r_phi, "initial separable endpoint");
  robust->add_option("--probes", r_probes, "probe budget");
  robust->add_option("--a-grid", r_agrid, "comma list of Horodecki parameters to sweep");
  robust->add_option("--max-iter", flags.max_iter, "per-probe iteration budget");
  robust->add_option("--r0", flags.r0, "detection threshold on the dual gap ratio");
  robust->add_option("--restarts", flags.restarts, "LMO restarts");
  robust->add_option("--out", r_out, "report JSON path");
  robust->add_option("--csv", r_csv, "sweep table CSV path");

  // net
  auto* netcmd = app.add_subcommand("net", "build and cache sphere nets");
  std::string n_dims, n_partition, n_out;
  int n_n = 1;
  double n_cap = defaults::net_cap;
  netcmd->add_option("--dims", n_dims, "local dimensions, e.g. 2,2")->required();
  netcmd->add_option("--partition", n_partition, "blocks as party lists, e.g. 0,1|2");
  netcmd->add_option("--n", n_n, "edgewise subdivision parameter")->required();
  netcmd->add_option("--cap", n_cap, "product cardinality cap");
  netcmd->add_option("--out", n_out, "output directory for cache files");

  // bench
  auto* bench = app.add_subcommand("bench", "regenerate benchmark artifacts");
  std::string b_out = "results";
  bool b_quick = false;
  bench->add_option("--out", b_out, "output directory");
  bench->add_flag("--quick", b_quick, "skip the long-running scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    apply_config_file(flags.config_file, flags);
    if (flags.threads > 0) worker_count() = flags.threads;
    if (detect->parsed())
      return cmd_detect(d_state, d_noise, d_k, d_engine, d_rigorous, d_net_n, flags, d_out,
                        d_trace, d_witness);
    if (robust->parsed())
      return cmd_robustness(r_state, r_channel, r_party, r_k, r_gap, r_plo, r_phi, r_probes,
                            r_agrid, flags, r_out, r_csv);
    if (netcmd->parsed()) return cmd_net(n_dims, n_partition, n_n, n_cap, flags, n_out);
    if (bench->parsed()) return cmd_bench(b_out, b_quick, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
