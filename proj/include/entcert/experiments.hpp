#pragma once

#include <chrono>
#include <string>

#include "entcert/defaults.hpp"
#include "entcert/robustness.hpp"

// Canonical benchmark scenarios with pinned budgets; the CLI `bench`
// subcommand materializes their artifacts and the acceptance suite asserts
// their thresholds.
namespace entcert::experiments {

inline SolverConfig two_qubit_solver(uint64_t seed, int64_t iters = 3000000) {
  SolverConfig cfg;
  cfg.max_iter = iters;
  cfg.r_threshold = defaults::r_threshold;
  cfg.lmo.restarts = 3;
  cfg.lmo.rng_seed = seed;
  cfg.record_trace = false;
  return cfg;
}

// Bell state against white noise; the certified interval brackets 2/3.
inline RobustnessResult bell_white(uint64_t seed = defaults::seed) {
  SweepConfig cfg;
  cfg.k = 2;
  cfg.target_gap = 1.8e-3;
  cfg.max_probes = 30;
  cfg.solver = two_qubit_solver(seed);
  cfg.max_iter_sep = 400000;
  cfg.pushout_eps = 0.01;
  cfg.pushout_ladder = 4;
  auto fam = white_noise_family(make_bell(), bell_vector());
  return bisect_threshold(fam, cfg);
}

// Bell state against one of the Kraus channels (or gd on both qubits).
inline RobustnessResult bell_channel(NoiseChannel::Kind kind,
                                     uint64_t seed = defaults::seed) {
  SweepConfig cfg;
  cfg.k = 2;
  cfg.solver = two_qubit_solver(seed);
  cfg.max_iter_sep = 400000;
  cfg.pushout_eps = 0.01;
  cfg.pushout_ladder = 4;
  NoiseChannel ch = [&] {
    switch (kind) {
      case NoiseChannel::Kind::BitFlip: return NoiseChannel::bit_flip(0);
      case NoiseChannel::Kind::PhaseFlip: return NoiseChannel::phase_flip(0);
      case NoiseChannel::Kind::AmplitudeDamping: return NoiseChannel::amplitude_damping(0);
      case NoiseChannel::Kind::PhaseDamping: return NoiseChannel::phase_damping(0);
      case NoiseChannel::Kind::GlobalDepolarizing:
        return NoiseChannel::global_depolarizing({0, 1});
    }
    throw std::domain_error("unknown channel");
  }();
  switch (kind) {
    case NoiseChannel::Kind::BitFlip:
    case NoiseChannel::Kind::PhaseFlip:
      // the flip families are symmetric about 1/2, which is their only
      // separable strength
      cfg.p_hi = 0.5;
      cfg.target_gap = 1.8e-3;
      break;
    case NoiseChannel::Kind::AmplitudeDamping:
    case NoiseChannel::Kind::PhaseDamping:
      cfg.target_gap = 1e-3;
      cfg.solver.max_iter = 1000000;
      break;
    case NoiseChannel::Kind::GlobalDepolarizing:
      cfg.target_gap = 1.8e-3;
      break;
  }
  auto fam = channel_family(make_bell(), ch, bell_vector());
  return bisect_threshold(fam, cfg);
}

struct DetectRun {
  std::string name;
  bool fired = false;
  int64_t fired_iter = -1;
  int64_t iterations = 0;
  int64_t lmo_calls = 0;
  double f = 0.0, g = 0.0, r = 0.0;
  double wall_time_s = 0.0;
};

inline DetectRun detect_run(const std::string& name, const DensityMatrix& rho, int k,
                            const SolverConfig& cfg) {
  DetectRun run;
  run.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  SolverOutcome out;
  CertResult res = detect_entanglement(rho, SepTarget::k_separable(k), cfg, &out);
  run.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.fired = res.verdict == Verdict::HeuristicEntangled;
  run.fired_iter = out.r_fired_iter;
  run.iterations = out.iterations;
  run.lmo_calls = out.lmo_calls;
  run.f = out.f_val;
  run.g = out.g_val;
  run.r = out.r_val;
  return run;
}

// GHZ(3) around the k=3 boundary at 0.8: detection just inside, ball
// certification just outside.
struct Ghz3Boundary {
  DetectRun detect_079;
  ProbeResult probe_081;
};

inline Ghz3Boundary ghz3_boundary(uint64_t seed = defaults::seed) {
  Ghz3Boundary out;
  SolverConfig det;
  det.max_iter = 100000;
  det.lmo.restarts = 4;
  det.lmo.rng_seed = seed;
  det.record_trace = false;
  out.detect_079 = detect_run("ghz3-white-0.79", mix_white_noise(make_ghz(3), 0.79), 3, det);

  SweepConfig probe_cfg;
  probe_cfg.k = 3;
  probe_cfg.solver = det;
  probe_cfg.solver.max_iter = 50000;
  probe_cfg.pushout_eps = 0.02;
  auto fam = white_noise_family(make_ghz(3), ghz_vector(3));
  out.probe_081 = probe(fam, 0.81, probe_cfg);
  return out;
}

// 10-qubit GHZ and Dicke detection at 70% white noise, full separability.
inline SolverConfig large_system_solver(uint64_t seed) {
  SolverConfig cfg;
  cfg.max_iter = 2000;
  cfg.lmo.restarts = 2;
  cfg.lmo.max_sweeps = 10;
  cfg.lmo.sweep_tol = 1e-8;
  cfg.lmo.rng_seed = seed;
  cfg.record_trace = true;
  return cfg;
}

inline DetectRun ghz10_detect(uint64_t seed = defaults::seed) {
  return detect_run("ghz10-white-0.7", mix_white_noise(make_ghz(10), 0.7), 10,
                    large_system_solver(seed));
}

inline DetectRun dicke10_detect(uint64_t seed = defaults::seed) {
  return detect_run("dicke10-white-0.7", mix_white_noise(make_dicke(10, 5), 0.7), 10,
                    large_system_solver(seed));
}

// GHZ(4) genuine multipartite entanglement (k=2) white-noise interval
// around 8/15.
inline RobustnessResult ghz4_gme(uint64_t seed = defaults::seed) {
  SweepConfig cfg;
  cfg.k = 2;
  cfg.p_lo = 0.3;
  cfg.target_gap = 8e-3;
  cfg.max_probes = 25;
  cfg.solver.max_iter = 350000;
  cfg.solver.lmo.restarts = 3;
  cfg.solver.lmo.rng_seed = seed;
  cfg.solver.record_trace = false;
  cfg.max_iter_sep = 350000;
  cfg.pushout_eps = 0.01;
  cfg.pushout_ladder = 3;
  auto fam = white_noise_family(make_ghz(4), ghz_vector(4));
  return bisect_threshold(fam, cfg);
}

// Horodecki family: rigorous witness attempt at p = 0 plus the white-noise
// interval over the 3x3 bipartition.
struct HorodeckiPoint {
  double a = 0.0;
  double distance = 0.0;          // ||rho - sigma_t|| from the solver
  double net_epsilon_needed = 0.0;  // covering radius that certification needs
  int net_subdiv_used = 0;
  double witness_value = std::numeric_limits<double>::quiet_NaN();
  bool witness_certified = false;
  double predicted_required_cardinality = 0.0;
  RobustnessResult sweep;
};

inline HorodeckiPoint horodecki_point(double a, uint64_t seed = defaults::seed,
                                      double net_cap = defaults::net_cap) {
  HorodeckiPoint out;
  out.a = a;
  DensityMatrix rho = make_horodecki(a);
  auto part = PartitionStructure::finest(2);

  SolverConfig solver;
  solver.max_iter = 200000;
  solver.r_threshold = 1e-12;
  solver.lmo.restarts = 3;
  solver.lmo.rng_seed = seed;
  solver.record_trace = false;
  SolverOutcome run = solve_distance(rho, SepTarget::k_separable(2), solver);
  out.distance = std::sqrt(2.0 * std::max(0.0, run.f_val));
  // certification requires the net covering radius to beat the distance
  out.net_epsilon_needed = out.distance;
  const double eta_needed = std::sqrt(std::max(
      0.0, 1.0 - 0.5 * out.net_epsilon_needed * out.net_epsilon_needed));
  const double eta_block = std::sqrt(eta_needed);
  const int n_needed = static_cast<int>(
      std::ceil(std::sqrt(10.0 * eta_block * eta_block /
                          std::max(1e-300, 1.0 - eta_block * eta_block))));
  double req = cross_polytope_vertex_count(6, n_needed);
  out.predicted_required_cardinality = req * req;

  const int n = max_feasible_net_subdiv(rho.structure(), part, net_cap);
  if (n >= 1) {
    EpsNet net = product_net(rho.structure(), part, n, net_cap);
    Witness w = build_witness_robust(rho, run.active.iterate(), net);
    out.net_subdiv_used = n;
    out.witness_value = w.value_on_target;
    out.witness_certified = w.certifies();
  }

  SweepConfig sweep;
  sweep.k = 2;
  sweep.p_lo = 0.005;
  sweep.target_gap = defaults::target_gap_horodecki;
  sweep.solver = solver;
  sweep.solver.r_threshold = defaults::r_threshold;
  sweep.max_iter_sep = 200000;
  auto fam = white_noise_family(rho);
  out.sweep = bisect_threshold(fam, sweep);
  return out;
}

}  // namespace entcert::experiments
