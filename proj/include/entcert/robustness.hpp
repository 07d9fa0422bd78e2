#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "entcert/certify.hpp"

namespace entcert {

// One-parameter family of states, strength in [0,1].
struct StateFamily {
  std::function<Mat(double)> at;
  HilbertStructure structure;
  std::string name;
  std::optional<Vec> target_pure;  // for fidelity reporting
  bool is_white_line = false;      // family(p) = (1-p) rho0 + p I/d
};

inline StateFamily white_noise_family(const DensityMatrix& rho,
                                      std::optional<Vec> pure = std::nullopt,
                                      std::string name = "white") {
  StateFamily f;
  f.structure = rho.structure();
  f.name = std::move(name);
  f.target_pure = std::move(pure);
  f.is_white_line = true;
  Mat base = rho.mat();
  const int d = rho.dim();
  f.at = [base, d](double p) -> Mat {
    if (p < 0.0 || p > 1.0) throw std::domain_error("family strength not in [0,1]");
    return (1.0 - p) * base + p * maximally_mixed(d);
  };
  return f;
}

inline StateFamily channel_family(const DensityMatrix& rho, const NoiseChannel& ch,
                                  std::optional<Vec> pure = std::nullopt) {
  StateFamily f;
  f.structure = rho.structure();
  f.name = NoiseChannel::name(ch.kind());
  f.target_pure = std::move(pure);
  Mat base = rho.mat();
  HilbertStructure hs = rho.structure();
  f.at = [base, hs, ch](double p) -> Mat {
    return detail::apply_channel_mat(base, hs, ch, p);
  };
  return f;
}

enum class ProbeVerdict { Entangled, Separable, Unknown };
enum class CertKind { RCriterion, Witness, Ball, ExplicitDecomposition, None };

inline const char* cert_kind_name(CertKind k) {
  switch (k) {
    case CertKind::RCriterion: return "r-criterion";
    case CertKind::Witness: return "witness";
    case CertKind::Ball: return "ball";
    case CertKind::ExplicitDecomposition: return "explicit-decomposition";
    case CertKind::None: return "none";
  }
  return "?";
}

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::Unknown;
  CertKind kind = CertKind::None;
  double strength = 0.0;
  double certified_value = 0.0;  // strength the certificate actually covers
  double f = 0.0, g = 0.0, r = 0.0, delta = 0.0;
  int64_t iterations = 0;
  int64_t lmo_calls = 0;
};

struct SweepConfig {
  double p_lo = 0.0;
  double p_hi = 1.0;
  double target_gap = 1e-3;
  int max_probes = 40;
  SolverConfig solver;
  int64_t max_iter_sep = 0;  // 0 = same as solver.max_iter
  enum class Mode { Heuristic, Rigorous } mode = Mode::Heuristic;
  BallConfig ball;
  double pushout_eps = 0.02;
  int pushout_ladder = 3;
  double exact_decomposition_tol = 1e-9;
  int witness_net_subdiv = 0;
  double net_cap = 1e7;
  int k = 0;  // separability order; 0 = number of parties (full separability)

  void validate() const {
    if (!(p_lo >= 0.0 && p_lo < p_hi && p_hi <= 1.0))
      throw std::domain_error("SweepConfig: need 0 <= p_lo < p_hi <= 1");
    if (!(target_gap > 0.0)) throw std::domain_error("SweepConfig: target_gap > 0");
  }
};

struct RobustnessResult {
  std::string channel;
  double a_param = std::numeric_limits<double>::quiet_NaN();  // Horodecki sweeps
  bool success = false;
  double p_ent = 0.0;
  double p_sep = 1.0;
  double gap = 1.0;
  double fidelity_at_ent = std::numeric_limits<double>::quiet_NaN();
  double fidelity_at_sep = std::numeric_limits<double>::quiet_NaN();
  CertKind ent_kind = CertKind::None;
  CertKind sep_kind = CertKind::None;
  int probes = 0;
  double wall_time_s = 0.0;
  std::string diagnostics;
  std::vector<ProbeResult> traces;
};

namespace detail {

inline SepTarget sweep_target(const StateFamily& family, const SweepConfig& cfg) {
  const int n = family.structure.num_parties();
  const int k = cfg.k > 0 ? cfg.k : n;
  return SepTarget::k_separable(k);
}

}  // namespace detail

// Classifies the family member at strength p.  Entangled when the ratio
// criterion fires (or, in rigorous mode, when the net witness certifies);
// Separable when a ball certificate from a lower-strength run covers p, or
// when the solver exhibits an explicit product decomposition within 1e-9.
inline ProbeResult probe(const StateFamily& family, double p, const SweepConfig& cfg) {
  SepTarget target = detail::sweep_target(family, cfg);
  ProbeResult res;
  res.strength = p;

  DensityMatrix rho_p(family.at(p), family.structure);
  SolverOutcome direct;
  CertResult det = detect_entanglement(rho_p, target, cfg.solver, &direct);
  res.f = direct.f_val;
  res.g = direct.g_val;
  res.r = direct.r_val;
  res.iterations = direct.iterations;
  res.lmo_calls = direct.lmo_calls;
  res.delta = std::sqrt(2.0 * std::max(0.0, direct.f_val));
  if (det.verdict == Verdict::HeuristicEntangled) {
    res.verdict = ProbeVerdict::Entangled;
    res.kind = CertKind::RCriterion;
    res.certified_value = p;
    return res;
  }

  if (cfg.mode == SweepConfig::Mode::Rigorous && res.delta > 1e-8) {
    auto partitions = partitions_into_k_blocks(family.structure.num_parties(),
                                               target.k);
    if (partitions.size() == 1) {
      const int n = cfg.witness_net_subdiv > 0
                        ? cfg.witness_net_subdiv
                        : max_feasible_net_subdiv(family.structure, partitions[0], cfg.net_cap);
      if (n >= 1) {
        EpsNet net = product_net(family.structure, partitions[0], n, cfg.net_cap);
        Witness w = build_witness_robust(rho_p, direct.active.iterate(), net);
        if (w.value_on_target < -1e-12) {
          res.verdict = ProbeVerdict::Entangled;
          res.kind = CertKind::Witness;
          res.certified_value = p;
          return res;
        }
      }
    }
  }

  // ball certificates from lower-strength (pushed-out) runs
  const double a = separable_ball_radius_k(family.structure, target.k, cfg.ball);
  SolverConfig sep_solver = cfg.solver;
  if (cfg.max_iter_sep > 0) sep_solver.max_iter = cfg.max_iter_sep;
  sep_solver.record_trace = false;
  double eps = cfg.pushout_eps;
  for (int attempt = 0; attempt < cfg.pushout_ladder; ++attempt, eps /= 2.0) {
    // the anchor run may stop once delta clears the certificate target
    sep_solver.f_tol = std::max(cfg.solver.f_tol, 0.5 * std::pow(eps * a * 0.999, 2));
    if (family.is_white_line) {
      const double p_low = p - eps * (1.0 - p);
      if (p_low < 0.0) continue;
      DensityMatrix pushed(family.at(p_low), family.structure);
      SolverOutcome run = solve_distance(pushed, target, sep_solver);
      CertResult cert = certify_separability(pushed, p_low, run, a);
      if (cert.numbers.at("p_sep") <= p) {
        res.verdict = ProbeVerdict::Separable;
        res.kind = CertKind::Ball;
        res.certified_value = cert.numbers.at("p_sep");
        res.delta = cert.numbers.at("delta");
        return res;
      }
    } else {
      PointCertificate cert = certify_state_separable(family.at(p), family.structure,
                                                      target, sep_solver, a, eps);
      if (cert.certified) {
        res.verdict = ProbeVerdict::Separable;
        res.kind = CertKind::Ball;
        res.certified_value = p;
        res.delta = cert.delta;
        return res;
      }
    }
  }

  // boundary-exact endpoints (e.g. flip channels at 1/2, damping at 1) admit
  // no ball margin; an explicit product decomposition within tolerance is
  // reported as its own certificate kind
  if (res.delta <= cfg.exact_decomposition_tol) {
    res.verdict = ProbeVerdict::Separable;
    res.kind = CertKind::ExplicitDecomposition;
    res.certified_value = p;
    return res;
  }
  return res;
}

// Bisection with certificate-carrying endpoints.  Unknown probes bisect
// toward the separable side first; the bracket only ever narrows.
inline RobustnessResult bisect_threshold(const StateFamily& family, SweepConfig cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RobustnessResult out;
  out.channel = family.name;

  auto note = [&](const ProbeResult& r) {
    out.traces.push_back(r);
    ++out.probes;
  };

  auto try_entangled = [&](double p) -> bool {
    ProbeResult r = probe(family, p, cfg);
    note(r);
    if (r.verdict == ProbeVerdict::Entangled) {
      out.p_ent = std::max(out.p_ent, p);
      out.ent_kind = r.kind;
      return true;
    }
    if (r.verdict == ProbeVerdict::Separable) {
      out.p_sep = std::min(out.p_sep, r.certified_value);
      out.sep_kind = r.kind;
    }
    return false;
  };
  auto try_separable = [&](double p) -> bool {
    ProbeResult r = probe(family, p, cfg);
    note(r);
    if (r.verdict == ProbeVerdict::Separable) {
      out.p_sep = std::min(out.p_sep, r.certified_value);
      out.sep_kind = r.kind;
      return true;
    }
    if (r.verdict == ProbeVerdict::Entangled) {
      out.p_ent = std::max(out.p_ent, p);
      out.ent_kind = r.kind;
    }
    return false;
  };

  out.p_ent = 0.0;
  out.p_sep = 1.0;
  bool have_lo = try_entangled(cfg.p_lo);
  if (!have_lo && cfg.p_lo > 0.0) have_lo = try_entangled(cfg.p_lo / 2.0);
  if (!have_lo) {
    out.diagnostics = "no entangled endpoint established";
    out.gap = out.p_sep - out.p_ent;
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  out.p_ent = std::max(out.p_ent, cfg.p_lo);

  bool have_hi = try_separable(cfg.p_hi);
  if (!have_hi && cfg.p_hi < 1.0) have_hi = try_separable(std::min(1.0, cfg.p_hi + 0.5 * (1.0 - cfg.p_hi)));
  if (!have_hi) {
    out.diagnostics = "no separable endpoint established";
    out.gap = out.p_sep - out.p_ent;
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  // unknown zone inside the bracket; probes avoid re-testing it
  double u_lo = std::numeric_limits<double>::quiet_NaN();
  double u_hi = std::numeric_limits<double>::quiet_NaN();
  bool toward_sep = true;
  while (out.p_sep - out.p_ent > cfg.target_gap && out.probes < cfg.max_probes) {
    double candidate;
    if (std::isnan(u_lo)) {
      candidate = 0.5 * (out.p_ent + out.p_sep);
    } else if (toward_sep && u_hi < out.p_sep - 0.25 * cfg.target_gap) {
      candidate = 0.5 * (u_hi + out.p_sep);
    } else if (u_lo > out.p_ent + 0.25 * cfg.target_gap) {
      candidate = 0.5 * (out.p_ent + u_lo);
      toward_sep = true;
    } else if (u_hi < out.p_sep - 0.25 * cfg.target_gap) {
      candidate = 0.5 * (u_hi + out.p_sep);
    } else {
      out.diagnostics = "bracket saturated by unknown probes";
      break;
    }
    ProbeResult r = probe(family, candidate, cfg);
    note(r);
    switch (r.verdict) {
      case ProbeVerdict::Entangled:
        out.p_ent = std::max(out.p_ent, candidate);
        out.ent_kind = r.kind;
        if (!std::isnan(u_lo) && u_lo < out.p_ent) u_lo = out.p_ent;
        break;
      case ProbeVerdict::Separable:
        out.p_sep = std::min(out.p_sep, r.certified_value);
        out.sep_kind = r.kind;
        if (!std::isnan(u_hi) && u_hi > out.p_sep) u_hi = out.p_sep;
        break;
      case ProbeVerdict::Unknown:
        if (std::isnan(u_lo)) {
          u_lo = u_hi = candidate;
        } else {
          u_lo = std::min(u_lo, candidate);
          u_hi = std::max(u_hi, candidate);
        }
        toward_sep = !toward_sep;
        break;
    }
  }

  out.success = out.p_ent < out.p_sep;
  out.gap = out.p_sep - out.p_ent;
  if (family.target_pure) {
    DensityMatrix at_ent(family.at(out.p_ent), family.structure);
    DensityMatrix at_sep(family.at(out.p_sep), family.structure);
    out.fidelity_at_ent = fidelity_with_pure(at_ent, *family.target_pure);
    out.fidelity_at_sep = fidelity_with_pure(at_sep, *family.target_pure);
  }
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// White-noise robustness of the Horodecki family over the 3x3 bipartition.
inline std::vector<RobustnessResult> horodecki_sweep(const std::vector<double>& a_values,
                                                     SweepConfig cfg) {
  std::vector<RobustnessResult> out;
  for (double a : a_values) {
    RobustnessResult r;
    try {
      DensityMatrix rho = make_horodecki(a);
      SweepConfig c = cfg;
      c.k = 2;
      StateFamily fam = white_noise_family(rho, std::nullopt, "white");
      r = bisect_threshold(fam, c);
    } catch (const std::exception& e) {
      r.success = false;
      r.diagnostics = e.what();
    }
    r.a_param = a;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace entcert
