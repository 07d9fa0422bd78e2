#include <catch2/catch_amalgamated.hpp>

#include "entcert/certify.hpp"
#include "oracles.hpp"

using namespace entcert;
using Catch::Approx;

namespace {

SolverConfig quiet_cfg(uint64_t seed, int64_t iters) {
  SolverConfig cfg;
  cfg.max_iter = iters;
  cfg.r_threshold = 1e-9;
  cfg.lmo.restarts = 4;
  cfg.lmo.rng_seed = seed;
  cfg.record_trace = false;
  return cfg;
}

}  // namespace

TEST_CASE("simple witness", "[certify]") {
  std::mt19937_64 rng(2);
  auto bell = make_bell();

  SECTION("sigma equal to the target gives the zero operator") {
    Mat w = build_witness_simple(bell, bell);
    REQUIRE(w.norm() <= 1e-14);
  }
  SECTION("maximally mixed anchor against Bell") {
    DensityMatrix sigma(maximally_mixed(4), qubits(2));
    Mat w = build_witness_simple(sigma, bell);
    const double on_target = hs_inner(w, bell.mat());
    // frozen by direct evaluation: -||Bell - I/4||^2 = -3/4
    REQUIRE(on_target == Approx(-0.75).margin(1e-12));
  }
  SECTION("algebraic identity tr(W (rho_e - sigma)) = -||rho_e - sigma||^2") {
    for (int trial = 0; trial < 10; ++trial) {
      DensityMatrix sigma(oracle::random_density(4, rng), qubits(2));
      DensityMatrix rho(oracle::random_density(4, rng), qubits(2));
      Mat w = build_witness_simple(sigma, rho);
      const double lhs = hs_inner(w, rho.mat() - sigma.mat());
      REQUIRE(lhs == Approx(-(rho.mat() - sigma.mat()).squaredNorm()).margin(1e-12));
    }
  }
  SECTION("structure mismatch") {
    DensityMatrix qutrit(maximally_mixed(9), HilbertStructure({3, 3}));
    REQUIRE_THROWS_AS(build_witness_simple(qutrit, bell), structural_error);
  }
}

TEST_CASE("robust witness certifies Bell once the net is fine enough", "[certify]") {
  auto bell = make_bell();
  auto out = solve_distance(bell, SepTarget::k_separable(2), quiet_cfg(3, 3000));
  REQUIRE(out.f_val == Approx(1.0 / 6.0).margin(1e-7));

  bool coarse_certified = true;
  bool fine_certified = false;
  for (int n : {2, 6, 10}) {
    EpsNet net = product_net(qubits(2), PartitionStructure::finest(2), n);
    Witness w = build_witness_robust(bell, out.active.iterate(), net);
    // assembly identity
    REQUIRE((w.op * (out.active.iterate() - bell.mat()).norm() -
             (out.active.iterate() - bell.mat()) +
             (w.beta - w.eps_hat) * Mat::Identity(4, 4))
                .norm() <= 1e-12);
    // eps_hat = (1 - eta) ||Lambda|| with the recorded state-space eta
    REQUIRE(w.eps_hat ==
            Approx((1.0 - w.eta) * (out.active.iterate() - bell.mat()).norm())
                .margin(1e-12));
    if (n == 2) coarse_certified = w.certifies();
    if (n == 10) fine_certified = w.certifies();
  }
  REQUIRE_FALSE(coarse_certified);
  REQUIRE(fine_certified);
}

TEST_CASE("robust witness soundness", "[certify]") {
  std::mt19937_64 rng(5);
  EpsNet net = product_net(qubits(2), PartitionStructure::finest(2), 4);

  SECTION("never fires on explicitly separable states") {
    for (int trial = 0; trial < 20; ++trial) {
      Mat sep = oracle::random_separable(qubits(2), 6, rng);
      DensityMatrix rho(sep, qubits(2));
      auto out = solve_distance(rho, SepTarget::k_separable(2), quiet_cfg(50 + trial, 1500));
      if ((out.active.iterate() - rho.mat()).norm() < 1e-12) continue;  // degenerate
      Witness w = build_witness_robust(rho, out.active.iterate(), net);
      REQUIRE(w.value_on_target >= -1e-10);
    }
  }
  SECTION("nonnegative on net vertices and random product states") {
    auto bell = make_bell();
    auto out = solve_distance(bell, SepTarget::k_separable(2), quiet_cfg(7, 2000));
    EpsNet fine = product_net(qubits(2), PartitionStructure::finest(2), 8);
    Witness w = build_witness_robust(bell, out.active.iterate(), fine);
    REQUIRE(w.certifies());
    for (uint64_t i = 0; i < fine.product_count(); i += 97) {
      Vec v = fine.product_vertex(i).full_vector();
      REQUIRE((v.adjoint() * (w.op * v)).value().real() >= -1e-10);
    }
    for (int s = 0; s < 2000; ++s) {
      Vec v = oracle::random_product_vector(qubits(2), rng);
      REQUIRE((v.adjoint() * (w.op * v)).value().real() >= -1e-10);
    }
  }
  SECTION("degenerate direction is rejected") {
    auto bell = make_bell();
    REQUIRE_THROWS_AS(build_witness_robust(bell, bell.mat(), net), std::domain_error);
  }
}

TEST_CASE("separable ball radius", "[certify]") {
  SECTION("two qubits") {
    const double r = separable_ball_radius_k(qubits(2), 2);
    REQUIRE(r == Approx(1.0 / std::sqrt(12.0)).margin(1e-15));
    // cross-check: the Werner state at the ball boundary is PPT
    Mat dir = make_bell().mat() - maximally_mixed(4);
    Mat probe = maximally_mixed(4) + r * dir / dir.norm();
    REQUIRE(oracle::is_ppt(probe, qubits(2), {0}));
  }
  SECTION("two qutrits") {
    HilbertStructure hs({3, 3});
    REQUIRE(separable_ball_radius_k(hs, 2) == Approx(1.0 / std::sqrt(72.0)).margin(1e-15));
  }
  SECTION("finer partitions shrink the radius") {
    const double r3 = separable_ball_radius_k(qubits(3), 3);
    REQUIRE(r3 == Approx(std::pow(2.0, -0.5) / std::sqrt(56.0)).margin(1e-14));
    BallConfig override_cfg;
    override_cfg.multipartite_radius_override = 0.01;
    REQUIRE(separable_ball_radius_k(qubits(3), 3, override_cfg) == 0.01);
    // every multipartite radius stays inside the PSD in-sphere
    REQUIRE(r3 < 1.0 / std::sqrt(8.0 * 7.0));
  }
}

TEST_CASE("certify_separability", "[certify]") {
  auto bell = make_bell();
  const double a = separable_ball_radius_k(qubits(2), 2);

  SECTION("zero distance certifies the probed strength itself") {
    SolverOutcome fake;
    fake.f_val = 0.0;
    auto res = certify_separability(bell, 0.42, fake, a);
    REQUIRE(res.verdict == Verdict::SeparabilityCertified);
    REQUIRE(res.numbers.at("p_sep") == Approx(0.42).margin(1e-15));
  }
  SECTION("delta equal to the radius gives the midpoint") {
    SolverOutcome fake;
    fake.f_val = 0.5 * a * a;  // delta = a
    auto res = certify_separability(bell, 0.3, fake, a);
    REQUIRE(res.numbers.at("p_sep") == Approx((0.3 + 1.0) / 2.0).margin(1e-12));
  }
  SECTION("monotone in delta") {
    double prev = 0.0;
    for (double delta : {1e-4, 1e-3, 1e-2, 1e-1}) {
      SolverOutcome fake;
      fake.f_val = 0.5 * delta * delta;
      auto res = certify_separability(bell, 0.5, fake, a);
      REQUIRE(res.numbers.at("p_sep") > prev);
      prev = res.numbers.at("p_sep");
    }
  }
  SECTION("a real run just above the Bell threshold") {
    auto rho = mix_white_noise(bell, 0.70);
    auto out = solve_distance(rho, SepTarget::k_separable(2), quiet_cfg(9, 60000));
    const double delta = std::sqrt(2.0 * out.f_val);
    REQUIRE(delta <= 1e-4);
    auto res = certify_separability(rho, 0.70, out, a);
    REQUIRE(res.numbers.at("p_sep") <= 0.7004);
    REQUIRE(res.numbers.at("p_sep") >= 0.70);
  }
  SECTION("invalid radius") {
    SolverOutcome fake;
    REQUIRE_THROWS_AS(certify_separability(bell, 0.5, fake, 0.0), std::domain_error);
  }
}

TEST_CASE("point separability certificate", "[certify]") {
  SECTION("maximally mixed state is certified directly") {
    const double a = separable_ball_radius_k(qubits(2), 2);
    auto cert = certify_state_separable(maximally_mixed(4), qubits(2),
                                        SepTarget::k_separable(2), quiet_cfg(11, 2000),
                                        a, 0.02);
    REQUIRE(cert.certified);
  }
  SECTION("Bell state is never point-certified") {
    const double a = separable_ball_radius_k(qubits(2), 2);
    auto cert = certify_state_separable(make_bell().mat(), qubits(2),
                                        SepTarget::k_separable(2), quiet_cfg(12, 2000),
                                        a, 0.02);
    REQUIRE_FALSE(cert.certified);
  }
}

TEST_CASE("certification pipeline", "[certify]") {
  PipelineConfig pcfg;
  pcfg.solver = quiet_cfg(13, 20000);
  pcfg.solver.r_threshold = 0.2;

  SECTION("Bell is heuristically entangled") {
    auto res = run_certification(make_bell(), SepTarget::k_separable(2), pcfg);
    REQUIRE(res.verdict == Verdict::HeuristicEntangled);
  }
  SECTION("deep white noise is separability-certified") {
    auto rho = mix_white_noise(make_bell(), 0.9);
    auto res = run_certification(rho, SepTarget::k_separable(2), pcfg);
    REQUIRE(res.verdict == Verdict::SeparabilityCertified);
  }
  SECTION("rigorous mode reaches a witness certificate for Bell") {
    PipelineConfig strict = pcfg;
    strict.rigorous = true;
    strict.solver.r_threshold = 1e-9;
    strict.solver.max_iter = 3000;
    strict.witness_net_subdiv = 10;
    auto res = run_certification(make_bell(), SepTarget::k_separable(2), strict);
    REQUIRE(res.verdict == Verdict::WitnessCertified);
    REQUIRE(res.witness.has_value());
    REQUIRE(res.witness->value_on_target < 0.0);
  }
}
