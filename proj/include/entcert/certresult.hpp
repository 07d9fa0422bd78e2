#pragma once

#include <map>
#include <optional>
#include <string>

#include "entcert/common.hpp"

namespace entcert {

// Rigorous entanglement witness assembled from an eps-net search:
//   W = (Lambda - (beta - eps_hat) I) / ||Lambda||.
// eta is the state-space shrinking factor backing eps_hat = (1-eta)||Lambda||.
struct Witness {
  Mat op;
  double beta = 0.0;
  double eps_hat = 0.0;
  double eta = 0.0;
  double value_on_target = 0.0;
  // net parameters for export
  int net_subdiv = 0;
  double net_eta = 0.0;

  bool certifies() const { return value_on_target < 0.0; }
};

enum class Verdict { HeuristicEntangled, WitnessCertified, SeparabilityCertified, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::HeuristicEntangled: return "heuristic-entangled";
    case Verdict::WitnessCertified: return "witness-certified-entangled";
    case Verdict::SeparabilityCertified: return "separability-certified";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct CertResult {
  Verdict verdict = Verdict::Inconclusive;
  std::map<std::string, double> numbers;  // f, g, r, p_sep, delta, iter, ...
  std::optional<Witness> witness;
};

}  // namespace entcert
