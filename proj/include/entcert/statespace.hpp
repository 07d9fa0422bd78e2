#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "entcert/hilbert.hpp"

namespace entcert {

// Hermitian, PSD, unit-trace matrix on a tensor-product space.  The
// invariants are checked at construction; everything downstream may assume
// them.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  DensityMatrix(Mat matrix, HilbertStructure structure)
      : matrix_(std::move(matrix)), structure_(std::move(structure)) {
    if (matrix_.rows() != structure_.total_dim() ||
        matrix_.cols() != structure_.total_dim())
      throw structural_error("DensityMatrix: dimension does not match structure");
    if (hermiticity_defect(matrix_) > tol::hermiticity)
      throw structural_error("DensityMatrix: not Hermitian within 1e-12");
    if (std::abs(matrix_.trace().real() - 1.0) > tol::trace ||
        std::abs(matrix_.trace().imag()) > tol::trace)
      throw structural_error("DensityMatrix: trace not 1 within 1e-12");
    Eigen::SelfAdjointEigenSolver<Mat> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol::psd_floor)
      throw structural_error("DensityMatrix: negative eigenvalue below -1e-10");
  }

  const Mat& mat() const { return matrix_; }
  const HilbertStructure& structure() const { return structure_; }
  int dim() const { return structure_.total_dim(); }
  int num_parties() const { return structure_.num_parties(); }

 private:
  Mat matrix_;
  HilbertStructure structure_;
};

// f(rho, sigma) = 1/2 ||rho - sigma||^2 in Hilbert-Schmidt norm.
inline double hs_distance_sq(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.structure() != sigma.structure())
    throw structural_error("hs_distance_sq: structures differ");
  return 0.5 * (rho.mat() - sigma.mat()).squaredNorm();
}

inline Mat maximally_mixed(int dim) {
  return Mat::Identity(dim, dim) / static_cast<double>(dim);
}

// ---------------------------------------------------------------------------
// Named states

inline Vec bell_vector() {
  Vec v = Vec::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

inline Vec ghz_vector(int n) {
  if (n < 2) throw std::domain_error("GHZ needs n >= 2");
  const int d = 1 << n;
  Vec v = Vec::Zero(d);
  v(0) = v(d - 1) = 1.0 / std::sqrt(2.0);
  return v;
}

inline Vec w_vector(int n) {
  if (n < 2) throw std::domain_error("W needs n >= 2");
  const int d = 1 << n;
  Vec v = Vec::Zero(d);
  for (int p = 0; p < n; ++p) v(1 << (n - 1 - p)) = 1.0 / std::sqrt(double(n));
  return v;
}

inline Vec dicke_vector(int n, int excitations) {
  if (n < 2) throw std::domain_error("Dicke needs n >= 2");
  if (excitations < 0 || excitations > n)
    throw std::domain_error("Dicke excitation count out of range");
  const int d = 1 << n;
  Vec v = Vec::Zero(d);
  int count = 0;
  for (int i = 0; i < d; ++i)
    if (__builtin_popcount(static_cast<unsigned>(i)) == excitations) {
      v(i) = 1.0;
      ++count;
    }
  v /= std::sqrt(double(count));
  return v;
}

inline DensityMatrix pure_state(const Vec& v, HilbertStructure hs) {
  Mat m = v * v.adjoint();
  return DensityMatrix(std::move(m), std::move(hs));
}

inline HilbertStructure qubits(int n) {
  return HilbertStructure(std::vector<int>(n, 2));
}

inline DensityMatrix make_bell() { return pure_state(bell_vector(), qubits(2)); }
inline DensityMatrix make_ghz(int n) { return pure_state(ghz_vector(n), qubits(n)); }
inline DensityMatrix make_w(int n) { return pure_state(w_vector(n), qubits(n)); }
inline DensityMatrix make_dicke(int n, int excitations) {
  return pure_state(dicke_vector(n, excitations), qubits(n));
}

// 3x3-qutrit bound entangled family; local_dims = [3,3].
inline DensityMatrix make_horodecki(double a) {
  if (!(a > 0.0 && a < 1.0))
    throw std::domain_error("Horodecki parameter must satisfy 0 < a < 1");
  Mat m = Mat::Zero(9, 9);
  const double s = 1.0 / (8.0 * a + 1.0);
  const double b = (1.0 + a) / 2.0;
  const double c = std::sqrt(1.0 - a * a) / 2.0;
  for (int i : {0, 1, 2, 3, 4, 5, 7}) m(i, i) = a;
  m(6, 6) = b;
  m(8, 8) = b;
  m(0, 4) = m(4, 0) = a;
  m(0, 8) = m(8, 0) = a;
  m(4, 8) = m(8, 4) = a;
  m(6, 8) = m(8, 6) = c;
  m *= s;
  return DensityMatrix(std::move(m), HilbertStructure({3, 3}));
}

struct StateSpec {
  enum class Kind { Bell, GHZ, W, Dicke, Horodecki } kind = Kind::Bell;
  int n = 2;
  int excitations = -1;  // Dicke only; -1 means floor(n/2)
  double a = 0.5;        // Horodecki only
};

inline DensityMatrix make_named_state(const StateSpec& spec) {
  switch (spec.kind) {
    case StateSpec::Kind::Bell:
      return make_bell();
    case StateSpec::Kind::GHZ:
      return make_ghz(spec.n);
    case StateSpec::Kind::W:
      return make_w(spec.n);
    case StateSpec::Kind::Dicke:
      return make_dicke(spec.n, spec.excitations < 0 ? spec.n / 2 : spec.excitations);
    case StateSpec::Kind::Horodecki:
      return make_horodecki(spec.a);
  }
  throw std::domain_error("unknown state kind");
}

// The pure reference vector of a named state, when one exists (Horodecki is
// mixed).  Used for fidelity reporting in sweeps.
inline std::optional<Vec> named_state_vector(const StateSpec& spec) {
  switch (spec.kind) {
    case StateSpec::Kind::Bell:
      return bell_vector();
    case StateSpec::Kind::GHZ:
      return ghz_vector(spec.n);
    case StateSpec::Kind::W:
      return w_vector(spec.n);
    case StateSpec::Kind::Dicke:
      return dicke_vector(spec.n, spec.excitations < 0 ? spec.n / 2 : spec.excitations);
    case StateSpec::Kind::Horodecki:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Noise

// rho(p) = (1-p) rho + p I/d
inline DensityMatrix mix_white_noise(const DensityMatrix& rho, double p) {
  if (p < 0.0 || p > 1.0) throw std::domain_error("white noise strength not in [0,1]");
  Mat m = (1.0 - p) * rho.mat() + p * maximally_mixed(rho.dim());
  return DensityMatrix(std::move(m), rho.structure());
}

class NoiseChannel {
 public:
  enum class Kind { GlobalDepolarizing, BitFlip, PhaseFlip, AmplitudeDamping, PhaseDamping };

  Kind kind() const { return kind_; }
  const std::vector<int>& acting_parties() const { return parties_; }

  // Single-qubit channels; `party` is the qubit the Kraus set acts on.
  static NoiseChannel bit_flip(int party) { return {Kind::BitFlip, {party}}; }
  static NoiseChannel phase_flip(int party) { return {Kind::PhaseFlip, {party}}; }
  static NoiseChannel amplitude_damping(int party) {
    return {Kind::AmplitudeDamping, {party}};
  }
  static NoiseChannel phase_damping(int party) { return {Kind::PhaseDamping, {party}}; }

  // Balanced local depolarizing applied to every listed party; for two
  // qubits this expands to the four-term composition
  //   (1-p)^2 rho + p(1-p) [tr_A(rho) terms] + p^2 I/4.
  static NoiseChannel global_depolarizing(std::vector<int> parties) {
    return {Kind::GlobalDepolarizing, std::move(parties)};
  }

  // Kraus operators on the local (single-qubit) space for strength p.
  // GlobalDepolarizing is composed from partial traces instead and has no
  // finite Kraus list here.
  std::vector<Mat> local_kraus(double p) const {
    if (p < 0.0 || p > 1.0) throw std::domain_error("channel strength not in [0,1]");
    Mat id = Mat::Identity(2, 2);
    Mat x = Mat::Zero(2, 2), z = Mat::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    switch (kind_) {
      case Kind::BitFlip:
        return {std::sqrt(1.0 - p) * id, std::sqrt(p) * x};
      case Kind::PhaseFlip:
        return {std::sqrt(1.0 - p) * id, std::sqrt(p) * z};
      case Kind::AmplitudeDamping: {
        Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
        k0(0, 0) = 1.0;
        k0(1, 1) = std::sqrt(1.0 - p);
        k1(0, 1) = std::sqrt(p);
        return {k0, k1};
      }
      case Kind::PhaseDamping: {
        Mat k0 = Mat::Zero(2, 2), k1 = Mat::Zero(2, 2);
        k0(0, 0) = 1.0;
        k0(1, 1) = std::sqrt(1.0 - p);
        k1(1, 1) = std::sqrt(p);
        return {k0, k1};
      }
      case Kind::GlobalDepolarizing:
        throw structural_error("GlobalDepolarizing has no local Kraus list");
    }
    throw std::domain_error("unknown channel kind");
  }

  static const char* name(Kind k) {
    switch (k) {
      case Kind::GlobalDepolarizing: return "gd";
      case Kind::BitFlip: return "bf";
      case Kind::PhaseFlip: return "pf";
      case Kind::AmplitudeDamping: return "ad";
      case Kind::PhaseDamping: return "pd";
    }
    return "?";
  }

 private:
  NoiseChannel(Kind k, std::vector<int> parties) : kind_(k), parties_(std::move(parties)) {
    if (parties_.empty()) throw structural_error("channel needs at least one party");
  }
  Kind kind_;
  std::vector<int> parties_;
};

namespace detail {

// Partial trace on a raw matrix; `keep` lists the parties to retain.
inline Mat partial_trace_mat(const Mat& m, const HilbertStructure& hs,
                             const std::vector<int>& keep) {
  auto maps = hs.split(keep);
  Mat out = Mat::Zero(maps.sub_dim, maps.sub_dim);
  const int d = hs.total_dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (maps.rest[i] == maps.rest[j]) out(maps.sub[i], maps.sub[j]) += m(i, j);
  return out;
}

// One-party depolarizing: rho -> (1-p) rho + p (I_party/d_party  ox  tr_party rho).
inline Mat depolarize_party(const Mat& m, const HilbertStructure& hs, int party, double p) {
  std::vector<int> keep;
  for (int q = 0; q < hs.num_parties(); ++q)
    if (q != party) keep.push_back(q);
  Mat reduced = partial_trace_mat(m, hs, keep);  // on the complement of `party`
  auto maps = hs.split({party});
  const int d = hs.total_dim();
  Mat mixed = Mat::Zero(d, d);
  const double inv = 1.0 / hs.local_dim(party);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (maps.sub[i] == maps.sub[j]) mixed(i, j) = inv * reduced(maps.rest[i], maps.rest[j]);
  return (1.0 - p) * m + p * mixed;
}

inline Mat apply_channel_mat(const Mat& m, const HilbertStructure& hs,
                             const NoiseChannel& ch, double p) {
  if (p < 0.0 || p > 1.0) throw std::domain_error("channel strength not in [0,1]");
  for (int q : ch.acting_parties())
    if (q < 0 || q >= hs.num_parties())
      throw structural_error("channel acting party out of range");
  if (ch.kind() == NoiseChannel::Kind::GlobalDepolarizing) {
    Mat out = m;
    for (int q : ch.acting_parties()) out = depolarize_party(out, hs, q, p);
    return out;
  }
  if (ch.acting_parties().size() != 1)
    throw structural_error("Kraus channels here act on a single party");
  const int party = ch.acting_parties()[0];
  if (hs.local_dim(party) != 2)
    throw structural_error("Kraus channels defined for qubit parties only");
  Mat out = Mat::Zero(hs.total_dim(), hs.total_dim());
  for (const Mat& k : ch.local_kraus(p)) {
    Mat kf = embed_operator(k, hs, {party});
    out += kf * m * kf.adjoint();
  }
  return out;
}

}  // namespace detail

inline DensityMatrix apply_channel(const DensityMatrix& rho, const NoiseChannel& ch,
                                   double p) {
  Mat out = detail::apply_channel_mat(rho.mat(), rho.structure(), ch, p);
  return DensityMatrix(std::move(out), rho.structure());
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  if (keep.empty()) throw std::domain_error("partial_trace: keep set is empty");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  Mat out = detail::partial_trace_mat(rho.mat(), rho.structure(), sorted);
  std::vector<int> dims;
  for (int p : sorted) dims.push_back(rho.structure().local_dim(p));
  return DensityMatrix(std::move(out), HilbertStructure(std::move(dims)));
}

// <target| rho |target>
inline double fidelity_with_pure(const DensityMatrix& rho, const Vec& target) {
  if (target.size() != rho.dim())
    throw structural_error("fidelity_with_pure: dimension mismatch");
  Complex v = target.adjoint() * rho.mat() * target;
  return v.real();
}

}  // namespace entcert
