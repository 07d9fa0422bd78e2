#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace entcert {

using Real = double;
using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealMat = Eigen::MatrixXd;
using RealVec = Eigen::VectorXd;

// Tolerances used by the type invariants (see DensityMatrix and friends).
namespace tol {
inline constexpr double hermiticity = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double psd_floor = -1e-10;
inline constexpr double unit_norm = 1e-12;
inline constexpr double weight_floor = -1e-12;
inline constexpr double weight_sum = 1e-10;
}  // namespace tol

// Mismatched dimensions, incompatible structures, malformed inputs.
struct structural_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A size/cardinality guard tripped (e.g. a net would exceed its cap).
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Real Hilbert-Schmidt inner product Re tr(A^dag B).
inline double hs_inner(const Mat& a, const Mat& b) {
  return a.conjugate().cwiseProduct(b).sum().real();
}

inline double hs_norm(const Mat& a) { return a.norm(); }

// Max absolute deviation from Hermiticity.
inline double hermiticity_defect(const Mat& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Mat& a, double tolerance = 1e-9,
                              const char* what = "matrix") {
  if (a.rows() != a.cols())
    throw structural_error(std::string(what) + " is not square");
  if (hermiticity_defect(a) > tolerance)
    throw structural_error(std::string(what) + " is not Hermitian");
}

}  // namespace entcert
