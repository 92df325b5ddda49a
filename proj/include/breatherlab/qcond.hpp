#pragma once

// Finite-dimensional bipartite states and the conditional density matrix
//
//     rho_{1/2} = Tr_2[(1 x P2) rho (1 x P2)] / Tr[(1 x P2) rho],
//
// the state of subsystem 1 given that the proposition encoded by the
// projector P2 holds on subsystem 2.  Basis ordering: |i>|j> -> i * d2 + j.
//
// The sandwiched form is always a valid state.  The one-sided form
// Tr_2[(1 x P2) rho] / Tr[(1 x P2) rho] is available as
// conditional_density_raw; it agrees with the sandwich whenever P2 commutes
// with the conditional structure of rho, e.g. for product states and for
// P2 diagonal in a basis in which rho is block-diagonal.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "breatherlab/error.hpp"

namespace breatherlab::qcond {

using Matrix = Eigen::MatrixXcd;

inline constexpr double kStateTol = 1e-12;
inline constexpr double kProbabilityFloor = 1e-14;
inline constexpr int kMaxDim = 64;

struct BipartiteDims {
  int d1 = 1;
  int d2 = 1;

  BipartiteDims() = default;
  BipartiteDims(int a, int b) : d1(a), d2(b) {
    if (d1 < 1 || d2 < 1) throw DomainError("BipartiteDims: dimensions must be >= 1");
    if (d1 * d2 > kMaxDim) throw DomainError("BipartiteDims: total dimension exceeds 64");
  }
  int total() const { return d1 * d2; }
};

struct ValidationReport {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;        // |Tr rho - 1|
  bool hermitian = false;
  bool positive = false;
  bool unit_trace = false;

  bool valid() const { return hermitian && positive && unit_trace; }
};

inline ValidationReport validate(const Matrix& rho, double tol = kStateTol) {
  ValidationReport r;
  if (rho.rows() != rho.cols() || rho.rows() == 0) return r;
  r.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  r.hermitian = r.hermiticity_error <= tol;
  const Matrix herm = 0.5 * (rho + rho.adjoint());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(herm, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = eig.eigenvalues().minCoeff();
  r.positive = r.min_eigenvalue >= -tol;
  r.trace_error = std::abs(rho.trace() - std::complex<double>(1.0, 0.0));
  r.unit_trace = r.trace_error <= tol;
  return r;
}

inline bool is_projector(const Matrix& p, double tol = kStateTol) {
  if (p.rows() != p.cols() || p.rows() == 0) return false;
  if ((p - p.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  return (p * p - p).cwiseAbs().maxCoeff() <= tol;
}

class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols())
      throw DimensionMismatchError("DensityMatrix: matrix must be square");
    if (rho_.rows() < 1 || rho_.rows() > kMaxDim)
      throw DomainError("DensityMatrix: dimension must lie in [1, 64]");
    const auto report = validate(rho_);
    if (!report.valid())
      throw DomainError("DensityMatrix: not a valid state (hermiticity error " +
                        std::to_string(report.hermiticity_error) + ", min eigenvalue " +
                        std::to_string(report.min_eigenvalue) + ", trace error " +
                        std::to_string(report.trace_error) + ")");
  }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const Eigen::VectorXcd& psi) {
    const double n2 = psi.squaredNorm();
    if (!(n2 > 0.0)) throw DomainError("DensityMatrix::pure: zero vector");
    return DensityMatrix(psi * psi.adjoint() / n2);
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Matrix& matrix() const { return rho_; }

 private:
  Matrix rho_;
};

class Projector {
 public:
  explicit Projector(Matrix p) : p_(std::move(p)) {
    if (p_.rows() != p_.cols()) throw DimensionMismatchError("Projector: matrix must be square");
    if (!is_projector(p_)) throw DomainError("Projector: matrix is not a Hermitian idempotent");
  }

  /// Rank-1 projector onto span{psi}.
  static Projector onto(const Eigen::VectorXcd& psi) {
    const double n2 = psi.squaredNorm();
    if (!(n2 > 0.0)) throw DomainError("Projector::onto: zero vector");
    return Projector(psi * psi.adjoint() / n2);
  }

  int dim() const { return static_cast<int>(p_.rows()); }
  const Matrix& matrix() const { return p_; }

 private:
  Matrix p_;
};

enum class Keep { first, second };

inline void check_dims(int dim, const BipartiteDims& dims, const char* what) {
  if (dim != dims.total())
    throw DimensionMismatchError(std::string(what) + ": operator dimension " + std::to_string(dim) +
                                 " != d1 * d2 = " + std::to_string(dims.total()));
}

/// Partial trace of an arbitrary operator on the product space.
inline Matrix partial_trace(const Matrix& op, const BipartiteDims& dims, Keep keep) {
  check_dims(static_cast<int>(op.rows()), dims, "partial_trace");
  const int d1 = dims.d1, d2 = dims.d2;
  if (keep == Keep::first) {
    Matrix out = Matrix::Zero(d1, d1);
    for (int i = 0; i < d1; ++i)
      for (int k = 0; k < d1; ++k)
        for (int j = 0; j < d2; ++j) out(i, k) += op(i * d2 + j, k * d2 + j);
    return out;
  }
  Matrix out = Matrix::Zero(d2, d2);
  for (int j = 0; j < d2; ++j)
    for (int l = 0; l < d2; ++l)
      for (int i = 0; i < d1; ++i) out(j, l) += op(i * d2 + j, i * d2 + l);
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const BipartiteDims& dims,
                                   Keep keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

/// A (x) B.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix lift_second(const Projector& p2, const BipartiteDims& dims) {
  if (p2.dim() != dims.d2)
    throw DimensionMismatchError("projector dimension " + std::to_string(p2.dim()) +
                                 " != d2 = " + std::to_string(dims.d2));
  return kron(Matrix::Identity(dims.d1, dims.d1), p2.matrix());
}

/// Tr[(1 x P2) rho]: probability that the condition holds.
inline double condition_probability(const DensityMatrix& rho, const Projector& p2,
                                    const BipartiteDims& dims) {
  check_dims(rho.dim(), dims, "condition_probability");
  return (lift_second(p2, dims) * rho.matrix()).trace().real();
}

struct ConditionalState {
  DensityMatrix state;
  double probability;
};

inline ConditionalState condition(const DensityMatrix& rho, const Projector& p2,
                                  const BipartiteDims& dims) {
  check_dims(rho.dim(), dims, "conditional_density");
  const Matrix lifted = lift_second(p2, dims);
  const Matrix sandwich = lifted * rho.matrix() * lifted;
  const double prob = sandwich.trace().real();
  if (prob < kProbabilityFloor)
    throw ZeroProbabilityError("conditional_density: condition has probability " +
                               std::to_string(prob));
  // The reduced sandwich is Hermitian in exact arithmetic; symmetrize so that
  // round-off is not amplified by 1 / prob.
  const Matrix reduced = partial_trace(sandwich, dims, Keep::first);
  return {DensityMatrix(0.5 * (reduced + reduced.adjoint()) / prob), prob};
}

inline DensityMatrix conditional_density(const DensityMatrix& rho, const Projector& p2,
                                         const BipartiteDims& dims) {
  return condition(rho, p2, dims).state;
}

/// Tr_2[(1 x P2) rho] / Tr[(1 x P2) rho]; not guaranteed Hermitian.
inline Matrix conditional_density_raw(const DensityMatrix& rho, const Projector& p2,
                                      const BipartiteDims& dims) {
  check_dims(rho.dim(), dims, "conditional_density_raw");
  const Matrix prod = lift_second(p2, dims) * rho.matrix();
  const double prob = prod.trace().real();
  if (prob < kProbabilityFloor)
    throw ZeroProbabilityError("conditional_density_raw: condition has probability " +
                               std::to_string(prob));
  return partial_trace(prod, dims, Keep::first) / prob;
}

struct ConditionalExpectation {
  double value = 0.0;           // Tr[(f x P2) rho]
  double identity_value = 0.0;  // Tr_1[f Tr_2((1 x P2) rho)]
};

/// <F> for F = f (x) P2.  Both evaluation routes are returned; they agree to
/// round-off.
inline ConditionalExpectation conditional_expectation(const DensityMatrix& rho, const Matrix& f,
                                                      const Projector& p2,
                                                      const BipartiteDims& dims) {
  check_dims(rho.dim(), dims, "conditional_expectation");
  if (f.rows() != dims.d1 || f.cols() != dims.d1)
    throw DimensionMismatchError("conditional_expectation: observable must be d1 x d1");
  if ((f - f.adjoint()).cwiseAbs().maxCoeff() > kStateTol)
    throw DomainError("conditional_expectation: observable is not Hermitian");
  ConditionalExpectation out;
  out.value = (kron(f, p2.matrix()) * rho.matrix()).trace().real();
  const Matrix reduced = partial_trace(lift_second(p2, dims) * rho.matrix(), dims, Keep::first);
  out.identity_value = (f * reduced).trace().real();
  return out;
}

// JSON: {"dim": d, "re": [[...]], "im": [[...]]}
inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols())), c(r.size());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r[static_cast<std::size_t>(j)] = m(i, j).real();
      c[static_cast<std::size_t>(j)] = m(i, j).imag();
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"dim", m.rows()}, {"re", re}, {"im", im}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  if (dim < 1 || dim > kMaxDim) throw DomainError("matrix JSON: dim must lie in [1, 64]");
  const auto re = j.at("re").get<std::vector<std::vector<double>>>();
  const auto im = j.contains("im") ? j.at("im").get<std::vector<std::vector<double>>>()
                                   : std::vector<std::vector<double>>(
                                         static_cast<std::size_t>(dim),
                                         std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  if (re.size() != static_cast<std::size_t>(dim) || im.size() != re.size())
    throw DimensionMismatchError("matrix JSON: row count != dim");
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (re[u].size() != static_cast<std::size_t>(dim) || im[u].size() != re[u].size())
      throw DimensionMismatchError("matrix JSON: column count != dim");
    for (int k = 0; k < dim; ++k)
      m(i, k) = {re[u][static_cast<std::size_t>(k)], im[u][static_cast<std::size_t>(k)]};
  }
  return m;
}

}  // namespace breatherlab::qcond
