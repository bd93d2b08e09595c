#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "riocpd/errors.hpp"

namespace riocpd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Riemannian metric on the SPD manifold.
enum class MetricKind { LogEuclidean, LogCholesky };

inline const char* metric_name(MetricKind m) {
  return m == MetricKind::LogEuclidean ? "log-euclidean" : "log-cholesky";
}

inline bool is_symmetric(const Matrix& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

/// Symmetric matrix with strictly positive eigenvalues. Validated at
/// construction: symmetry within 1e-12 and a successful Cholesky
/// factorization, whose lower factor is kept (it is what the Log-Cholesky
/// metric works on).
class SpdMatrix {
public:
  explicit SpdMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
      throw ContractError("SpdMatrix: entries must be square and non-empty");
    if (!entries_.allFinite())
      throw NumericError("SpdMatrix: non-finite entries");
    if (!is_symmetric(entries_))
      throw ContractError("SpdMatrix: entries not symmetric within 1e-12");
    Eigen::LLT<Matrix> llt(entries_);
    if (llt.info() != Eigen::Success)
      throw NumericError("SpdMatrix: matrix is not positive definite");
    chol_lower_ = llt.matrixL();
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

  /// Lower-triangular Cholesky factor L with L * L^T == entries() and a
  /// strictly positive diagonal.
  const Matrix& cholesky_lower() const { return chol_lower_; }

private:
  Matrix entries_;
  Matrix chol_lower_;
};

/// Element of the tangent space of SPD matrices under the Log-Euclidean
/// metric: a plain symmetric matrix.
class SymmetricTangent {
public:
  explicit SymmetricTangent(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
      throw ContractError("SymmetricTangent: entries must be square and non-empty");
    if (!entries_.allFinite())
      throw NumericError("SymmetricTangent: non-finite entries");
    if (!is_symmetric(entries_))
      throw ContractError("SymmetricTangent: entries not symmetric within 1e-12");
  }

  static SymmetricTangent zero(Eigen::Index dim) {
    return SymmetricTangent(Matrix::Zero(dim, dim));
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

  /// Frobenius norm.
  double norm() const { return entries_.norm(); }

  SymmetricTangent& operator+=(const SymmetricTangent& other) {
    entries_ += other.entries_;
    return *this;
  }
  SymmetricTangent& operator-=(const SymmetricTangent& other) {
    entries_ -= other.entries_;
    return *this;
  }
  SymmetricTangent& operator*=(double s) {
    entries_ *= s;
    return *this;
  }

private:
  Matrix entries_;
};

inline SymmetricTangent operator+(SymmetricTangent a, const SymmetricTangent& b) { return a += b; }
inline SymmetricTangent operator-(SymmetricTangent a, const SymmetricTangent& b) { return a -= b; }
inline SymmetricTangent operator*(SymmetricTangent a, double s) { return a *= s; }

/// Image of an SPD matrix under the Log-Cholesky map: the strictly lower
/// triangle of the Cholesky factor plus the log of its diagonal. The strict
/// lower block keeps exact zeros on and above the diagonal.
class CholeskyImage {
public:
  CholeskyImage(Matrix strict_lower, Vector log_diag)
      : strict_lower_(std::move(strict_lower)), log_diag_(std::move(log_diag)) {
    const Eigen::Index n = strict_lower_.rows();
    if (strict_lower_.cols() != n || n < 1 || log_diag_.size() != n)
      throw ContractError("CholeskyImage: inconsistent dimensions");
    if (!strict_lower_.allFinite() || !log_diag_.allFinite())
      throw NumericError("CholeskyImage: non-finite entries");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        if (strict_lower_(i, j) != 0.0)
          throw ContractError("CholeskyImage: diagonal/upper triangle must be exactly zero");
  }

  static CholeskyImage zero(Eigen::Index dim) {
    return CholeskyImage(Matrix::Zero(dim, dim), Vector::Zero(dim));
  }

  Eigen::Index dim() const { return strict_lower_.rows(); }
  const Matrix& strict_lower() const { return strict_lower_; }
  const Vector& log_diag() const { return log_diag_; }

  double norm() const {
    return std::sqrt(strict_lower_.squaredNorm() + log_diag_.squaredNorm());
  }

  CholeskyImage& operator+=(const CholeskyImage& other) {
    strict_lower_ += other.strict_lower_;
    log_diag_ += other.log_diag_;
    return *this;
  }
  CholeskyImage& operator-=(const CholeskyImage& other) {
    strict_lower_ -= other.strict_lower_;
    log_diag_ -= other.log_diag_;
    return *this;
  }
  CholeskyImage& operator*=(double s) {
    strict_lower_ *= s;
    log_diag_ *= s;
    return *this;
  }

private:
  Matrix strict_lower_;
  Vector log_diag_;
};

inline CholeskyImage operator+(CholeskyImage a, const CholeskyImage& b) { return a += b; }
inline CholeskyImage operator-(CholeskyImage a, const CholeskyImage& b) { return a -= b; }
inline CholeskyImage operator*(CholeskyImage a, double s) { return a *= s; }

} // namespace riocpd
