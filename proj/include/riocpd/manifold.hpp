#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <span>

#include "riocpd/spd.hpp"

namespace riocpd {

namespace detail {

/// Relative eigenvalue floor below which a matrix counts as numerically
/// singular for log maps. Regularization is the caller's job (correlation
/// module); the geometry refuses to clamp.
inline constexpr double kEigenvalueFloor = 1e-12;

inline Eigen::SelfAdjointEigenSolver<Matrix> symmetric_eigen(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericError("symmetric eigendecomposition failed to converge");
  return solver;
}

} // namespace detail

/// Log-Euclidean log map: U ln(S) U^T for the eigendecomposition P = U S U^T.
/// Refuses matrices whose smallest eigenvalue falls below 1e-12 times the
/// largest instead of clamping.
inline SymmetricTangent matrix_log_le(const SpdMatrix& p) {
  auto eig = detail::symmetric_eigen(p.entries());
  const Vector& lambda = eig.eigenvalues();
  const double largest = lambda(lambda.size() - 1);
  if (lambda(0) <= detail::kEigenvalueFloor * largest)
    throw NumericError("matrix_log_le: eigenvalue below conditioning floor");
  Vector log_lambda = lambda.array().log();
  Matrix result = eig.eigenvectors() * log_lambda.asDiagonal() * eig.eigenvectors().transpose();
  return SymmetricTangent(std::move(result));
}

/// Matrix exponential of a symmetric matrix, evaluated by exponentiating the
/// eigenvalues. Always lands back on the SPD manifold.
inline SpdMatrix matrix_exp(const SymmetricTangent& s) {
  auto eig = detail::symmetric_eigen(s.entries());
  Vector exp_lambda = eig.eigenvalues().array().exp();
  Matrix result = eig.eigenvectors() * exp_lambda.asDiagonal() * eig.eigenvectors().transpose();
  // The product can stray from exact symmetry by a few ulps; the SpdMatrix
  // invariant is 1e-12, so fold it back before validating.
  result = ((result + result.transpose()) * 0.5).eval();
  return SpdMatrix(std::move(result));
}

/// Unique lower-triangular Cholesky factor with positive diagonal.
inline Matrix cholesky_factor(const SpdMatrix& p) { return p.cholesky_lower(); }

/// Log-Cholesky log map: strict lower triangle of L plus ln of its diagonal.
inline CholeskyImage log_cholesky_map(const SpdMatrix& p) {
  const Matrix& l = p.cholesky_lower();
  const Eigen::Index n = l.rows();
  Matrix strict = Matrix::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) strict(i, j) = l(i, j);
  Vector log_diag = l.diagonal().array().log();
  return CholeskyImage(std::move(strict), std::move(log_diag));
}

/// Rebuild the SPD matrix a CholeskyImage came from.
inline SpdMatrix recompose(const CholeskyImage& img) {
  Matrix l = img.strict_lower();
  l.diagonal() = img.log_diag().array().exp();
  Matrix p = l * l.transpose();
  p = ((p + p.transpose()) * 0.5).eval();
  return SpdMatrix(std::move(p));
}

/// Geodesic distance between two SPD matrices under the chosen metric.
inline double dist(MetricKind metric, const SpdMatrix& p1, const SpdMatrix& p2) {
  if (p1.dim() != p2.dim())
    throw ContractError("dist: dimension mismatch");
  if (metric == MetricKind::LogEuclidean)
    return (matrix_log_le(p1) - matrix_log_le(p2)).norm();
  return (log_cholesky_map(p1) - log_cholesky_map(p2)).norm();
}

/// Fréchet mean reconstructed from a running sum of Log-Euclidean images.
inline SpdMatrix mean_from_log_sum(const SymmetricTangent& log_sum, long n) {
  if (n < 1) throw ContractError("mean_from_log_sum: n must be >= 1");
  return matrix_exp(log_sum * (1.0 / static_cast<double>(n)));
}

/// Fréchet mean reconstructed from a running sum of Log-Cholesky images:
/// averages strict lower parts directly and the diagonal in log space.
inline SpdMatrix mean_from_log_sum(const CholeskyImage& log_sum, long n) {
  if (n < 1) throw ContractError("mean_from_log_sum: n must be >= 1");
  return recompose(log_sum * (1.0 / static_cast<double>(n)));
}

/// Closed-form Fréchet mean of a non-empty set of SPD matrices.
inline SpdMatrix frechet_mean(MetricKind metric, std::span<const SpdMatrix> ps) {
  if (ps.empty()) throw ContractError("frechet_mean: empty input");
  const Eigen::Index dim = ps.front().dim();
  for (const auto& p : ps)
    if (p.dim() != dim) throw ContractError("frechet_mean: dimension mismatch");
  if (metric == MetricKind::LogEuclidean) {
    SymmetricTangent sum = SymmetricTangent::zero(dim);
    for (const auto& p : ps) sum += matrix_log_le(p);
    return mean_from_log_sum(sum, static_cast<long>(ps.size()));
  }
  CholeskyImage sum = CholeskyImage::zero(dim);
  for (const auto& p : ps) sum += log_cholesky_map(p);
  return mean_from_log_sum(sum, static_cast<long>(ps.size()));
}

// --- Flat coordinates -------------------------------------------------------
//
// Both metrics are pullbacks of a Euclidean metric through their log map, so
// every SPD matrix has a coordinate vector in which geodesic distance is the
// plain Euclidean distance and the Fréchet mean is the coordinate average.
// The online detector stores history in this form.

/// Dimension of the flat coordinate vector for an m-dimensional SPD matrix.
inline Eigen::Index coords_size(MetricKind metric, Eigen::Index m) {
  if (metric == MetricKind::LogEuclidean) return m * m;
  return m * (m - 1) / 2 + m;
}

inline Vector to_coords(const SymmetricTangent& s) {
  const Matrix& e = s.entries();
  return Eigen::Map<const Vector>(e.data(), e.size());
}

inline Vector to_coords(const CholeskyImage& img) {
  const Eigen::Index n = img.dim();
  Vector out(coords_size(MetricKind::LogCholesky, n));
  Eigen::Index k = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) out(k++) = img.strict_lower()(i, j);
  out.tail(n) = img.log_diag();
  return out;
}

/// Flat coordinates of an SPD matrix under the metric's log map. Euclidean
/// norms of coordinate differences equal geodesic distances.
inline Vector log_coords(MetricKind metric, const SpdMatrix& p) {
  if (metric == MetricKind::LogEuclidean) return to_coords(matrix_log_le(p));
  return to_coords(log_cholesky_map(p));
}

inline SymmetricTangent tangent_from_coords(const Vector& coords, Eigen::Index m) {
  if (coords.size() != m * m)
    throw ContractError("tangent_from_coords: size mismatch");
  Matrix e = Eigen::Map<const Matrix>(coords.data(), m, m);
  e = ((e + e.transpose()) * 0.5).eval();
  return SymmetricTangent(std::move(e));
}

inline CholeskyImage cholesky_image_from_coords(const Vector& coords, Eigen::Index m) {
  if (coords.size() != coords_size(MetricKind::LogCholesky, m))
    throw ContractError("cholesky_image_from_coords: size mismatch");
  Matrix strict = Matrix::Zero(m, m);
  Eigen::Index k = 0;
  for (Eigen::Index i = 1; i < m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) strict(i, j) = coords(k++);
  return CholeskyImage(std::move(strict), coords.tail(m));
}

/// Inverse of log_coords: map a flat coordinate vector back to its SPD matrix.
inline SpdMatrix spd_from_coords(MetricKind metric, const Vector& coords, Eigen::Index m) {
  if (metric == MetricKind::LogEuclidean)
    return matrix_exp(tangent_from_coords(coords, m));
  return recompose(cholesky_image_from_coords(coords, m));
}

} // namespace riocpd
