#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "riocpd/spd.hpp"

namespace riocpd {

/// An m-dimensional observation stream, rows = time steps.
class SeriesFrame {
public:
  explicit SeriesFrame(Matrix values, std::vector<double> timestamps = {})
      : values_(std::move(values)), timestamps_(std::move(timestamps)) {
    if (values_.rows() < 1) throw ContractError("SeriesFrame: need at least one observation");
    if (values_.cols() < 2) throw ContractError("SeriesFrame: need at least two series");
    if (!values_.allFinite()) throw NumericError("SeriesFrame: non-finite values");
    if (!timestamps_.empty()) {
      if (static_cast<Eigen::Index>(timestamps_.size()) != values_.rows())
        throw ContractError("SeriesFrame: timestamp count does not match length");
      for (std::size_t i = 1; i < timestamps_.size(); ++i)
        if (timestamps_[i] <= timestamps_[i - 1])
          throw ContractError("SeriesFrame: timestamps must be strictly increasing");
    }
  }

  Index length() const { return static_cast<Index>(values_.rows()); }
  Eigen::Index dims() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  const std::vector<double>& timestamps() const { return timestamps_; }

private:
  Matrix values_; // length x dims
  std::vector<double> timestamps_;
};

/// One sliding window: `block` holds the series as rows, W samples as columns.
struct WindowedSeries {
  Index start = 0;
  Matrix block; // m x W

  WindowedSeries(Index start_index, Matrix window_block)
      : start(start_index), block(std::move(window_block)) {
    if (block.cols() < 2)
      throw ContractError("WindowedSeries: width must be >= 2");
  }

  Eigen::Index dims() const { return block.rows(); }
  Eigen::Index width() const { return block.cols(); }
};

/// Copy the window [start, start + width) out of a frame.
inline WindowedSeries window_at(const SeriesFrame& frame, Index start, Eigen::Index width) {
  if (start < 0 || width < 2 || start + width > frame.length())
    throw ContractError("window_at: window out of range");
  return WindowedSeries(start, frame.values().middleRows(start, width).transpose());
}

struct NormalizedWindow {
  Matrix values;                // m x W, rows centered and scaled
  std::vector<char> degenerate; // per-row flag: sample std was (numerically) zero
};

/// Center each row and divide by its sample standard deviation (W-1
/// denominator). Rows whose residuals vanish relative to their scale carry no
/// correlation signal; they come back as all-zero and flagged.
inline NormalizedWindow normalize_window(const WindowedSeries& w) {
  const Eigen::Index m = w.dims();
  const Eigen::Index width = w.width();
  NormalizedWindow out;
  out.values.resize(m, width);
  out.degenerate.assign(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double mean = w.block.row(i).mean();
    Eigen::RowVectorXd centered = w.block.row(i).array() - mean;
    const double scale = std::max(1.0, std::abs(mean));
    if (centered.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
      out.values.row(i).setZero();
      out.degenerate[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    const double std_dev = std::sqrt(centered.squaredNorm() / static_cast<double>(width - 1));
    out.values.row(i) = centered / std_dev;
  }
  return out;
}

/// Pearson correlation matrix of one window, before any regularization.
/// Degenerate rows get self-correlation 1 and zero elsewhere.
inline Matrix raw_correlation(const WindowedSeries& w) {
  NormalizedWindow norm = normalize_window(w);
  const Eigen::Index m = w.dims();
  Matrix b = (norm.values * norm.values.transpose()) / static_cast<double>(w.width() - 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!norm.degenerate[static_cast<std::size_t>(i)]) continue;
    b.row(i).setZero();
    b.col(i).setZero();
    b(i, i) = 1.0;
  }
  b = ((b + b.transpose()) * 0.5).eval();
  return b;
}

/// SPD correlation matrix of one window. `jitter_applied` records the ridge
/// that was actually added to the diagonal.
class CorrelationMatrix {
public:
  CorrelationMatrix(SpdMatrix underlying, double jitter_applied)
      : spd_(std::move(underlying)), jitter_applied_(jitter_applied) {
    if (jitter_applied_ < 0.0)
      throw ContractError("CorrelationMatrix: jitter must be non-negative");
    const Matrix& b = spd_.entries();
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      if (b(i, i) < 1.0 - 1e-12 || b(i, i) > 1.0 + jitter_applied_ + 1e-12)
        throw ContractError("CorrelationMatrix: diagonal outside [1, 1 + jitter]");
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        if (i == j) continue;
        if (std::abs(b(i, j)) > 1.0 + 1e-9)
          throw ContractError("CorrelationMatrix: off-diagonal outside [-1, 1]");
      }
    }
  }

  Eigen::Index dim() const { return spd_.dim(); }
  const SpdMatrix& spd() const { return spd_; }
  double jitter_applied() const { return jitter_applied_; }

private:
  SpdMatrix spd_;
  double jitter_applied_;
};

/// Build the SPD correlation matrix for a window, escalating the diagonal
/// jitter by 10x up to three times if factorization keeps failing.
inline CorrelationMatrix correlation_matrix(const WindowedSeries& w, double jitter = 1e-6) {
  if (jitter < 0.0) throw ContractError("correlation_matrix: jitter must be non-negative");
  const Matrix base = raw_correlation(w);
  double applied = jitter;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Matrix candidate = base;
    candidate.diagonal().array() += applied;
    try {
      return CorrelationMatrix(SpdMatrix(candidate), applied);
    } catch (const NumericError&) {
      applied *= 10.0;
    }
  }
  throw DegenerateWindowError(
      "correlation_matrix: window " + std::to_string(w.start) +
          " is not positive definite after jitter escalation",
      w.start);
}

} // namespace riocpd
