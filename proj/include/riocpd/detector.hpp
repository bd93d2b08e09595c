#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "riocpd/correlation.hpp"
#include "riocpd/manifold.hpp"

namespace riocpd {

/// CUSUM threshold calibrated online from warmup scores: mean + k * std.
struct AutoThreshold {
  double k = 3.0;
};

using Threshold = std::variant<double, AutoThreshold>;

struct DetectorConfig {
  int window = 5;
  int lag = 1;
  MetricKind metric = MetricKind::LogCholesky;
  Threshold threshold = AutoThreshold{};
  double jitter = 1e-6;
  int min_history = 2;
  std::optional<long> max_history;

  void validate() const {
    if (window < 2) throw ConfigError("DetectorConfig: window must be >= 2");
    if (lag < 1) throw ConfigError("DetectorConfig: lag must be >= 1");
    if (jitter < 0.0) throw ConfigError("DetectorConfig: jitter must be non-negative");
    if (min_history < 1) throw ConfigError("DetectorConfig: min_history must be >= 1");
    if (max_history && *max_history < 1)
      throw ConfigError("DetectorConfig: max_history must be >= 1");
    if (const double* rho = std::get_if<double>(&threshold); rho && *rho <= 0.0)
      throw ConfigError("DetectorConfig: threshold must be positive");
    if (const AutoThreshold* a = std::get_if<AutoThreshold>(&threshold); a && a->k <= 0.0)
      throw ConfigError("DetectorConfig: auto-threshold k must be positive");
  }

  /// Number of warmup scores collected before an auto threshold is fixed.
  long warmup_scores() const { return std::max<long>(10, 2L * window); }
};

/// A detected change point. `tau_hat` is the start index of the triggering
/// window, in raw time units; the window span is [tau_hat, tau_hat + W - 1].
struct ChangeEvent {
  Index tau_hat = 0;
  double cusum_value = 0.0;
  Index span_begin = 0;
  Index span_end = 0;
  double score = 0.0;
};

/// One scored window, for trace export: distance to the running Fréchet
/// mean, history radius, detection score, CUSUM value and the threshold in
/// effect (unset while an auto threshold is still calibrating).
struct TraceRow {
  Index t = 0;
  double distance = 0.0;
  double radius = 0.0;
  double score = 0.0;
  double cusum = 0.0;
  std::optional<double> threshold;
};

/// Recursive CUSUM update: max(y_prev + score, 0).
inline double cusum_update(double y_prev, double score) {
  return std::max(y_prev + score, 0.0);
}

/// Definition-form CUSUM: y(t) = max over i <= t of the partial sum
/// D(i) + ... + D(t), clamped at zero. Quadratic-time reference used as the
/// oracle for the recursive form.
inline std::vector<double> brute_force_cusum(std::span<const double> scores) {
  std::vector<double> y(scores.size(), 0.0);
  std::vector<double> partial; // partial[i] = D(i) + ... + D(t), left to right
  partial.reserve(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) {
    for (double& s : partial) s += scores[t];
    partial.push_back(scores[t]);
    double best = partial[0];
    for (double s : partial) best = std::max(best, s);
    y[t] = std::max(best, 0.0);
  }
  return y;
}

/// Threshold from assumed-stationary warmup scores: mean + k * sample std,
/// floored at 1e-6. Needs at least five scores.
inline double auto_threshold(std::span<const double> warmup_scores, double k) {
  if (warmup_scores.size() < 5)
    throw ConfigError("auto_threshold: need at least 5 warmup scores; set an explicit threshold");
  if (k < 0.0) throw ConfigError("auto_threshold: k must be non-negative");
  const double n = static_cast<double>(warmup_scores.size());
  double mean = 0.0;
  for (double s : warmup_scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : warmup_scores) var += (s - mean) * (s - mean);
  var /= (n - 1.0);
  return std::max(mean + k * std::sqrt(var), 1e-6);
}

/// Online change point detector over a stream of correlation matrices.
///
/// History since the last restart is kept as flat log-map coordinates, in
/// which both supported metrics are Euclidean: the Fréchet mean is the
/// coordinate average and geodesic distances are coordinate distances. Each
/// consumed matrix is scored against the mean and radius of the history
/// *before* it joins, then appended.
class Detector {
public:
  explicit Detector(DetectorConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    if (const double* rho = std::get_if<double>(&cfg_.threshold)) rho_ = *rho;
  }

  const DetectorConfig& config() const { return cfg_; }

  /// Consume the correlation matrix of the window starting at `raw_index`.
  std::optional<ChangeEvent> step(const CorrelationMatrix& b, Index raw_index) {
    return step(b.spd(), raw_index);
  }

  /// Core step on any SPD observation.
  std::optional<ChangeEvent> step(const SpdMatrix& b, Index raw_index) {
    if (dim_ == 0) dim_ = b.dim();
    if (b.dim() != dim_)
      throw ContractError("Detector::step: correlation matrix dimension changed mid-stream");
    Vector coords = log_coords(cfg_.metric, b);
    ++steps_since_restart_;

    if (history_size() < cfg_.min_history) {
      last_trace_.reset();
      append(std::move(coords));
      return std::nullopt;
    }

    const double n = static_cast<double>(history_size());
    Vector mean = log_sum_ / n;
    const double d = (coords - mean).norm();
    const double r = radius_to_coords(mean);
    const double score = d - r;
    y_ = cusum_update(y_, score);

    if (!rho_) {
      warmup_.push_back(score);
      if (static_cast<long>(warmup_.size()) >= cfg_.warmup_scores())
        rho_ = auto_threshold(warmup_, std::get<AutoThreshold>(cfg_.threshold).k);
    }

    last_trace_ = TraceRow{raw_index, d, r, score, y_, rho_};

    if (rho_ && y_ > *rho_) {
      ChangeEvent event{raw_index, y_, raw_index, raw_index + cfg_.window - 1, score};
      last_event_ = event;
      restart();
      return event;
    }
    append(std::move(coords));
    return std::nullopt;
  }

  /// Detection score of a candidate matrix against the current history;
  /// empty until min_history matrices have been consumed.
  std::optional<double> detection_score(const CorrelationMatrix& b) const {
    return detection_score(b.spd());
  }

  std::optional<double> detection_score(const SpdMatrix& b) const {
    if (history_size() < cfg_.min_history) return std::nullopt;
    if (dim_ != 0 && b.dim() != dim_)
      throw ContractError("Detector::detection_score: dimension mismatch");
    Vector coords = log_coords(cfg_.metric, b);
    Vector mean = log_sum_ / static_cast<double>(history_size());
    return (coords - mean).norm() - radius_to_coords(mean);
  }

  /// Max geodesic distance from the retained history to `mean`.
  double radius(const SpdMatrix& mean) const {
    if (images_.empty()) throw ContractError("Detector::radius: empty history");
    if (mean.dim() != dim_) throw ContractError("Detector::radius: dimension mismatch");
    return radius_to_coords(log_coords(cfg_.metric, mean));
  }

  /// Fréchet mean of the retained history, from the running log sum.
  SpdMatrix history_mean() const {
    if (images_.empty()) throw ContractError("Detector::history_mean: empty history");
    if (cfg_.metric == MetricKind::LogEuclidean)
      return mean_from_log_sum(tangent_from_coords(log_sum_, dim_),
                               static_cast<long>(history_size()));
    return mean_from_log_sum(cholesky_image_from_coords(log_sum_, dim_),
                             static_cast<long>(history_size()));
  }

  long history_size() const { return static_cast<long>(images_.size()); }
  double cusum() const { return y_; }
  long steps_since_restart() const { return steps_since_restart_; }
  const std::deque<Vector>& images() const { return images_; }
  const Vector& log_sum() const { return log_sum_; }
  std::optional<double> threshold_in_effect() const { return rho_; }
  const std::optional<ChangeEvent>& last_event() const { return last_event_; }

  /// Trace of the most recent step; empty if that step only accumulated
  /// history.
  const std::optional<TraceRow>& last_trace() const { return last_trace_; }

private:
  void append(Vector coords) {
    if (log_sum_.size() == 0) log_sum_ = Vector::Zero(coords.size());
    if (cfg_.max_history && history_size() >= *cfg_.max_history) {
      log_sum_ -= images_.front();
      images_.pop_front();
    }
    log_sum_ += coords;
    images_.push_back(std::move(coords));
  }

  void restart() {
    images_.clear();
    log_sum_.resize(0);
    y_ = 0.0;
    steps_since_restart_ = 0;
    warmup_.clear();
    if (std::holds_alternative<AutoThreshold>(cfg_.threshold)) rho_.reset();
  }

  double radius_to_coords(const Vector& mean_coords) const {
    double r = 0.0;
    for (const Vector& img : images_) r = std::max(r, (img - mean_coords).norm());
    return r;
  }

  DetectorConfig cfg_;
  Eigen::Index dim_ = 0;
  std::deque<Vector> images_;
  Vector log_sum_;
  double y_ = 0.0;
  long steps_since_restart_ = 0;
  std::vector<double> warmup_;
  std::optional<double> rho_;
  std::optional<ChangeEvent> last_event_;
  std::optional<TraceRow> last_trace_;
};

} // namespace riocpd
