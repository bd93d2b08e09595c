#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "riocpd/detector.hpp"

namespace riocpd {

/// Feeds an observation stream through the sliding-window -> correlation ->
/// detector chain, one row at a time and with bounded memory: only the last
/// W rows are kept.
///
/// Windows are consumed on the lag grid first_window, first_window + L,
/// first_window + 2L, ...; after a detection the grid restarts at
/// tau_hat + 1, whose matrix seeds the fresh history.
class StreamingDetector {
public:
  StreamingDetector(DetectorConfig cfg, Eigen::Index dims, Index first_window = 0)
      : cfg_(cfg), detector_(cfg), dims_(dims),
        buffer_(cfg.window, dims), next_window_(first_window) {
    cfg_.validate();
    if (dims_ < 2) throw ConfigError("StreamingDetector: need at least two series");
    if (first_window < 0) throw ConfigError("StreamingDetector: first window must be >= 0");
  }

  /// Observe one row. Returns a change event if this row completed a window
  /// that pushed the CUSUM statistic over the threshold.
  std::optional<ChangeEvent> push(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if (row.size() != dims_)
      throw ContractError("StreamingDetector::push: row has wrong number of series");
    buffer_.row(rows_seen_ % cfg_.window) = row;
    ++rows_seen_;

    const Index w = cfg_.window;
    if (next_window_ + w > rows_seen_) return std::nullopt;

    Matrix block(dims_, w);
    for (Index j = 0; j < w; ++j)
      block.col(j) = buffer_.row((next_window_ + j) % w).transpose();
    CorrelationMatrix corr = correlation_matrix(WindowedSeries(next_window_, std::move(block)),
                                                cfg_.jitter);
    std::optional<ChangeEvent> event = detector_.step(corr, next_window_);
    ++windows_consumed_;
    if (trace_sink_ && detector_.last_trace()) trace_sink_(*detector_.last_trace());
    next_window_ = event ? event->tau_hat + 1 : next_window_ + cfg_.lag;
    return event;
  }

  void set_trace_sink(std::function<void(const TraceRow&)> sink) {
    trace_sink_ = std::move(sink);
  }

  Index rows_seen() const { return rows_seen_; }
  long windows_consumed() const { return windows_consumed_; }
  const Detector& detector() const { return detector_; }

private:
  DetectorConfig cfg_;
  Detector detector_;
  Eigen::Index dims_;
  Matrix buffer_; // ring of the last W rows
  Index rows_seen_ = 0;
  Index next_window_ = 0;
  long windows_consumed_ = 0;
  std::function<void(const TraceRow&)> trace_sink_;
};

struct DetectionRun {
  std::vector<ChangeEvent> events;
  std::vector<TraceRow> trace;
  long windows_consumed = 0;
  double runtime_seconds = 0.0;
};

/// Run the full pipeline over an in-memory frame.
inline DetectionRun run_detection(const SeriesFrame& frame, const DetectorConfig& cfg,
                                  bool want_trace = false, Index first_window = 0) {
  const auto start = std::chrono::steady_clock::now();
  StreamingDetector stream(cfg, frame.dims(), first_window);
  DetectionRun run;
  if (want_trace)
    stream.set_trace_sink([&run](const TraceRow& row) { run.trace.push_back(row); });
  for (Index t = 0; t < frame.length(); ++t) {
    if (std::optional<ChangeEvent> event = stream.push(frame.values().row(t)))
      run.events.push_back(*event);
  }
  run.windows_consumed = stream.windows_consumed();
  run.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

} // namespace riocpd
