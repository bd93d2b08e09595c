#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "riocpd/correlation.hpp"
#include "riocpd/detector.hpp"
#include "riocpd/eval.hpp"

namespace riocpd::io {

enum class Delimiter { Auto, Comma, Tab };

namespace detail {

inline char resolve_delimiter(Delimiter d, std::string_view first_line) {
  switch (d) {
    case Delimiter::Comma: return ',';
    case Delimiter::Tab: return '\t';
    case Delimiter::Auto: return first_line.find('\t') != std::string_view::npos ? '\t' : ',';
  }
  return ',';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Locale-independent double parse; the whole cell must be consumed.
inline std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

} // namespace detail

/// Streaming CSV/TSV reader: rows are time steps, columns are series. An
/// optional header row is auto-detected (any non-numeric cell). Blank lines
/// are skipped; ragged or non-numeric rows raise ParseError with the 1-based
/// line number.
class CsvRowReader {
public:
  explicit CsvRowReader(const std::string& path, Delimiter delimiter = Delimiter::Auto)
      : stream_(path) {
    if (!stream_) throw ParseError("cannot open '" + path + "'", 0);
    std::string line;
    while (std::getline(stream_, line)) {
      ++line_number_;
      if (detail::trim(line).empty()) continue;
      delim_ = detail::resolve_delimiter(delimiter, line);
      auto cells = detail::split(line, delim_);
      columns_ = cells.size();
      bool numeric = true;
      std::vector<double> row;
      row.reserve(cells.size());
      for (auto cell : cells) {
        auto v = detail::parse_double(cell);
        if (!v) {
          numeric = false;
          break;
        }
        row.push_back(*v);
      }
      if (numeric) {
        pending_ = std::move(row);
      } else {
        for (auto cell : cells) header_.emplace_back(detail::trim(cell));
      }
      return;
    }
    throw ParseError("file is empty", line_number_);
  }

  /// Read the next data row into `row`. Returns false at end of file.
  bool next(std::vector<double>& row) {
    if (pending_) {
      row = std::move(*pending_);
      pending_.reset();
      return true;
    }
    std::string line;
    while (std::getline(stream_, line)) {
      ++line_number_;
      if (detail::trim(line).empty()) continue;
      auto cells = detail::split(line, delim_);
      if (cells.size() != columns_)
        throw ParseError("expected " + std::to_string(columns_) + " columns, got " +
                             std::to_string(cells.size()),
                         line_number_);
      row.clear();
      row.reserve(cells.size());
      for (auto cell : cells) {
        auto v = detail::parse_double(cell);
        if (!v) throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_number_);
        row.push_back(*v);
      }
      return true;
    }
    return false;
  }

  std::size_t columns() const { return columns_; }
  const std::vector<std::string>& header() const { return header_; }
  std::size_t line_number() const { return line_number_; }

private:
  std::ifstream stream_;
  char delim_ = ',';
  std::size_t columns_ = 0;
  std::size_t line_number_ = 0;
  std::vector<std::string> header_;
  std::optional<std::vector<double>> pending_;
};

/// Load a whole series file into memory.
inline SeriesFrame read_series(const std::string& path, Delimiter delimiter = Delimiter::Auto) {
  CsvRowReader reader(path, delimiter);
  std::vector<double> row;
  std::vector<std::vector<double>> rows;
  while (reader.next(row)) rows.push_back(row);
  if (rows.empty()) throw ParseError("no data rows", reader.line_number());
  if (rows.front().size() < 2) throw ParseError("need at least two series columns", 1);
  Matrix values(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t j = 0; j < rows[t].size(); ++j)
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
  return SeriesFrame(std::move(values));
}

inline void write_series(const std::string& path, const SeriesFrame& frame,
                         std::span<const std::string> names = {}, char delim = ',') {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << std::setprecision(17);
  if (!names.empty()) {
    for (std::size_t j = 0; j < names.size(); ++j)
      out << (j ? std::string(1, delim) : "") << names[j];
    out << '\n';
  }
  for (Index t = 0; t < frame.length(); ++t) {
    for (Eigen::Index j = 0; j < frame.dims(); ++j)
      out << (j ? std::string(1, delim) : "") << frame.values()(t, j);
    out << '\n';
  }
}

inline std::vector<Index> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open labels '" + path + "'", 0);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("labels: ") + e.what(), 0);
  }
  if (!j.is_array()) throw ParseError("labels must be a JSON array of integers", 0);
  std::vector<Index> labels;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ParseError("labels must be integers", 0);
    labels.push_back(v.get<Index>());
  }
  return labels;
}

inline void write_labels(const std::string& path, std::span<const Index> labels) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  nlohmann::json j = nlohmann::json::array();
  for (Index v : labels) j.push_back(v);
  out << j.dump() << '\n';
}

inline nlohmann::json event_to_json(const ChangeEvent& e) {
  return nlohmann::json{{"index", e.tau_hat},
                        {"cusum", e.cusum_value},
                        {"score", e.score},
                        {"window", {e.span_begin, e.span_end}}};
}

inline ChangeEvent event_from_json(const nlohmann::json& j) {
  ChangeEvent e;
  e.tau_hat = j.at("index").get<Index>();
  e.cusum_value = j.at("cusum").get<double>();
  e.score = j.at("score").get<double>();
  e.span_begin = j.at("window").at(0).get<Index>();
  e.span_end = j.at("window").at(1).get<Index>();
  return e;
}

/// Events from a line-delimited JSON file; the summary record (if present)
/// is ignored.
inline std::vector<ChangeEvent> read_events_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open events '" + path + "'", 0);
  std::vector<ChangeEvent> events;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("events: ") + e.what(), line_number);
    }
    if (j.contains("summary")) continue;
    try {
      events.push_back(event_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("events: ") + e.what(), line_number);
    }
  }
  return events;
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "t,d,r,D,y,rho\n" << std::setprecision(17);
  for (const TraceRow& row : trace) {
    out << row.t << ',' << row.distance << ',' << row.radius << ',' << row.score << ','
        << row.cusum << ',';
    if (row.threshold)
      out << *row.threshold;
    else
      out << "nan";
    out << '\n';
  }
}

inline nlohmann::json report_to_json(const DetectionReport& r) {
  nlohmann::json j{{"tp", r.tp},
                   {"fp", r.fp},
                   {"fn", r.fn},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"f1", r.f1},
                   {"runtime_seconds", r.runtime_seconds}};
  if (r.average_delay)
    j["average_delay"] = *r.average_delay;
  else
    j["average_delay"] = nullptr;
  return j;
}

inline DetectionReport report_from_json(const nlohmann::json& j) {
  DetectionReport r;
  r.tp = j.at("tp").get<long>();
  r.fp = j.at("fp").get<long>();
  r.fn = j.at("fn").get<long>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  if (!j.at("average_delay").is_null()) r.average_delay = j.at("average_delay").get<double>();
  return r;
}

} // namespace riocpd::io
