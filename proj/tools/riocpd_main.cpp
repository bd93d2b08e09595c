// riocpd: correlation-aware online change point detection over multivariate
// CSV/TSV streams. Subcommands: detect, simulate, eval, export-plot.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riocpd/riocpd.hpp"

namespace {

using namespace riocpd;

constexpr int kExitConfig = 2;
constexpr int kExitParse = 3;
constexpr int kExitNumeric = 4;

struct DetectorFlags {
  std::string input;
  std::string delimiter = "auto";
  int window = 5;
  int lag = 1;
  std::string metric = "lc";
  std::optional<double> threshold;
  double auto_k = 3.0;
  double jitter = 1e-6;
  int min_history = 2;
  long max_history = 0; // 0 = unbounded

  void attach(CLI::App* cmd, bool with_input = true) {
    if (with_input)
      cmd->add_option("--input", input, "input CSV/TSV file (rows = time, columns = series)")
          ->required();
    cmd->add_option("--delimiter", delimiter, "cell delimiter: auto|comma|tab")
        ->check(CLI::IsMember({"auto", "comma", "tab"}))
        ->capture_default_str();
    cmd->add_option("--window", window, "sliding window size W")->capture_default_str();
    cmd->add_option("--lag", lag, "consume every L-th window")->capture_default_str();
    cmd->add_option("--metric", metric, "riemannian metric: le|lc")
        ->check(CLI::IsMember({"le", "lc"}))
        ->capture_default_str();
    cmd->add_option("--threshold", threshold, "fixed CUSUM threshold rho");
    cmd->add_option("--auto-threshold", auto_k,
                    "calibrate rho as mean + k*std of warmup scores (default)")
        ->capture_default_str();
    cmd->add_option("--jitter", jitter, "diagonal ridge added to correlation matrices")
        ->capture_default_str();
    cmd->add_option("--min-history", min_history, "matrices required before scoring starts")
        ->capture_default_str();
    cmd->add_option("--max-history", max_history, "cap on retained matrices (0 = unbounded)")
        ->capture_default_str();
  }

  DetectorConfig config() const {
    DetectorConfig cfg;
    cfg.window = window;
    cfg.lag = lag;
    cfg.metric = metric == "le" ? MetricKind::LogEuclidean : MetricKind::LogCholesky;
    if (threshold)
      cfg.threshold = *threshold;
    else
      cfg.threshold = AutoThreshold{auto_k};
    cfg.jitter = jitter;
    cfg.min_history = min_history;
    if (max_history > 0) cfg.max_history = max_history;
    cfg.validate();
    return cfg;
  }

  io::Delimiter io_delimiter() const {
    if (delimiter == "comma") return io::Delimiter::Comma;
    if (delimiter == "tab") return io::Delimiter::Tab;
    return io::Delimiter::Auto;
  }
};

std::uint64_t effective_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("RIOCPD_SEED")) return std::strtoull(env, nullptr, 10);
  return flag_seed;
}

std::ostream& open_sink(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  return file;
}

void write_trace_header(std::ostream& out) { out << "t,d,r,D,y,rho\n"; }

void write_trace_row(std::ostream& out, const TraceRow& row) {
  out << row.t << ',' << row.distance << ',' << row.radius << ',' << row.score << ','
      << row.cusum << ',';
  if (row.threshold)
    out << *row.threshold;
  else
    out << "nan";
  out << '\n';
}

/// Shared streaming loop behind `detect` and `export-plot`.
struct StreamResult {
  std::vector<ChangeEvent> events;
  long windows = 0;
  Index rows = 0;
  std::optional<double> last_threshold;
  double runtime_seconds = 0.0;
};

StreamResult stream_file(const DetectorFlags& flags, const DetectorConfig& cfg,
                         std::ostream* events_out, std::ostream* trace_out) {
  const auto start = std::chrono::steady_clock::now();
  io::CsvRowReader reader(flags.input, flags.io_delimiter());
  if (reader.columns() < 2) throw ParseError("need at least two series columns", 1);
  StreamingDetector stream(cfg, static_cast<Eigen::Index>(reader.columns()));
  if (trace_out) {
    write_trace_header(*trace_out);
    stream.set_trace_sink([trace_out](const TraceRow& row) { write_trace_row(*trace_out, row); });
  }

  StreamResult result;
  std::vector<double> row;
  Eigen::RowVectorXd obs(reader.columns());
  while (reader.next(row)) {
    for (std::size_t j = 0; j < row.size(); ++j)
      obs(static_cast<Eigen::Index>(j)) = row[j];
    ++result.rows;
    if (std::optional<ChangeEvent> event = stream.push(obs)) {
      result.events.push_back(*event);
      if (events_out) *events_out << io::event_to_json(*event).dump() << '\n';
    }
  }
  result.windows = stream.windows_consumed();
  result.last_threshold = stream.detector().threshold_in_effect();
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

int cmd_detect(const DetectorFlags& flags, const std::string& output,
               const std::string& trace_path) {
  DetectorConfig cfg = flags.config();
  std::ofstream events_file;
  std::ostream& events_out = open_sink(events_file, output);
  events_out << std::setprecision(17);
  std::ofstream trace_file;
  std::ostream* trace_out = nullptr;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw ConfigError("cannot write '" + trace_path + "'");
    trace_file << std::setprecision(17);
    trace_out = &trace_file;
  }

  StreamResult result = stream_file(flags, cfg, &events_out, trace_out);

  nlohmann::json summary{{"summary", true},
                         {"metric", metric_name(cfg.metric)},
                         {"window", cfg.window},
                         {"lag", cfg.lag},
                         {"rows", result.rows},
                         {"windows", result.windows},
                         {"events", result.events.size()},
                         {"runtime_seconds", result.runtime_seconds}};
  if (result.last_threshold)
    summary["threshold"] = *result.last_threshold;
  else
    summary["threshold"] = nullptr;
  events_out << summary.dump() << '\n';
  return 0;
}

int cmd_export_plot(const DetectorFlags& flags, const std::string& output) {
  DetectorConfig cfg = flags.config();
  std::ofstream trace_file(output);
  if (!trace_file) throw ConfigError("cannot write '" + output + "'");
  trace_file << std::setprecision(17);
  StreamResult result = stream_file(flags, cfg, nullptr, &trace_file);
  std::cerr << "wrote " << result.windows << " consumed windows, "
            << result.events.size() << " events\n";
  return 0;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: '" + cell + "'");
    }
  }
  return values;
}

struct SimulateFlags {
  std::string kind;
  Index length = 100;
  std::vector<Index> at;
  double magnitude = 5.0;
  int particles = 5;
  std::string layout = "coordinate";
  std::string projection = "vx";
  double noise = 0.002;
  double spring_constant = 12.0;
  int substeps = 12;
  Eigen::Index dims = 3;
  int segments = 2;
  std::string offdiag = "0.8,-0.8";
  std::uint64_t seed = 0;
  std::string output;
  std::string labels;
};

int cmd_simulate(const SimulateFlags& flags) {
  const std::uint64_t seed = effective_seed(flags.seed);
  LabeledStream stream = [&] {
    if (flags.kind == "gaussian") {
      if (flags.segments < 1) throw ConfigError("simulate: need at least one segment");
      std::vector<double> rho = parse_double_list(flags.offdiag);
      if (rho.empty()) throw ConfigError("simulate: --offdiag list is empty");
      std::vector<std::pair<Index, Matrix>> segs;
      const Index base = flags.length / flags.segments;
      if (base < 1) throw ConfigError("simulate: length too short for segment count");
      for (int s = 0; s < flags.segments; ++s) {
        const Index len =
            s + 1 == flags.segments ? flags.length - base * (flags.segments - 1) : base;
        const double r = rho[static_cast<std::size_t>(s) % rho.size()];
        segs.emplace_back(len, r == 0.0 ? Matrix::Identity(flags.dims, flags.dims)
                                        : single_pair_correlation(flags.dims, 0, 1, r));
      }
      return gaussian_regimes(flags.dims, segs, seed);
    }
    ChangeKind kind;
    if (flags.kind == "connection")
      kind = ChangeKind::Connection;
    else if (flags.kind == "speed")
      kind = ChangeKind::Speed;
    else if (flags.kind == "location")
      kind = ChangeKind::Location;
    else
      throw ConfigError("simulate: unknown kind '" + flags.kind + "'");
    SpringSystem system;
    system.n_particles = flags.particles;
    system.noise_std = flags.noise;
    system.spring_constant = flags.spring_constant;
    system.substeps = flags.substeps;
    system.layout = flags.layout == "state" ? ObservationLayout::ParticleState
                                            : ObservationLayout::CoordinateProjection;
    if (flags.projection == "x")
      system.projection = StateComponent::PositionX;
    else if (flags.projection == "y")
      system.projection = StateComponent::PositionY;
    else if (flags.projection == "vy")
      system.projection = StateComponent::VelocityY;
    else
      system.projection = StateComponent::VelocityX;
    std::vector<ChangeSpec> changes;
    std::vector<Index> cps = flags.at;
    if (cps.empty()) cps.push_back(flags.length / 2);
    for (Index cp : cps) changes.push_back(ChangeSpec{kind, cp, flags.magnitude});
    return simulate_springs(system, flags.length, changes, seed);
  }();

  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < stream.frame.dims(); ++j)
    names.push_back("s" + std::to_string(j));
  io::write_series(flags.output, stream.frame, names);
  const std::string labels_path =
      flags.labels.empty() ? flags.output + ".labels.json" : flags.labels;
  io::write_labels(labels_path, stream.true_cps);
  std::cerr << "wrote " << stream.frame.length() << " rows x " << stream.frame.dims()
            << " series to " << flags.output << ", labels to " << labels_path << '\n';
  return 0;
}

struct EvalFlags {
  std::string events;
  std::string labels;
  std::string name;
  double delay_cap = 2.0;
  std::string grid;
  std::string output;
  bool table = false;
};

int cmd_eval(const EvalFlags& eflags, const DetectorFlags& dflags, bool have_input) {
  const std::vector<Index> truth = io::read_labels(eflags.labels);
  EvalConfig ecfg{dflags.window, eflags.delay_cap};
  ecfg.validate();

  std::string dataset_name = eflags.name;
  DetectionReport default_report;
  DetectionReport best_report;
  std::optional<double> best_threshold;

  if (!eflags.events.empty()) {
    std::vector<ChangeEvent> events = io::read_events_jsonl(eflags.events);
    Matching m = match_detections(events, truth, ecfg);
    default_report = make_report(m, ecfg, 0.0);
    best_report = default_report;
    if (dataset_name.empty()) dataset_name = eflags.events;
  } else if (have_input) {
    SeriesFrame frame = io::read_series(dflags.input, dflags.io_delimiter());
    for (Index cp : truth)
      if (cp < 0 || cp >= frame.length())
        throw ConfigError("eval: label " + std::to_string(cp) + " outside the stream");
    BenchmarkDataset data;
    data.name = dataset_name.empty() ? dflags.input : dataset_name;
    data.kind = DatasetKind::Synthetic;
    data.streams.push_back(LabeledStream{std::move(frame), truth, {}});
    const DetectorConfig cfg = dflags.config();
    default_report = evaluate_config(data, cfg);
    best_report = default_report;
    if (!eflags.grid.empty()) {
      for (double rho : parse_double_list(eflags.grid)) {
        DetectorConfig candidate = cfg;
        candidate.threshold = rho;
        candidate.validate();
        DetectionReport report = evaluate_config(data, candidate);
        if (report.f1 > best_report.f1) {
          best_report = report;
          best_threshold = rho;
        }
      }
    }
    dataset_name = data.name;
  } else {
    throw ConfigError("eval: pass --events or --input");
  }

  nlohmann::json out{{"dataset", dataset_name},
                     {"default", io::report_to_json(default_report)},
                     {"best", io::report_to_json(best_report)}};
  if (best_threshold)
    out["best_threshold"] = *best_threshold;
  else
    out["best_threshold"] = nullptr;

  std::ofstream file;
  std::ostream& sink = open_sink(file, eflags.output);
  sink << out.dump(2) << '\n';

  if (eflags.table) {
    BenchmarkRow row{dataset_name, default_report, best_report, best_threshold};
    std::vector<BenchmarkRow> rows{row};
    std::cout << format_table(rows);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlation-aware online change point detection on the SPD manifold"};
  app.require_subcommand(1);

  DetectorFlags detect_flags;
  std::string detect_output;
  std::string detect_trace;
  CLI::App* detect = app.add_subcommand("detect", "run online detection over a CSV stream");
  detect_flags.attach(detect);
  detect->add_option("--output", detect_output, "events file (JSON lines; default stdout)");
  detect->add_option("--trace", detect_trace, "write per-window trace CSV");

  SimulateFlags sim_flags;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a labeled synthetic stream");
  simulate->add_option("--kind", sim_flags.kind, "connection|speed|location|gaussian")
      ->required()
      ->check(CLI::IsMember({"connection", "speed", "location", "gaussian"}));
  simulate->add_option("--length", sim_flags.length, "stream length")->capture_default_str();
  simulate->add_option("--at", sim_flags.at, "change indices (default: length/2)");
  simulate->add_option("--magnitude", sim_flags.magnitude, "perturbation std for speed/location")
      ->capture_default_str();
  simulate->add_option("--particles", sim_flags.particles, "spring system size")
      ->capture_default_str();
  simulate->add_option("--layout", sim_flags.layout, "observation layout: coordinate|state")
      ->check(CLI::IsMember({"coordinate", "state"}))
      ->capture_default_str();
  simulate->add_option("--projection", sim_flags.projection,
                       "coordinate layout: observed state component x|y|vx|vy")
      ->check(CLI::IsMember({"x", "y", "vx", "vy"}))
      ->capture_default_str();
  simulate->add_option("--noise", sim_flags.noise, "observation noise std")
      ->capture_default_str();
  simulate->add_option("--spring-constant", sim_flags.spring_constant, "Hooke constant k")
      ->capture_default_str();
  simulate->add_option("--substeps", sim_flags.substeps, "integration steps per observation")
      ->capture_default_str();
  simulate->add_option("--dims", sim_flags.dims, "gaussian: number of series")
      ->capture_default_str();
  simulate->add_option("--segments", sim_flags.segments, "gaussian: regime count")
      ->capture_default_str();
  simulate->add_option("--offdiag", sim_flags.offdiag,
                       "gaussian: per-segment correlation of the (0,1) pair")
      ->capture_default_str();
  simulate->add_option("--seed", sim_flags.seed, "RNG seed (env RIOCPD_SEED overrides)")
      ->capture_default_str();
  simulate->add_option("--output", sim_flags.output, "output CSV path")->required();
  simulate->add_option("--labels", sim_flags.labels,
                       "labels JSON path (default: <output>.labels.json)");

  EvalFlags eval_flags;
  DetectorFlags eval_detect_flags;
  CLI::App* eval = app.add_subcommand("eval", "score detections against ground truth");
  eval->add_option("--events", eval_flags.events, "events JSONL from a detect run");
  eval_detect_flags.attach(eval, /*with_input=*/false);
  CLI::Option* eval_input =
      eval->add_option("--input", eval_detect_flags.input, "series CSV for a live detect run");
  eval->add_option("--labels", eval_flags.labels, "ground-truth JSON array")->required();
  eval->add_option("--name", eval_flags.name, "dataset name for the report");
  eval->add_option("--delay-cap", eval_flags.delay_cap, "delay cap multiplier (x window)")
      ->capture_default_str();
  eval->add_option("--grid", eval_flags.grid, "threshold grid for the best-F1 search (live mode)");
  eval->add_option("--output", eval_flags.output, "report JSON path (default stdout)");
  eval->add_flag("--table", eval_flags.table, "also print a plain-text results table");

  DetectorFlags plot_flags;
  std::string plot_output;
  CLI::App* export_plot = app.add_subcommand(
      "export-plot", "run detection with tracing and export (t, d, r, D, y, rho)");
  plot_flags.attach(export_plot);
  export_plot->add_option("--output", plot_output, "trace CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (detect->parsed()) return cmd_detect(detect_flags, detect_output, detect_trace);
    if (simulate->parsed()) return cmd_simulate(sim_flags);
    if (eval->parsed())
      return cmd_eval(eval_flags, eval_detect_flags, eval_input->count() > 0);
    if (export_plot->parsed()) return cmd_export_plot(plot_flags, plot_output);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
