#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fdw/inverse.hpp"

namespace fdw {

// ---------------------------------------------------------------------------
// Experiment configuration
//
// Line-oriented text: `[section]` headers, `key = value` pairs, `#` comments.
// Lists are whitespace separated. Sections and keys:
//
//   [run]    scenario
//   [model]  alpha h H potential_cosine potential_samples potential_intervals
//   [data]   kind (initial | source) modes velocity_modes theta
//   [grid]   x_cells t_min t_end t_points spacing (log | linear | graded) series_modes
//   [fit]    modes alpha_lo alpha_hi alpha_step basis
//   [noise]  level seed
//   [kernel] q_cosine q_samples q_intervals j mesh modes
//   [sweep]  values
// ---------------------------------------------------------------------------

/// Potential given by cosine coefficients or, when non-empty, uniform samples.
struct PotentialSpec {
  std::vector<double> cosine{0.0};
  std::vector<double> samples;
  int intervals = 64;

  Potential build() const;
  bool operator==(const PotentialSpec&) const = default;
};

enum class DataKind { initial, source };
enum class Spacing { log, linear, graded };

struct ExperimentConfig {
  std::string scenario = "forward";

  struct Model {
    double alpha = 0.7;
    double h = 1.0;
    double H = 1.0;
    PotentialSpec potential;
    bool operator==(const Model&) const = default;
  } model;

  // Initial data a = sum modes[n] phi_n, a0 = sum velocity_modes[n] phi_n;
  // for a source, g = sum modes[n] phi_n and theta(t) = sum theta[k] t^k.
  struct Data {
    DataKind kind = DataKind::initial;
    std::vector<double> modes{1.0};
    std::vector<double> velocity_modes;
    std::vector<double> theta{1.0};
    bool operator==(const Data&) const = default;
  } data;

  struct Grid {
    int x_cells = 64;
    double t_min = 1e-3;
    double t_end = 5.0;
    int t_points = 400;
    Spacing spacing = Spacing::log;
    int series_modes = 30;
    bool operator==(const Grid&) const = default;
  } grid;

  struct Fit {
    int modes = 5;
    double alpha_lo = 0.05;
    double alpha_hi = 1.95;
    double alpha_step = 0.05;
    int basis = 3;  // cosine coefficients of the recovered potential
    bool operator==(const Fit&) const = default;
  } fit;

  struct Noise {
    double level = 0.0;
    std::uint64_t seed = 1;
    bool operator==(const Noise&) const = default;
  } noise;

  // Second system (q, j) for the transformation kernel.
  struct KernelSystem {
    PotentialSpec q;
    double j = 1.0;
    int mesh = 128;
    int modes = 8;
    bool operator==(const KernelSystem&) const = default;
  } kernel;

  struct Sweep {
    std::vector<double> values;
    bool operator==(const Sweep&) const = default;
  } sweep;

  bool operator==(const ExperimentConfig&) const = default;

  ModelParams params() const;
  RobinPair robin() const { return {model.h, model.H}; }
  std::vector<double> time_grid() const;
  FitOptions fit_options() const;
  /// Initial data on `spec`'s grid (a0 present iff alpha > 1).
  InitialData initial_data(const Spectrum& spec) const;
  SourceSpec source(const Spectrum& spec) const;
};

/// Throws ConfigError listing every problem, each with its line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text: every key in fixed order, shortest round-trip numbers.
std::string render_config(const ExperimentConfig& config);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

void write_trace_csv(const std::filesystem::path& path, const BoundaryTrace& trace);
/// Expects the header `t,left,right`; a malformed row raises UsageError with its index.
BoundaryTrace read_trace_csv(const std::filesystem::path& path);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
void write_table_csv(const std::filesystem::path& path, const Table& table);

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;  // a legend is drawn when there are two or more
};

/// Values on the triangle 0 <= y <= x <= 1 of a uniform mesh; cells above the
/// diagonal are drawn as a masked region.
struct TriangleHeatmap {
  std::string title;
  int mesh = 0;
  std::vector<double> values;  // row-major over i, k <= i
};

std::string render_svg(const Plot& plot);
std::string render_svg(const TriangleHeatmap& map);
void write_text(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// Result bundle
// ---------------------------------------------------------------------------

/// Run metadata, artifact list and summary metrics of one CLI invocation.
struct ResultBundle {
  std::string timestamp;  // UTC, ISO 8601
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::vector<std::pair<std::string, std::string>> metrics;

  void metric(std::string name, double value);
  void metric(std::string name, std::string value);
  /// Writes run.txt (metadata and artifacts) and summary.csv (metric, value).
  void write(const std::filesystem::path& dir) const;
};

ResultBundle make_bundle(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace fdw
