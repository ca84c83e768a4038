#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bftevo/equilibrium.hpp"
#include "bftevo/model.hpp"

namespace bftevo {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepParameter { X1, M, Alpha, Beta, Gamma, Reward, CheckCost, SendCost, Kappa, Nu, N };

std::string_view to_string(SweepParameter p);
std::optional<SweepParameter> parse_sweep_parameter(std::string_view name);

struct SweepAxis {
  SweepParameter parameter = SweepParameter::X1;
  double min = 0.0;
  double max = 0.0;
  int steps = 2;
};

/// "name:min:max:steps", e.g. "x1:0:1:50". Throws ConfigError.
SweepAxis parse_axis(std::string_view text);

enum class SimulationMode { MeanField, Agents };

std::string_view to_string(SimulationMode m);
std::optional<SimulationMode> parse_simulation_mode(std::string_view name);

struct SweepSpec {
  ModelConfig base;
  std::vector<SweepAxis> axes;  // 0..3; empty is a single-point sweep
  std::uint64_t master_seed = 0;
  int seeds_per_cell = 1;       // agent mode only
  SimulationMode mode = SimulationMode::MeanField;
  double offset_scale = 1.0;    // multiplies the default update offset
  double boundary_tol = kDefaultBoundaryTol;
  unsigned threads = 0;         // 0 = hardware concurrency
};

/// Realized values along one axis. Ratio axes are realized by moving R,
/// c_send or nu with kappa and N fixed; integer-valued axes (gamma, nu, N)
/// are rounded and deduplicated in first-seen order.
std::vector<double> axis_values(const SweepAxis& axis, const ModelConfig& base);

/// Applies one axis value to a config.
void apply_axis_value(ModelConfig& config, SweepParameter parameter, double value);

struct SweepRow {
  std::size_t cell_index = 0;
  int replicate = 0;
  double x1 = 0.0;
  double m = 0.0;
  PolicyRatios ratios;
  AnalyticClassification analytic;
  TerminalInfo simulated;
  EvaluationReport evaluation;  // of the simulated class
  bool discrepancy = false;     // analytic verdict exists and differs from the simulated class
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by (cell_index, replicate)
};

/// Validates every cell before simulating anything. Throws ConfigError.
SweepResult run_sweep(const SweepSpec& spec);

inline constexpr std::string_view kSweepCsvHeader =
    "cell_index,x1,m,alpha,beta,gamma,analytic_class,simulated_class,terminal_x,rounds,welfare,"
    "immediate_safety,eventual_safety,immediate_liveness,eventual_liveness,eventual_validity,discrepancy";

/// 12 significant digits, locale independent.
std::string format_double(double v);

std::string analytic_label(const AnalyticClassification& a);

void write_sweep_csv(const SweepResult& result, std::ostream& out);

/// Writes to a sibling temporary file and renames it over `path`, so a
/// failed run never leaves partial output behind.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

}  // namespace bftevo
