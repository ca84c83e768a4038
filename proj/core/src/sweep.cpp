#include "bftevo/sweep.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "bftevo/dynamics.hpp"
#include "bftevo/parallel.hpp"
#include "bftevo/random.hpp"

namespace bftevo {

namespace {

struct ParameterName {
  SweepParameter parameter;
  std::string_view name;
};

constexpr std::array<ParameterName, 11> kParameterNames = {{
    {SweepParameter::X1, "x1"},
    {SweepParameter::M, "m"},
    {SweepParameter::Alpha, "alpha"},
    {SweepParameter::Beta, "beta"},
    {SweepParameter::Gamma, "gamma"},
    {SweepParameter::Reward, "R"},
    {SweepParameter::CheckCost, "c_check"},
    {SweepParameter::SendCost, "c_send"},
    {SweepParameter::Kappa, "kappa"},
    {SweepParameter::Nu, "nu"},
    {SweepParameter::N, "N"},
}};

// Axes are applied in this order so derived quantities see their inputs first.
int application_rank(SweepParameter p) {
  switch (p) {
    case SweepParameter::N: return 0;
    case SweepParameter::Kappa: return 1;
    case SweepParameter::Reward: return 2;
    case SweepParameter::CheckCost: return 3;
    case SweepParameter::SendCost: return 4;
    case SweepParameter::Nu: return 5;
    case SweepParameter::X1: return 6;
    case SweepParameter::M: return 7;
    case SweepParameter::Alpha: return 8;
    case SweepParameter::Beta: return 9;
    case SweepParameter::Gamma: return 10;
  }
  return 11;
}

// Parameters writing the same underlying field cannot both be swept.
int target_field(SweepParameter p) {
  switch (p) {
    case SweepParameter::Alpha:
    case SweepParameter::Reward: return 0;
    case SweepParameter::Beta:
    case SweepParameter::SendCost: return 1;
    case SweepParameter::Gamma:
    case SweepParameter::Nu: return 2;
    default: return 3 + static_cast<int>(p);
  }
}

bool integer_valued(SweepParameter p) {
  return p == SweepParameter::Gamma || p == SweepParameter::Nu || p == SweepParameter::N;
}

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::string_view class_label(EquilibriumClass c) { return to_string(c); }

}  // namespace

std::string_view to_string(SweepParameter p) {
  for (const auto& e : kParameterNames) {
    if (e.parameter == p) return e.name;
  }
  return "?";
}

std::optional<SweepParameter> parse_sweep_parameter(std::string_view name) {
  for (const auto& e : kParameterNames) {
    if (e.name == name) return e.parameter;
  }
  return std::nullopt;
}

std::string_view to_string(SimulationMode m) {
  return m == SimulationMode::MeanField ? "mean-field" : "agents";
}

std::optional<SimulationMode> parse_simulation_mode(std::string_view name) {
  if (name == "mean-field") return SimulationMode::MeanField;
  if (name == "agents") return SimulationMode::Agents;
  return std::nullopt;
}

SweepAxis parse_axis(std::string_view text) {
  std::array<std::string_view, 4> parts;
  std::size_t count = 0;
  std::size_t start = 0;
  while (count < 4) {
    const auto colon = text.find(':', start);
    parts[count++] = text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start);
    if (colon == std::string_view::npos) break;
    start = colon + 1;
    if (count == 4) throw ConfigError("axis '" + std::string(text) + "' has too many fields");
  }
  if (count != 4) throw ConfigError("axis '" + std::string(text) + "' must look like name:min:max:steps");
  const auto parameter = parse_sweep_parameter(parts[0]);
  if (!parameter) throw ConfigError("unknown sweep parameter '" + std::string(parts[0]) + "'");
  SweepAxis axis;
  axis.parameter = *parameter;
  axis.min = parse_number(parts[1], "axis min");
  axis.max = parse_number(parts[2], "axis max");
  const double steps = parse_number(parts[3], "axis steps");
  if (steps != std::floor(steps) || steps < 2 || steps > 1e7) {
    throw ConfigError("axis steps must be an integer >= 2");
  }
  axis.steps = static_cast<int>(steps);
  if (!(axis.min <= axis.max)) throw ConfigError("axis min must not exceed max");
  return axis;
}

void apply_axis_value(ModelConfig& c, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::X1: c.initial_honest_fraction = v; break;
    case SweepParameter::M: c.belief.assortativity = v; break;
    case SweepParameter::Alpha: c.payoffs.reward = v * c.payoffs.penalty; break;
    case SweepParameter::Beta: c.payoffs.send_cost = v * c.payoffs.penalty; break;
    case SweepParameter::Gamma:
      c.protocol.threshold = static_cast<int>(std::lround(v * c.protocol.committee_size));
      break;
    case SweepParameter::Reward: c.payoffs.reward = v; break;
    case SweepParameter::CheckCost: c.payoffs.check_cost = v; break;
    case SweepParameter::SendCost: c.payoffs.send_cost = v; break;
    case SweepParameter::Kappa: c.payoffs.penalty = v; break;
    case SweepParameter::Nu: c.protocol.threshold = static_cast<int>(std::lround(v)); break;
    case SweepParameter::N: c.protocol.committee_size = static_cast<int>(std::lround(v)); break;
  }
}

std::vector<double> axis_values(const SweepAxis& axis, const ModelConfig& base) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(axis.steps));
  for (int i = 0; i < axis.steps; ++i) {
    const double t = static_cast<double>(i) / (axis.steps - 1);
    values.push_back(i == axis.steps - 1 ? axis.max : axis.min + t * (axis.max - axis.min));
  }
  if (!integer_valued(axis.parameter)) return values;

  std::vector<double> realized;
  std::set<long> seen;
  for (double v : values) {
    const double scaled = axis.parameter == SweepParameter::Gamma ? v * base.protocol.committee_size : v;
    const long count = std::lround(scaled);
    if (!seen.insert(count).second) continue;
    realized.push_back(axis.parameter == SweepParameter::Gamma
                           ? static_cast<double>(count) / base.protocol.committee_size
                           : static_cast<double>(count));
  }
  return realized;
}

namespace {

struct Cell {
  ModelConfig config;
};

std::vector<Cell> build_cells(const SweepSpec& spec) {
  if (spec.axes.size() > 3) throw ConfigError("at most 3 sweep axes are supported");
  std::set<int> fields;
  for (const auto& a : spec.axes) {
    if (a.steps < 2) throw ConfigError("axis steps must be >= 2");
    if (!fields.insert(target_field(a.parameter)).second) {
      throw ConfigError("axis '" + std::string(to_string(a.parameter)) + "' conflicts with another axis");
    }
  }
  const bool sweeps_n = std::any_of(spec.axes.begin(), spec.axes.end(),
                                    [](const auto& a) { return a.parameter == SweepParameter::N; });
  const bool sweeps_gamma = std::any_of(spec.axes.begin(), spec.axes.end(),
                                        [](const auto& a) { return a.parameter == SweepParameter::Gamma; });
  if (sweeps_n && sweeps_gamma) throw ConfigError("gamma and N cannot be swept together");

  std::vector<std::vector<double>> values;
  for (const auto& a : spec.axes) values.push_back(axis_values(a, spec.base));

  std::vector<std::size_t> order(spec.axes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return application_rank(spec.axes[a].parameter) < application_rank(spec.axes[b].parameter);
  });

  std::size_t total = 1;
  for (const auto& v : values) total *= v.size();

  std::vector<Cell> cells;
  cells.reserve(total);
  std::vector<std::size_t> digit(spec.axes.size(), 0);
  for (std::size_t cell = 0; cell < total; ++cell) {
    // first axis varies slowest
    std::size_t rem = cell;
    for (std::size_t k = spec.axes.size(); k-- > 0;) {
      digit[k] = rem % values[k].size();
      rem /= values[k].size();
    }
    Cell c{spec.base};
    for (auto k : order) apply_axis_value(c.config, spec.axes[k].parameter, values[k][digit[k]]);
    auto check = validate_model(c.config);
    if (!check) {
      const auto& v = check.violations.front();
      throw ConfigError("sweep cell " + std::to_string(cell) + " is invalid: " + v.field + " " +
                        std::string(to_string(v.kind)) + " (" + v.message + ")");
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.seeds_per_cell < 1) throw ConfigError("seeds_per_cell must be >= 1");
  if (!(spec.offset_scale >= 1.0) || !std::isfinite(spec.offset_scale)) {
    throw ConfigError("offset_scale must be finite and >= 1");
  }
  if (!(spec.boundary_tol >= 0.0)) throw ConfigError("boundary_tol must be >= 0");
  const auto cells = build_cells(spec);
  const std::size_t replicates =
      spec.mode == SimulationMode::Agents ? static_cast<std::size_t>(spec.seeds_per_cell) : 1;

  SweepResult result;
  result.rows.resize(cells.size() * replicates);
  parallel_for_index(result.rows.size(), spec.threads, [&](std::size_t task) {
    const std::size_t cell = task / replicates;
    const auto replicate = static_cast<int>(task % replicates);
    ModelConfig config = cells[cell].config;
    config.rng_seed = derive_seed(spec.master_seed, cell, static_cast<std::uint64_t>(replicate));
    const auto model = require_valid(config);
    const UpdateOffset offset{default_offset(model.payoffs()).value * spec.offset_scale};

    auto& row = result.rows[task];
    row.cell_index = cell;
    row.replicate = replicate;
    row.x1 = config.initial_honest_fraction;
    row.m = config.belief.assortativity;
    row.ratios = model.ratios();
    row.analytic = classify_analytic(model, spec.boundary_tol);
    const auto trajectory =
        spec.mode == SimulationMode::Agents ? simulate_agents(model, offset) : simulate_mean_field(model, offset);
    row.simulated = trajectory.terminal;
    row.evaluation = evaluate_equilibrium(row.simulated.equilibrium, model);
    row.discrepancy = row.analytic.equilibrium && *row.analytic.equilibrium != row.simulated.equilibrium;
  });
  return result;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 12);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

std::string analytic_label(const AnalyticClassification& a) {
  return a.equilibrium ? std::string(class_label(*a.equilibrium)) : std::string("BoundaryAmbiguous");
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : result.rows) {
    const auto& e = r.evaluation;
    out << r.cell_index << ',' << format_double(r.x1) << ',' << format_double(r.m) << ','
        << format_double(r.ratios.alpha) << ',' << format_double(r.ratios.beta) << ','
        << format_double(r.ratios.gamma) << ',' << analytic_label(r.analytic) << ','
        << class_label(r.simulated.equilibrium) << ',' << format_double(r.simulated.final_fraction) << ','
        << r.simulated.rounds << ',' << format_double(e.honest_agent_welfare) << ',' << int(e.immediate_safety)
        << ',' << int(e.eventual_safety) << ',' << int(e.immediate_liveness) << ',' << int(e.eventual_liveness)
        << ',' << int(e.eventual_validity) << ',' << int(r.discrepancy) << '\n';
  }
}

void write_file_atomically(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ConfigError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace bftevo
