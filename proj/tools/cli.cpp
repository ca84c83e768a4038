#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bftevo/dynamics.hpp"
#include "bftevo/equilibrium.hpp"
#include "bftevo/matching.hpp"
#include "bftevo/model.hpp"
#include "bftevo/random.hpp"
#include "bftevo/sweep.hpp"
#include "json.hpp"

namespace bftevo::cli {

namespace {

using json = nlohmann::ordered_json;

// Every option lives on the root app so one flat config file (and one set of
// BFTEVO_* variables) can drive any subcommand.
struct Options {
  // model
  double reward = 10.0;
  double check_cost = 4.0;
  double send_cost = 2.0;
  double penalty = 1.0;
  int committee_size = 10;
  int threshold = 3;
  double belief_m = 0.2;
  double x1 = 0.6;
  int max_rounds = kDefaultMaxRounds;
  double tol = kDefaultConvergenceTol;
  std::uint64_t seed = 0;
  std::string preset;
  // run
  std::string mode = "mean-field";
  std::string format;
  std::string out;
  double offset_scale = 1.0;
  double boundary_tol = kDefaultBoundaryTol;
  unsigned threads = 0;
  // sweep
  std::vector<std::string> axes;
  int seeds_per_cell = 1;
  // match-check
  int agents = 1000;
  std::vector<double> match_m{0.0, 0.5, 1.0};
  std::vector<double> match_x{0.25, 0.5, 0.75};
  int match_rounds = 100;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string env_name(std::string_view flag) {
  std::string name = "BFTEVO_";
  for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

template <typename T>
CLI::Option* add(CLI::App& app, const std::string& flags, T& target, const std::string& help,
                 std::string_view env_key) {
  auto* opt = app.add_option(flags, target, help)->capture_default_str();
  opt->envname(env_name(env_key));
  if constexpr (!CLI::detail::is_mutable_container<T>::value) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);  // a repeated flag keeps its last value
  }
  return opt;
}

struct Parsed {
  Options options;
  CLI::Option* committee_flag = nullptr;
  CLI::Option* threshold_flag = nullptr;
};

void apply_preset(Parsed& p) {
  auto& o = p.options;
  if (o.preset.empty()) return;
  if (o.preset != "pos-ethereum") {
    throw UsageError("unknown preset '" + o.preset + "' (known: pos-ethereum)");
  }
  // two-thirds vote threshold; explicit -N / --threshold still win
  if (p.committee_flag->count() == 0) o.committee_size = 30;
  if (p.threshold_flag->count() == 0) o.threshold = o.committee_size * 2 / 3;
}

ModelConfig model_config(const Options& o) {
  ModelConfig c;
  c.payoffs = {o.reward, o.check_cost, o.send_cost, o.penalty};
  c.protocol = {o.committee_size, o.threshold};
  c.belief = {o.belief_m};
  c.initial_honest_fraction = o.x1;
  c.max_rounds = o.max_rounds;
  c.convergence_tol = o.tol;
  c.rng_seed = o.seed;
  return c;
}

ValidatedModel validated(const ModelConfig& c, std::ostream& err) {
  auto result = validate_model(c);
  if (!result) {
    std::ostringstream msg;
    msg << "invalid model:";
    for (const auto& v : result.violations) msg << "\n  " << v.field << ": " << v.message;
    throw UsageError(msg.str());
  }
  for (const auto& w : result.model->warnings()) err << "warning: " << w.field << ": " << w.message << '\n';
  return std::move(*result.model);
}

std::string resolve_format(const Options& o, std::string_view fallback) {
  const std::string f = o.format.empty() ? std::string(fallback) : o.format;
  if (f != "csv" && f != "json") throw UsageError("--format must be csv or json");
  return f;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
  } else {
    write_file_atomically(o.out, text);
  }
}

int exit_code_for(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::HonestStable:
    case EquilibriumClass::ByzantineStable:
    case EquilibriumClass::PoolingStable: return kExitOk;
    case EquilibriumClass::Frozen: return kExitFrozen;
    case EquilibriumClass::NotConverged: return kExitNotConverged;
  }
  return kExitNotConverged;
}

json model_json(const ValidatedModel& m) {
  const auto& c = m.config();
  const auto r = m.ratios();
  return json{{"R", c.payoffs.reward},
              {"c_check", c.payoffs.check_cost},
              {"c_send", c.payoffs.send_cost},
              {"kappa", c.payoffs.penalty},
              {"N", c.protocol.committee_size},
              {"nu", c.protocol.threshold},
              {"m", c.belief.assortativity},
              {"x1", c.initial_honest_fraction},
              {"alpha", r.alpha},
              {"beta", r.beta},
              {"gamma", r.gamma},
              {"benchmark_ordering", m.benchmark_ordering()}};
}

json evaluation_json(const EvaluationReport& e) {
  return json{{"case", e.clause_label},
              {"table_row", e.table_row},
              {"immediate_safety", e.immediate_safety},
              {"eventual_safety", e.eventual_safety},
              {"immediate_liveness", e.immediate_liveness},
              {"eventual_liveness", e.eventual_liveness},
              {"eventual_validity", e.eventual_validity},
              {"welfare", e.honest_agent_welfare}};
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = validated(model_config(o), err);
  const auto mode = parse_simulation_mode(o.mode);
  if (!mode) throw UsageError("--mode must be mean-field or agents");
  if (!(o.offset_scale >= 1.0) || !std::isfinite(o.offset_scale)) throw UsageError("--offset-scale must be >= 1");
  const UpdateOffset offset{default_offset(model.payoffs()).value * o.offset_scale};
  const auto trajectory =
      *mode == SimulationMode::Agents ? simulate_agents(model, offset) : simulate_mean_field(model, offset);
  const auto& t = trajectory.terminal;

  std::ostringstream text;
  if (resolve_format(o, "csv") == "json") {
    json states = json::array();
    for (const auto& s : trajectory.states) {
      json row{{"t", s.round}, {"x", s.honest_fraction}, {"regime", to_string(s.regime)},
               {"V_H", s.expected.v_h}, {"V_B", s.expected.v_b}};
      if (s.honest_count) row["honest_count"] = *s.honest_count;
      states.push_back(std::move(row));
    }
    json doc{{"model", model_json(model)},
             {"mode", to_string(*mode)},
             {"trajectory", std::move(states)},
             {"terminal",
              {{"class", to_string(t.equilibrium)},
               {"final_x", t.final_fraction},
               {"rounds", t.rounds},
               {"converged", t.converged},
               {"frozen", t.frozen}}}};
    text << doc.dump(2) << '\n';
  } else {
    text << "t,x,regime,V_H,V_B\n";
    for (const auto& s : trajectory.states) {
      text << s.round << ',' << format_double(s.honest_fraction) << ',' << to_string(s.regime) << ','
           << format_double(s.expected.v_h) << ',' << format_double(s.expected.v_b) << '\n';
    }
    text << "# terminal class=" << to_string(t.equilibrium) << " final_x=" << format_double(t.final_fraction)
         << " rounds=" << t.rounds << " converged=" << int(t.converged) << " frozen=" << int(t.frozen) << '\n';
  }
  emit(o, text.str(), out);
  return exit_code_for(t.equilibrium);
}

// ---------------------------------------------------------------- classify

int cmd_classify(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = validated(model_config(o), err);
  const auto analytic = classify_analytic(model, o.boundary_tol);
  const auto initial = pivotality_regime(model.initial_honest_fraction(), model.protocol());
  std::optional<EvaluationReport> eval;
  if (analytic.equilibrium) eval = evaluate_equilibrium(*analytic.equilibrium, model);

  std::ostringstream text;
  if (resolve_format(o, "json") == "json") {
    json doc{{"model", model_json(model)},
             {"class", analytic_label(analytic)},
             {"boundary_ambiguous", analytic.ambiguous()},
             {"x_star", threshold_x_star(model.payoffs())},
             {"initial_regime", to_string(initial)}};
    if (analytic.ambiguous()) doc["ambiguous_boundary"] = *analytic.ambiguous_boundary;
    if (eval) doc.update(evaluation_json(*eval));
    text << doc.dump(2) << '\n';
  } else {
    text << "class,case,table_row,immediate_safety,eventual_safety,immediate_liveness,eventual_liveness,"
            "eventual_validity,welfare,x_star,alpha,beta,gamma\n";
    const auto r = model.ratios();
    text << analytic_label(analytic) << ',';
    if (eval) {
      text << eval->clause_label << ',' << eval->table_row << ',' << int(eval->immediate_safety) << ','
           << int(eval->eventual_safety) << ',' << int(eval->immediate_liveness) << ','
           << int(eval->eventual_liveness) << ',' << int(eval->eventual_validity) << ','
           << format_double(eval->honest_agent_welfare);
    } else {
      text << ",,,,,,,";
    }
    text << ',' << format_double(threshold_x_star(model.payoffs())) << ',' << format_double(r.alpha) << ','
         << format_double(r.beta) << ',' << format_double(r.gamma) << '\n';
  }
  emit(o, text.str(), out);
  if (!analytic.equilibrium) {
    err << "x1 lies within " << o.boundary_tol << " of the pivotality boundary " << *analytic.ambiguous_boundary
        << "; no analytic verdict\n";
    return kExitNotConverged;
  }
  return exit_code_for(*analytic.equilibrium);
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.base = model_config(o);
  for (const auto& a : o.axes) spec.axes.push_back(parse_axis(a));
  spec.master_seed = o.seed;
  spec.seeds_per_cell = o.seeds_per_cell;
  const auto mode = parse_simulation_mode(o.mode);
  if (!mode) throw UsageError("--mode must be mean-field or agents");
  spec.mode = *mode;
  spec.offset_scale = o.offset_scale;
  spec.boundary_tol = o.boundary_tol;
  spec.threads = o.threads;
  const auto result = run_sweep(spec);

  std::ostringstream text;
  if (resolve_format(o, "csv") == "json") {
    json rows = json::array();
    for (const auto& r : result.rows) {
      json row{{"cell_index", r.cell_index},
               {"replicate", r.replicate},
               {"x1", r.x1},
               {"m", r.m},
               {"alpha", r.ratios.alpha},
               {"beta", r.ratios.beta},
               {"gamma", r.ratios.gamma},
               {"analytic_class", analytic_label(r.analytic)},
               {"simulated_class", to_string(r.simulated.equilibrium)},
               {"terminal_x", r.simulated.final_fraction},
               {"rounds", r.simulated.rounds},
               {"discrepancy", r.discrepancy}};
      row.update(evaluation_json(r.evaluation));
      rows.push_back(std::move(row));
    }
    text << rows.dump(2) << '\n';
  } else {
    write_sweep_csv(result, text);
  }
  emit(o, text.str(), out);
  const auto flagged = std::count_if(result.rows.begin(), result.rows.end(), [](const auto& r) { return r.discrepancy; });
  err << result.rows.size() << " rows, " << flagged << " analytic/simulated discrepancies\n";
  return kExitOk;
}

// ---------------------------------------------------------------- match-check

int cmd_match_check(const Options& o, std::ostream& out, std::ostream&) {
  if (o.agents < 2) throw UsageError("--agents must be >= 2");
  if (o.match_rounds < 1) throw UsageError("--rounds must be >= 1");
  for (double m : o.match_m) {
    if (!(m >= 0.0 && m <= 1.0)) throw UsageError("--m values must lie in [0, 1]");
  }
  for (double x : o.match_x) {
    if (!(x >= 0.0 && x <= 1.0)) throw UsageError("--x values must lie in [0, 1]");
  }

  struct CellResult {
    double m, x;
    int honest;
    MatchStats stats;
    DeviationReport dev;
  };
  std::vector<CellResult> cells;
  std::uint64_t cell = 0;
  for (double m : o.match_m) {
    for (double x : o.match_x) {
      const auto pop = AgentPopulation::with_fraction(o.agents, x, o.seed);
      const auto stats = run_matching(pop, Belief{m}, o.match_rounds, derive_seed(o.seed, cell++));
      cells.push_back({m, x, pop.honest_count(), stats, matching_deviation(stats, Belief{m}, x, o.agents)});
    }
  }
  const bool all_pass = std::all_of(cells.begin(), cells.end(), [](const auto& c) { return c.dev.pass; });

  std::ostringstream text;
  if (resolve_format(o, "csv") == "json") {
    json rows = json::array();
    for (const auto& c : cells) {
      rows.push_back(json{{"m", c.m},
                          {"x", c.x},
                          {"agents", o.agents},
                          {"honest_count", c.honest},
                          {"rounds", o.match_rounds},
                          {"honest_trials", c.stats.trials_by_strategy[0]},
                          {"empirical_hh", c.stats.empirical_pi.pi_hh},
                          {"target_hh", c.dev.corrected_target.pi_hh},
                          {"mean_field_hh", c.dev.mean_field_target.pi_hh},
                          {"z_hh", c.dev.z_hh_corrected},
                          {"byzantine_trials", c.stats.trials_by_strategy[1]},
                          {"empirical_bb", c.stats.empirical_pi.pi_bb},
                          {"target_bb", c.dev.corrected_target.pi_bb},
                          {"mean_field_bb", c.dev.mean_field_target.pi_bb},
                          {"z_bb", c.dev.z_bb_corrected},
                          {"fallbacks", c.stats.fallback_count},
                          {"pass", c.dev.pass}});
    }
    text << json{{"cells", std::move(rows)}, {"all_pass", all_pass}}.dump(2) << '\n';
  } else {
    text << "m,x,agents,honest_count,rounds,honest_trials,empirical_hh,target_hh,z_hh,byzantine_trials,"
            "empirical_bb,target_bb,z_bb,fallbacks,pass\n";
    for (const auto& c : cells) {
      text << format_double(c.m) << ',' << format_double(c.x) << ',' << o.agents << ',' << c.honest << ','
           << o.match_rounds << ',' << c.stats.trials_by_strategy[0] << ','
           << format_double(c.stats.empirical_pi.pi_hh) << ',' << format_double(c.dev.corrected_target.pi_hh)
           << ',' << format_double(c.dev.z_hh_corrected) << ',' << c.stats.trials_by_strategy[1] << ','
           << format_double(c.stats.empirical_pi.pi_bb) << ',' << format_double(c.dev.corrected_target.pi_bb)
           << ',' << format_double(c.dev.z_bb_corrected) << ',' << c.stats.fallback_count << ','
           << (c.dev.pass ? "pass" : "FAIL") << '\n';
    }
  }
  emit(o, text.str(), out);
  return all_pass ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- sensitivity

json widths_json(const RegionWidths& w) {
  return json{{"honest_both_pivotal", w.honest_both_pivotal},
              {"honest_byzantine_not_pivotal", w.honest_byzantine_not_pivotal},
              {"byzantine_both_pivotal", w.byzantine_both_pivotal},
              {"byzantine_honest_not_pivotal", w.byzantine_honest_not_pivotal},
              {"pooling_full_assortativity", w.pooling_full_assortativity},
              {"frozen", w.frozen},
              {"honest_total", w.honest_total()},
              {"byzantine_total", w.byzantine_total()}};
}

int cmd_sensitivity(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = validated(model_config(o), err);
  const auto s = policy_sensitivity(model.payoffs(), model.protocol());
  const auto analytic = classify_analytic(model, o.boundary_tol);
  std::optional<EvaluationReport> eval;
  if (analytic.equilibrium) eval = evaluate_equilibrium(*analytic.equilibrium, model);

  std::ostringstream text;
  if (resolve_format(o, "json") == "json") {
    json doc{{"preset", o.preset.empty() ? json(nullptr) : json(o.preset)},
             {"alpha", s.ratios.alpha},
             {"beta", s.ratios.beta},
             {"gamma", s.ratios.gamma},
             {"x_star", s.x_star},
             {"d_x_star_d_alpha", s.d_threshold_d_alpha},
             {"d_x_star_d_alpha_fd", s.d_threshold_d_alpha_fd},
             {"d_x_star_d_alpha_sign", to_string(s.alpha_sign)},
             {"d_x_star_d_beta", s.d_threshold_d_beta},
             {"d_x_star_d_beta_fd", s.d_threshold_d_beta_fd},
             {"d_x_star_d_beta_sign", to_string(s.beta_sign)},
             {"gamma_step", s.gamma_step},
             {"widths", widths_json(s.widths)},
             {"widths_gamma_plus_step", widths_json(s.widths_perturbed)},
             {"width_deltas", widths_json(s.width_deltas)},
             {"honest_region_boundary_only", s.honest_region_boundary_only},
             {"benchmark_ordering", s.benchmark_ordering},
             {"x1", model.initial_honest_fraction()},
             {"class", analytic_label(analytic)}};
    if (eval) {
      doc["case"] = eval->clause_label;
      doc["table_row"] = eval->table_row;
    }
    text << doc.dump(2) << '\n';
  } else {
    auto kv = [&](std::string_view k, const std::string& v) { text << k << ',' << v << '\n'; };
    auto num = [&](std::string_view k, double v) { kv(k, format_double(v)); };
    text << "key,value\n";
    kv("preset", o.preset);
    num("alpha", s.ratios.alpha);
    num("beta", s.ratios.beta);
    num("gamma", s.ratios.gamma);
    num("x_star", s.x_star);
    num("d_x_star_d_alpha", s.d_threshold_d_alpha);
    num("d_x_star_d_alpha_fd", s.d_threshold_d_alpha_fd);
    kv("d_x_star_d_alpha_sign", std::string(to_string(s.alpha_sign)));
    num("d_x_star_d_beta", s.d_threshold_d_beta);
    num("d_x_star_d_beta_fd", s.d_threshold_d_beta_fd);
    kv("d_x_star_d_beta_sign", std::string(to_string(s.beta_sign)));
    num("gamma_step", s.gamma_step);
    num("honest_width", s.widths.honest_total());
    num("honest_width_delta", s.width_deltas.honest_total());
    num("byzantine_width", s.widths.byzantine_total());
    num("byzantine_width_delta", s.width_deltas.byzantine_total());
    num("frozen_width", s.widths.frozen);
    num("frozen_width_delta", s.width_deltas.frozen);
    kv("honest_region_boundary_only", s.honest_region_boundary_only ? "1" : "0");
    kv("benchmark_ordering", s.benchmark_ordering ? "1" : "0");
    num("x1", model.initial_honest_fraction());
    kv("class", analytic_label(analytic));
    kv("case", eval ? eval->clause_label : "");
  }
  emit(o, text.str(), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolutionary dynamics of honest and Byzantine validators in a BFT committee", "bftevo"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key = value file using long flag names; flags override it");
  app.get_config_ptr()->envname("BFTEVO_CONFIG");

  Parsed p;
  auto& o = p.options;
  add(app, "--reward", o.reward, "Reward R for sending a message on an accepted block", "reward");
  add(app, "--check-cost", o.check_cost, "Cost of checking a proposal", "check-cost");
  add(app, "--send-cost", o.send_cost, "Cost of sending a vote", "send-cost");
  add(app, "--penalty", o.penalty, "Penalty kappa when an invalid block is accepted", "penalty");
  p.committee_flag = add(app, "-N,--committee-size", o.committee_size, "Committee size N", "N");
  p.threshold_flag = add(app, "--threshold", o.threshold, "Votes nu needed to accept a proposal", "threshold");
  add(app, "--belief-m", o.belief_m, "Assortativity belief m in [0, 1]", "belief-m");
  add(app, "--x1", o.x1, "Initial honest fraction", "x1");
  add(app, "--max-rounds", o.max_rounds, "Round budget before NotConverged", "max-rounds");
  add(app, "--tol", o.tol, "Convergence tolerance", "tol");
  add(app, "--seed", o.seed, "RNG seed (master seed for sweeps)", "seed");
  add(app, "--preset", o.preset, "Named parameter preset: pos-ethereum (N=30, nu=20)", "preset");
  add(app, "--mode", o.mode, "Simulation mode: mean-field or agents", "mode");
  add(app, "--format", o.format, "Output format: csv or json", "format");
  add(app, "--out", o.out, "Write output to PATH (atomically) instead of stdout", "out");
  add(app, "--offset-scale", o.offset_scale, "Multiplier (>= 1) on the default update offset", "offset-scale");
  add(app, "--boundary-tol", o.boundary_tol, "Half-width of the analytic boundary band", "boundary-tol");
  add(app, "--threads", o.threads, "Worker threads for sweeps (0 = all cores)", "threads");
  add(app, "--axis", o.axes, "Sweep axis name:min:max:steps (repeat up to 3 times)", "axis");
  add(app, "--seeds-per-cell", o.seeds_per_cell, "Agent-mode replicates per sweep cell", "seeds-per-cell");
  add(app, "--agents", o.agents, "Population size for match-check", "agents");
  add(app, "--m", o.match_m, "Assortativity values for the match-check grid", "m");
  add(app, "--x", o.match_x, "Honest fractions for the match-check grid", "x");
  add(app, "--rounds", o.match_rounds, "Matching rounds per match-check cell", "rounds");

  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  auto* simulate = sub("simulate", "Run the imitative dynamics and print the trajectory");
  auto* classify = sub("classify", "Closed-form equilibrium class with its security and welfare evaluation");
  auto* sweep = sub("sweep", "Grid sweep comparing analytic and simulated classes");
  auto* match_check = sub("match-check", "Validate the assortative matching probabilities by Monte Carlo");
  auto* sensitivity = sub("sensitivity", "Sensitivity of the equilibrium regions to the policy ratios");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    apply_preset(p);
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (classify->parsed()) return cmd_classify(o, out, err);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (match_check->parsed()) return cmd_match_check(o, out, err);
    if (sensitivity->parsed()) return cmd_sensitivity(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace bftevo::cli
