// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bftevo/dynamics.hpp"
#include "bftevo/equilibrium.hpp"
#include "bftevo/matching.hpp"
#include "bftevo/random.hpp"
#include "bftevo/sweep.hpp"
#include "cli.hpp"
#include "oracles.hpp"

using namespace bftevo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // informational, never gating
};

const PayoffParams kExample{10, 4, 2, 1};

ModelConfig example_config(double x1, int n = 10, int nu = 3, double m = 0.2) {
  ModelConfig c;
  c.payoffs = kExample;
  c.protocol = {n, nu};
  c.belief = {m};
  c.initial_honest_fraction = x1;
  return c;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double closed_form_x_star(const PayoffParams& p) {
  return (p.reward - p.send_cost + p.penalty) / (2 * p.reward - 2 * p.send_cost + p.penalty);
}

// 1. bisection root and ratio form against the closed-form frontier
Outcome threshold_oracle() {
  std::mt19937_64 rng(101);
  double worst_bisect = 0, worst_ratio = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = oracle::random_benchmark_payoffs(rng);
    const double exact = closed_form_x_star(p);
    const auto root = solve_interior_fixed_point(p, Belief{0.0});
    const double bisect_err = root ? std::abs(*root - exact) : INFINITY;
    const double ratio = 0.5 + 0.5 / (2 * p.reward / p.penalty - 2 * p.send_cost / p.penalty + 1);
    worst_bisect = std::max({worst_bisect, bisect_err, std::abs(oracle::bisect_frontier(p, 0.0) - exact)});
    worst_ratio = std::max({worst_ratio, std::abs(ratio - exact),
                            std::abs(threshold_x_star(PolicyRatios{p.reward / p.penalty, p.send_cost / p.penalty, 0.3}) - exact)});
  }
  return {worst_bisect < 1e-9 && worst_ratio < 1e-12,
          fmt("max |bisection - closed form| = %.3g (< 1e-9), max |ratio form - closed form| = %.3g (< 1e-12)",
              worst_bisect, worst_ratio),
          {}};
}

// 2. both-pivotal payoff gap identity on a 50 x 50 x 10 grid
Outcome gap_identity() {
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int d = 0; d < 10; ++d) {
    const auto p = oracle::random_benchmark_payoffs(rng);
    for (int i = 0; i < 50; ++i) {
      const double x = i / 49.0;
      for (int j = 0; j < 50; ++j) {
        const double m = j / 49.0;
        const auto e = expected_payoffs(p, Belief{m}, x, PivotalityRegime::BothPivotal);
        const double identity = (e.v_h - e.v_b) + (1 - m) * ((1 - 2 * x) * (p.reward - p.send_cost) + (1 - x) * p.penalty);
        worst = std::max(worst, std::abs(identity));
      }
    }
  }
  return {worst < 1e-12, fmt("max residual %.3g over 25000 grid points (< 1e-12)", worst), {}};
}

// 3. example model converges honest from 0.6 and Byzantine from 0.4
Outcome convergence_to_honest() {
  const auto up = require_valid(example_config(0.6));
  const auto down = require_valid(example_config(0.4));
  const auto a = simulate_mean_field(up, default_offset(up.payoffs())).terminal;
  const auto b = simulate_mean_field(down, default_offset(down.payoffs())).terminal;
  const bool ok = a.final_fraction >= 1 - 1e-9 && a.rounds <= 10000 && b.final_fraction <= 1e-9 && b.rounds <= 10000;
  return {ok,
          fmt("x1=0.6 -> x=%.12f in %d rounds (%s); x1=0.4 -> x=%.3g in %d rounds (%s)", a.final_fraction, a.rounds,
              std::string(to_string(a.equilibrium)).c_str(), b.final_fraction, b.rounds,
              std::string(to_string(b.equilibrium)).c_str()),
          {}};
}

// 4. nu = 6 of 10 at x1 = 0.5 freezes with zero payoffs and no liveness
Outcome frozen_liveness() {
  const auto model = require_valid(example_config(0.5, 10, 6));
  const auto t = simulate_mean_field(model, default_offset(model.payoffs()));
  bool zero = true;
  for (const auto& s : t.states) zero = zero && s.expected.v_h == 0.0 && s.expected.v_b == 0.0;
  const auto e = evaluate_equilibrium(t.terminal.equilibrium, model);
  const bool ok = t.terminal.equilibrium == EquilibriumClass::Frozen && zero && !e.immediate_liveness &&
                  !e.eventual_liveness;
  return {ok,
          fmt("class %s, payoffs all zero: %s, liveness (immediate, eventual) = (%d, %d)",
              std::string(to_string(t.terminal.equilibrium)).c_str(), zero ? "yes" : "no", e.immediate_liveness,
              e.eventual_liveness),
          {}};
}

std::vector<ValidatedModel> random_models(std::uint64_t seed, int count, double band) {
  std::mt19937_64 rng(seed);
  std::vector<ValidatedModel> models;
  for (int i = 0; i < count; ++i) models.push_back(require_valid(oracle::random_model(rng, band)));
  return models;
}

// 5. closed-form classifier against the simulator on random models
Outcome classifier_agreement() {
  constexpr double kBand = 0.02;
  const auto models = random_models(505, 1000, kBand);
  const auto report = discrepancy_report(models, kBand);
  std::map<std::string, int> causes;
  std::map<std::string, int> pairs;
  bool all_diagnosed = true;
  int premise_total = 0, premise_agree = 0, positive_total = 0, positive_agree = 0;
  for (const auto& row : report.rows) {
    const auto& p = models[row.index].payoffs();
    // V_H > 0 once only the honest side is pivotal, and V_B > V_H once only the Byzantine side is
    const double accepted = p.reward - p.check_cost - p.send_cost;
    const bool positive = accepted > 0;
    const bool premise = accepted >= p.check_cost;
    positive_total += positive;
    positive_agree += positive && row.agree;
    premise_total += premise;
    premise_agree += premise && row.agree;
    if (row.agree) continue;
    all_diagnosed = all_diagnosed && row.cause != DiscrepancyCause::Unexplained;
    ++causes[std::string(to_string(row.cause))];
    ++pairs[analytic_label(row.analytic) + " -> " + std::string(to_string(row.simulated.equilibrium))];
  }
  Outcome o;
  o.pass = report.agreement_rate() >= 0.99 && all_diagnosed;
  o.detail = fmt("agreement %.1f%% (%zu/%zu, need >= 99%%), every disagreement diagnosed: %s",
                 100 * report.agreement_rate(), report.agreements(), report.rows.size(), all_diagnosed ? "yes" : "no");
  for (const auto& [cause, n] : causes) o.notes.push_back(fmt("%4d  cause: %s", n, cause.c_str()));
  for (const auto& [pair, n] : pairs) o.notes.push_back(fmt("%4d  analytic -> simulated: %s", n, pair.c_str()));
  o.notes.push_back(fmt("agreement when R - c_check - c_send > 0: %d/%d", positive_agree, positive_total));
  o.notes.push_back(fmt("agreement when R - c_check - c_send >= c_check: %d/%d", premise_agree, premise_total));
  return o;
}

// 6. full assortativity: stasis when both sides are pivotal, otherwise pivotality decides
Outcome full_assortativity() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int both = 0, both_static = 0, honest = 0, honest_ok = 0, byz = 0, byz_ok = 0;
  int positive = 0, positive_ok = 0;  // one-sided initials with R - c_check - c_send > 0
  for (int i = 0; i < 1000; ++i) {
    ModelConfig c;
    c.payoffs = oracle::random_benchmark_payoffs(rng);
    c.protocol.committee_size = 4 + static_cast<int>(u(rng) * 97);
    c.protocol.threshold = 1 + static_cast<int>(u(rng) * c.protocol.committee_size);
    c.belief.assortativity = 1.0;
    c.initial_honest_fraction = u(rng);
    const auto model = require_valid(c);
    const auto t = simulate_mean_field(model, default_offset(model.payoffs()));
    const bool accepted_pays = c.payoffs.reward - c.payoffs.check_cost - c.payoffs.send_cost > 0;
    const auto regime = t.states.front().regime;
    if (accepted_pays && (regime == PivotalityRegime::HonestOnlyPivotal || regime == PivotalityRegime::ByzantineOnlyPivotal)) {
      ++positive;
      positive_ok += t.terminal.equilibrium == (regime == PivotalityRegime::HonestOnlyPivotal
                                                    ? EquilibriumClass::HonestStable
                                                    : EquilibriumClass::ByzantineStable);
    }
    switch (regime) {
      case PivotalityRegime::BothPivotal: {
        ++both;
        double drift = 0;
        for (const auto& s : t.states) drift = std::max(drift, std::abs(s.honest_fraction - c.initial_honest_fraction));
        both_static += drift == 0.0;
        break;
      }
      case PivotalityRegime::HonestOnlyPivotal:
        ++honest;
        honest_ok += t.terminal.equilibrium == EquilibriumClass::HonestStable;
        break;
      case PivotalityRegime::ByzantineOnlyPivotal:
        ++byz;
        byz_ok += t.terminal.equilibrium == EquilibriumClass::ByzantineStable;
        break;
      case PivotalityRegime::NeitherPivotal: break;
    }
  }
  const bool ok = both > 0 && honest > 0 && byz > 0 && both_static == both && honest_ok == honest && byz_ok == byz;
  return {ok,
          fmt("both-pivotal max|x_t - x1| = 0 in %d/%d; honest-only -> HonestStable %d/%d; Byzantine-only -> "
              "ByzantineStable %d/%d",
              both_static, both, honest_ok, honest, byz_ok, byz),
          {fmt("one-sided initials with R - c_check - c_send > 0 reach the pivotal side: %d/%d", positive_ok, positive),
           "with m = 1 the lone pivotal side earns R - c_check - c_send against 0, so it only wins when that is positive"}};
}

// 7. matching oracle on the 3 x 3 (m, x) grid
Outcome matching_oracle() {
  bool ok = true;
  double worst = 0;
  std::uint64_t cell = 0;
  for (double m : {0.0, 0.5, 1.0}) {
    for (double x : {0.25, 0.5, 0.75}) {
      const auto pop = AgentPopulation::with_fraction(1000, x, 0);
      const auto stats = run_matching(pop, Belief{m}, 100, derive_seed(707, cell++));
      const auto dev = matching_deviation(stats, Belief{m}, x, 1000);
      ok = ok && stats.trials == 100000 && dev.pass;
      worst = std::max({worst, std::abs(dev.z_hh_corrected), std::abs(dev.z_bb_corrected)});
      if (m == 1.0) {
        ok = ok && stats.empirical_pi.pi_hh == 1.0 && stats.empirical_pi.pi_bb == 1.0 && dev.z_hh_corrected == 0.0 &&
             dev.z_bb_corrected == 0.0;
      }
    }
  }
  return {ok, fmt("9 cells x 1e5 agent-rounds, max |z| = %.2f (< 3), m = 1 cells exact", worst), {}};
}

// 8. Table 6 welfare values
Outcome welfare_values() {
  const auto model = require_valid(example_config(0.6));
  const double h = evaluate_equilibrium(EquilibriumClass::HonestStable, model).honest_agent_welfare;
  const double b = evaluate_equilibrium(EquilibriumClass::ByzantineStable, model).honest_agent_welfare;
  const double pw = evaluate_equilibrium(EquilibriumClass::PoolingStable, model).honest_agent_welfare;
  double worst = std::max({std::abs(h - 4), std::abs(b), std::abs(pw + 4.0 / 17.0)});
  std::mt19937_64 rng(808);
  for (int i = 0; i < 200; ++i) {
    auto c = oracle::random_model(rng, 0.0);
    const auto m = require_valid(c);
    const auto& p = c.payoffs;
    worst = std::max(worst, std::abs(evaluate_equilibrium(EquilibriumClass::HonestStable, m).honest_agent_welfare -
                                     (p.reward - p.check_cost - p.send_cost)));
    worst = std::max(worst, std::abs(evaluate_equilibrium(EquilibriumClass::ByzantineStable, m).honest_agent_welfare));
    worst = std::max(worst, std::abs(evaluate_equilibrium(EquilibriumClass::PoolingStable, m).honest_agent_welfare -
                                     (p.reward - p.check_cost - p.send_cost - (p.reward - p.send_cost) * closed_form_x_star(p))));
  }
  return {worst < 1e-12,
          fmt("example: honest %.15g, Byzantine %.15g, pooling %.15g (-4/17); max error %.3g over 200 models", h, b, pw,
              worst),
          {}};
}

// 9. terminal class does not depend on the update offset
Outcome offset_robustness() {
  const auto models = random_models(909, 200, 0.02);
  int identical = 0, premise = 0, premise_identical = 0;
  std::map<std::string, int> changes;
  for (const auto& model : models) {
    const double w0 = default_offset(model.payoffs()).value;
    const auto a = simulate_mean_field(model, {w0});
    const auto b = simulate_mean_field(model, {2 * w0});
    const auto c = simulate_mean_field(model, {10 * w0});
    const auto ca = a.terminal.equilibrium, cb = b.terminal.equilibrium, cc = c.terminal.equilibrium;
    const bool same = ca == cb && cb == cc;
    const auto& p = model.payoffs();
    if (p.reward - p.check_cost - p.send_cost >= p.check_cost) {
      ++premise;
      premise_identical += same;
    }
    if (same) {
      ++identical;
      continue;
    }
    // diagnose the run that left the w0 class, against the closed-form verdict
    const auto& odd = cb != ca ? b : c;
    const auto cause = diagnose_discrepancy(classify_analytic(model, 0.02), odd);
    ++changes[std::string(to_string(ca)) + " / " + std::string(to_string(cb)) + " / " + std::string(to_string(cc)) +
              " (" + std::string(to_string(cause)) + ")"];
  }
  Outcome o{identical == 200, fmt("identical classes across {w0, 2w0, 10w0}: %d/200", identical), {}};
  for (const auto& [k, n] : changes) o.notes.push_back(fmt("%4d  w0 / 2w0 / 10w0: %s", n, k.c_str()));
  o.notes.push_back(fmt("identical when R - c_check - c_send >= c_check: %d/%d", premise_identical, premise));
  return o;
}

// 10. sweep output and agent trajectories are reproducible
Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "bftevo_acceptance";
  std::filesystem::create_directories(dir);
  auto sweep_to = [&](const std::string& name) {
    std::ostringstream out, err;
    const int code = cli::run({"sweep", "--axis", "x1:0:1:21", "--axis", "m:0:0.9:4", "--mode", "agents",
                               "--seeds-per-cell", "3", "-N", "60", "--threshold", "18", "--seed", "1234", "--out",
                               (dir / name).string()},
                              out, err);
    std::ifstream in(dir / name, std::ios::binary);
    return std::make_pair(code, std::string(std::istreambuf_iterator<char>(in), {}));
  };
  const auto a = sweep_to("a.csv");
  const auto b = sweep_to("b.csv");
  std::filesystem::remove_all(dir);
  const bool files_equal = a.first == 0 && b.first == 0 && !a.second.empty() && a.second == b.second;

  bool trajectories_equal = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = example_config(0.55, 200, 60);
    c.rng_seed = seed;
    const auto model = require_valid(c);
    const auto t1 = simulate_agents(model, default_offset(model.payoffs()));
    const auto t2 = simulate_agents(model, default_offset(model.payoffs()));
    trajectories_equal = trajectories_equal && t1.states.size() == t2.states.size();
    for (std::size_t i = 0; trajectories_equal && i < t1.states.size(); ++i) {
      trajectories_equal = t1.states[i].honest_count == t2.states[i].honest_count &&
                           t1.states[i].honest_fraction == t2.states[i].honest_fraction;
    }
  }
  return {files_equal && trajectories_equal,
          fmt("sweep CSV byte-identical: %s (%zu bytes); agent trajectories bit-identical for 20 seeds: %s",
              files_equal ? "yes" : "no", a.second.size(), trajectories_equal ? "yes" : "no"),
          {}};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"threshold oracle", threshold_oracle},
      {"payoff gap identity", gap_identity},
      {"convergence to honest and Byzantine", convergence_to_honest},
      {"frozen liveness failure", frozen_liveness},
      {"classifier-simulator agreement", classifier_agreement},
      {"full assortativity stasis and pivotality outcomes", full_assortativity},
      {"matching oracle", matching_oracle},
      {"welfare values", welfare_values},
      {"offset robustness", offset_robustness},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto o = criteria[i].second();
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
