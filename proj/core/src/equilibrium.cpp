#include "bftevo/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bftevo/parallel.hpp"
#include "bftevo/payoff.hpp"

namespace bftevo {

double threshold_x_star(const PayoffParams& p) {
  const double margin = p.reward - p.send_cost;
  return (margin + p.penalty) / (2.0 * margin + p.penalty);
}

double threshold_x_star(const PolicyRatios& r) {
  return 0.5 + 0.5 / (2.0 * r.alpha - 2.0 * r.beta + 1.0);
}

std::string case_label(InitialCondition c) {
  return "(" + std::to_string(static_cast<int>(c)) + ")";
}

namespace {

std::optional<double> nearby_boundary(double x, double gamma, double tol) {
  if (std::abs(x - gamma) < tol) return gamma;
  if (std::abs(x - (1.0 - gamma)) < tol) return 1.0 - gamma;
  return std::nullopt;
}

AnalyticClassification verdict(EquilibriumClass c, InitialCondition clause) {
  return {c, clause, std::nullopt};
}

}  // namespace

AnalyticClassification classify_analytic(const ValidatedModel& model, double boundary_tol) {
  const auto& proto = model.protocol();
  const double x = model.initial_honest_fraction();
  const double n = proto.committee_size;
  const double nu = proto.threshold;

  if (auto b = nearby_boundary(x, proto.pivotality_rate(), boundary_tol)) {
    return {std::nullopt, InitialCondition::NeitherPivotal, b};
  }

  const bool honest_pivotal = n * x >= nu;
  const bool byzantine_pivotal = n * (1.0 - x) >= nu;
  if (!honest_pivotal && !byzantine_pivotal) return verdict(EquilibriumClass::Frozen, InitialCondition::NeitherPivotal);

  if (model.belief().assortativity == 1.0) {
    // Vh = Vb whenever both sides are pivotal, so x stays at x1
    if (honest_pivotal && byzantine_pivotal) {
      return verdict(EquilibriumClass::PoolingStable, InitialCondition::FullAssortativity);
    }
    return verdict(honest_pivotal ? EquilibriumClass::HonestStable : EquilibriumClass::ByzantineStable,
                   InitialCondition::FullAssortativity);
  }

  if (!byzantine_pivotal) return verdict(EquilibriumClass::HonestStable, InitialCondition::ByzantineNotPivotal);
  if (!honest_pivotal) return verdict(EquilibriumClass::ByzantineStable, InitialCondition::ByzantineDrift);

  const double x_star = threshold_x_star(model.payoffs());
  if (std::abs(x - x_star) < boundary_tol) {
    return verdict(EquilibriumClass::PoolingStable, InitialCondition::InteriorFixedPoint);
  }
  if (x > x_star) return verdict(EquilibriumClass::HonestStable, InitialCondition::BothPivotalHonest);
  return verdict(EquilibriumClass::ByzantineStable, InitialCondition::ByzantineDrift);
}

AnalyticClassification classify_policy_regions(const PolicyRatios& ratios, double m, double x, double tol) {
  const double g = ratios.gamma;
  if (auto b = nearby_boundary(x, g, tol)) return {std::nullopt, InitialCondition::NeitherPivotal, b};

  if (m == 1.0) {
    if (x >= g && x > 1.0 - g) return verdict(EquilibriumClass::HonestStable, InitialCondition::FullAssortativity);
    if (x < g && x <= 1.0 - g) return verdict(EquilibriumClass::ByzantineStable, InitialCondition::FullAssortativity);
    if (g <= x && x <= 1.0 - g) return verdict(EquilibriumClass::PoolingStable, InitialCondition::FullAssortativity);
    return verdict(EquilibriumClass::Frozen, InitialCondition::NeitherPivotal);
  }

  const double xs = threshold_x_star(ratios);
  if (g <= x && x <= 1.0 - g && std::abs(x - xs) < tol) {
    return verdict(EquilibriumClass::PoolingStable, InitialCondition::InteriorFixedPoint);
  }
  if (1.0 - g >= x && x > std::max(xs, g)) return verdict(EquilibriumClass::HonestStable, InitialCondition::BothPivotalHonest);
  if (x > std::max(1.0 - g, g)) return verdict(EquilibriumClass::HonestStable, InitialCondition::ByzantineNotPivotal);
  if (g <= x && x < std::min(xs, 1.0 - g)) return verdict(EquilibriumClass::ByzantineStable, InitialCondition::ByzantineDrift);
  if (x < std::min(1.0 - g, g)) return verdict(EquilibriumClass::ByzantineStable, InitialCondition::ByzantineDrift);
  if (1.0 - g < x && x < g) return verdict(EquilibriumClass::Frozen, InitialCondition::NeitherPivotal);
  throw std::logic_error("classify_policy_regions: x1 matched no region outside the boundary bands");
}

double pooling_welfare(const PayoffParams& p) {
  return p.reward - p.check_cost - p.send_cost - (p.reward - p.send_cost) * threshold_x_star(p);
}

EvaluationReport evaluate_equilibrium(EquilibriumClass equilibrium, const ValidatedModel& model) {
  const auto& p = model.payoffs();
  const auto initial = pivotality_regime(model.initial_honest_fraction(), model.protocol());
  const bool full_assortativity = model.belief().assortativity == 1.0;
  auto clause = [&](InitialCondition c) {
    return case_label(full_assortativity ? InitialCondition::FullAssortativity : c);
  };

  EvaluationReport r;
  switch (equilibrium) {
    case EquilibriumClass::HonestStable:
      r.eventual_safety = r.immediate_liveness = r.eventual_liveness = r.eventual_validity = true;
      r.honest_agent_welfare = p.reward - p.check_cost - p.send_cost;
      if (byzantine_pivotal(initial)) {
        r.table_row = "Honest(1)";
        r.clause_label = clause(InitialCondition::BothPivotalHonest);
      } else {
        r.immediate_safety = true;
        r.table_row = "Honest(2)";
        r.clause_label = clause(InitialCondition::ByzantineNotPivotal);
      }
      break;
    case EquilibriumClass::ByzantineStable:
      r.honest_agent_welfare = 0.0;
      r.clause_label = clause(InitialCondition::ByzantineDrift);
      if (honest_pivotal(initial)) {
        r.immediate_liveness = true;
        r.table_row = "Byzantine(1)";
      } else {
        r.table_row = "Byzantine(2)";
      }
      break;
    case EquilibriumClass::PoolingStable:
      r.immediate_liveness = r.eventual_liveness = true;
      r.honest_agent_welfare = pooling_welfare(p);
      r.clause_label = clause(InitialCondition::InteriorFixedPoint);
      r.table_row = "Pooling";
      break;
    case EquilibriumClass::Frozen:
      r.honest_agent_welfare = 0.0;
      r.clause_label = case_label(InitialCondition::NeitherPivotal);
      r.table_row = "Frozen";
      break;
    case EquilibriumClass::NotConverged:
      r.honest_agent_welfare = std::numeric_limits<double>::quiet_NaN();
      r.table_row = "NotConverged";
      break;
  }
  return r;
}

RegionWidths region_widths(double xs, double g) {
  RegionWidths w;
  w.honest_both_pivotal = std::max(0.0, (1.0 - g) - std::max(xs, g));
  w.honest_byzantine_not_pivotal = std::max(0.0, 1.0 - std::max(1.0 - g, g));
  w.byzantine_both_pivotal = std::max(0.0, std::min(xs, 1.0 - g) - g);
  w.byzantine_honest_not_pivotal = std::max(0.0, std::min(1.0 - g, g));
  w.pooling_full_assortativity = std::max(0.0, 1.0 - 2.0 * g);
  w.frozen = std::max(0.0, 2.0 * g - 1.0);
  return w;
}

std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Negative: return "negative";
    case Sign::Zero: return "zero";
    case Sign::Positive: return "positive";
  }
  return "zero";
}

namespace {

Sign sign_of(double v) {
  return v < 0.0 ? Sign::Negative : (v > 0.0 ? Sign::Positive : Sign::Zero);
}

RegionWidths difference(const RegionWidths& a, const RegionWidths& b) {
  return {a.honest_both_pivotal - b.honest_both_pivotal,
          a.honest_byzantine_not_pivotal - b.honest_byzantine_not_pivotal,
          a.byzantine_both_pivotal - b.byzantine_both_pivotal,
          a.byzantine_honest_not_pivotal - b.byzantine_honest_not_pivotal,
          a.pooling_full_assortativity - b.pooling_full_assortativity,
          a.frozen - b.frozen};
}

}  // namespace

SensitivityReport policy_sensitivity(const PayoffParams& payoffs, const ProtocolParams& protocol) {
  SensitivityReport s;
  s.ratios = to_policy_ratios(payoffs, protocol);
  s.benchmark_ordering = payoffs.benchmark_ordering();
  s.x_star = threshold_x_star(s.ratios);

  const double d = 2.0 * s.ratios.alpha - 2.0 * s.ratios.beta + 1.0;
  s.d_threshold_d_alpha = -1.0 / (d * d);
  s.d_threshold_d_beta = 1.0 / (d * d);

  const double h = kFiniteDifferenceStep;
  auto at = [&](double da, double db) {
    return threshold_x_star(PolicyRatios{s.ratios.alpha + da, s.ratios.beta + db, s.ratios.gamma});
  };
  s.d_threshold_d_alpha_fd = (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h);
  s.d_threshold_d_beta_fd = (at(0.0, h) - at(0.0, -h)) / (2.0 * h);
  s.alpha_sign = sign_of(s.d_threshold_d_alpha);
  s.beta_sign = sign_of(s.d_threshold_d_beta);

  s.gamma_step = 1.0 / protocol.committee_size;
  const double g_next = std::min(1.0, s.ratios.gamma + s.gamma_step);
  s.widths = region_widths(s.x_star, s.ratios.gamma);
  s.widths_perturbed = region_widths(s.x_star, g_next);
  s.width_deltas = difference(s.widths_perturbed, s.widths);
  // x1 = 1 always clears the threshold while the Byzantine side is empty
  s.honest_region_boundary_only = s.widths.honest_total() == 0.0;
  return s;
}

std::string_view to_string(DiscrepancyCause c) {
  switch (c) {
    case DiscrepancyCause::None: return "none";
    case DiscrepancyCause::AnalyticBoundaryBand: return "x1 inside analytic boundary band";
    case DiscrepancyCause::HonestOnlyRegimeFavoursByzantine:
      return "honest-only regime reached with V_H <= V_B (honest payoff too low)";
    case DiscrepancyCause::ByzantineOnlyRegimeFavoursHonest:
      return "Byzantine-only regime reached with V_H >= V_B (Byzantine payoff too low)";
    case DiscrepancyCause::RegimeBoundaryOscillation: return "trajectory oscillates across a pivotality boundary";
    case DiscrepancyCause::Unexplained: return "unexplained";
  }
  return "unexplained";
}

std::size_t DiscrepancyReport::agreements() const noexcept {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.agree; }));
}

double DiscrepancyReport::agreement_rate() const noexcept {
  return rows.empty() ? 1.0 : static_cast<double>(agreements()) / static_cast<double>(rows.size());
}

DiscrepancyCause diagnose_discrepancy(const AnalyticClassification& analytic, const Trajectory& trajectory) {
  if (analytic.ambiguous()) return DiscrepancyCause::AnalyticBoundaryBand;
  if (analytic.equilibrium == trajectory.terminal.equilibrium) return DiscrepancyCause::None;
  for (const auto& s : trajectory.states) {
    if (s.regime == PivotalityRegime::HonestOnlyPivotal && s.expected.v_h <= s.expected.v_b) {
      return DiscrepancyCause::HonestOnlyRegimeFavoursByzantine;
    }
    if (s.regime == PivotalityRegime::ByzantineOnlyPivotal && s.expected.v_h >= s.expected.v_b) {
      return DiscrepancyCause::ByzantineOnlyRegimeFavoursHonest;
    }
  }
  int switches = 0;
  for (std::size_t i = 1; i < trajectory.states.size(); ++i) {
    switches += trajectory.states[i].regime != trajectory.states[i - 1].regime;
  }
  if (trajectory.terminal.equilibrium == EquilibriumClass::NotConverged && switches >= 2) {
    return DiscrepancyCause::RegimeBoundaryOscillation;
  }
  return DiscrepancyCause::Unexplained;
}

DiscrepancyReport discrepancy_report(std::span<const ValidatedModel> models, double boundary_tol,
                                     double offset_scale, unsigned threads) {
  DiscrepancyReport report;
  report.rows.resize(models.size());
  parallel_for_index(models.size(), threads, [&](std::size_t i) {
    const auto& model = models[i];
    auto& row = report.rows[i];
    row.index = i;
    row.analytic = classify_analytic(model, boundary_tol);
    const UpdateOffset offset{default_offset(model.payoffs()).value * offset_scale};
    const auto trajectory = simulate_mean_field(model, offset);
    row.simulated = trajectory.terminal;
    row.agree = row.analytic.equilibrium == trajectory.terminal.equilibrium;
    row.cause = diagnose_discrepancy(row.analytic, trajectory);
  });
  return report;
}

}  // namespace bftevo
