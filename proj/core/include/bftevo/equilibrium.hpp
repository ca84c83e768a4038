#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bftevo/dynamics.hpp"
#include "bftevo/model.hpp"

namespace bftevo {

/// Half-width of the band around an analytic region boundary inside which the
/// classifier declines to answer (and inside which x1 counts as the interior
/// fixed point).
inline constexpr double kDefaultBoundaryTol = 1e-6;

/// Honest/Byzantine frontier in the both-pivotal regime:
/// (R - c_send + kappa) / (2R - 2c_send + kappa). Requires R > c_send.
double threshold_x_star(const PayoffParams& payoffs);

/// Same frontier from the policy ratios: 1/2 + (1/2) / (2 alpha - 2 beta + 1).
double threshold_x_star(const PolicyRatios& ratios);

/// Which initial-condition clause produced an analytic verdict.
enum class InitialCondition {
  BothPivotalHonest = 1,       // x1 > max(x*, gamma), Byzantine side pivotal, m != 1
  ByzantineNotPivotal = 2,     // x1 >= gamma, x1 > 1 - gamma
  ByzantineDrift = 3,          // x1 < x* with both sides pivotal, or only Byzantine pivotal
  InteriorFixedPoint = 4,      // x1 = x* with both sides pivotal
  NeitherPivotal = 5,          // liveness failure
  FullAssortativity = 6,       // m = 1: outcome set by initial pivotality alone
};

/// "(1)" .. "(6)"
std::string case_label(InitialCondition c);

struct AnalyticClassification {
  std::optional<EquilibriumClass> equilibrium;  // empty when boundary-ambiguous
  InitialCondition clause = InitialCondition::NeitherPivotal;
  std::optional<double> ambiguous_boundary;     // the boundary x1 sits on, if any

  [[nodiscard]] bool ambiguous() const noexcept { return ambiguous_boundary.has_value(); }
};

/// Closed-form prediction of the terminal class from the initial conditions.
/// Pivotality uses weak inequalities (count >= nu). When x1 is within
/// `boundary_tol` of gamma or 1 - gamma the verdict is withheld.
AnalyticClassification classify_analytic(const ValidatedModel& model, double boundary_tol = kDefaultBoundaryTol);

/// The same regions written purely in (alpha, beta, gamma), independent of
/// classify_analytic's code path.
AnalyticClassification classify_policy_regions(const PolicyRatios& ratios, double assortativity,
                                               double initial_honest_fraction,
                                               double boundary_tol = kDefaultBoundaryTol);

struct EvaluationReport {
  bool immediate_safety = false;
  bool eventual_safety = false;
  bool immediate_liveness = false;
  bool eventual_liveness = false;
  bool eventual_validity = false;
  double honest_agent_welfare = 0.0;  // per validator per round; NaN when no equilibrium was reached
  std::string clause_label;           // "(1)".."(6)", empty for NotConverged
  std::string table_row;              // "Honest(1)", "Byzantine(2)", "Pooling", "Frozen", ...
};

/// Security and welfare verdicts for a reached (or predicted) equilibrium.
/// Honest rows are split by whether the Byzantine side was initially
/// pivotal, Byzantine rows by whether the honest side was.
EvaluationReport evaluate_equilibrium(EquilibriumClass equilibrium, const ValidatedModel& model);

/// Honest-agent welfare at the interior fixed point:
/// R - c_check - c_send - (R - c_send) * x*.
double pooling_welfare(const PayoffParams& payoffs);

/// Lebesgue measure in x1 of each analytic region, for m != 1 unless noted.
struct RegionWidths {
  double honest_both_pivotal = 0.0;        // (max(x*, gamma), 1 - gamma]
  double honest_byzantine_not_pivotal = 0.0;  // x1 > max(1 - gamma, gamma)
  double byzantine_both_pivotal = 0.0;     // [gamma, min(x*, 1 - gamma))
  double byzantine_honest_not_pivotal = 0.0;  // x1 < min(1 - gamma, gamma)
  double pooling_full_assortativity = 0.0; // [gamma, 1 - gamma] when m = 1
  double frozen = 0.0;                     // (1 - gamma, gamma) when gamma > 1/2

  [[nodiscard]] double honest_total() const noexcept { return honest_both_pivotal + honest_byzantine_not_pivotal; }
  [[nodiscard]] double byzantine_total() const noexcept {
    return byzantine_both_pivotal + byzantine_honest_not_pivotal;
  }
};

RegionWidths region_widths(double x_star, double gamma);

enum class Sign { Negative = -1, Zero = 0, Positive = 1 };
std::string_view to_string(Sign s);

struct SensitivityReport {
  PolicyRatios ratios;
  double x_star = 0.0;
  double d_threshold_d_alpha = 0.0;     // analytic
  double d_threshold_d_alpha_fd = 0.0;  // central finite difference
  double d_threshold_d_beta = 0.0;
  double d_threshold_d_beta_fd = 0.0;
  Sign alpha_sign = Sign::Zero;
  Sign beta_sign = Sign::Zero;
  double gamma_step = 0.0;              // one extra vote: 1/N
  RegionWidths widths;                  // at gamma
  RegionWidths widths_perturbed;        // at gamma + gamma_step
  RegionWidths width_deltas;            // perturbed - base
  bool honest_region_boundary_only = false;  // only x1 = 1 is honest
  bool benchmark_ordering = false;
};

inline constexpr double kFiniteDifferenceStep = 1e-6;

SensitivityReport policy_sensitivity(const PayoffParams& payoffs, const ProtocolParams& protocol);

enum class DiscrepancyCause {
  None,
  AnalyticBoundaryBand,
  HonestOnlyRegimeFavoursByzantine,  // Vh <= Vb reached while only the honest side was pivotal
  ByzantineOnlyRegimeFavoursHonest,  // Vh >= Vb reached while only the Byzantine side was pivotal
  RegimeBoundaryOscillation,
  Unexplained,
};

std::string_view to_string(DiscrepancyCause c);

struct DiscrepancyRow {
  std::size_t index = 0;
  AnalyticClassification analytic;
  TerminalInfo simulated;
  bool agree = false;
  DiscrepancyCause cause = DiscrepancyCause::None;
};

struct DiscrepancyReport {
  std::vector<DiscrepancyRow> rows;

  [[nodiscard]] std::size_t agreements() const noexcept;
  [[nodiscard]] std::size_t disagreements() const noexcept { return rows.size() - agreements(); }
  [[nodiscard]] double agreement_rate() const noexcept;
};

/// Diagnoses why a mean-field trajectory disagrees with the analytic class.
DiscrepancyCause diagnose_discrepancy(const AnalyticClassification& analytic, const Trajectory& trajectory);

/// Runs classify_analytic and simulate_mean_field (default offset scaled by
/// `offset_scale`) for every model. Rows are ordered by model index
/// regardless of `threads`.
DiscrepancyReport discrepancy_report(std::span<const ValidatedModel> models, double boundary_tol = kDefaultBoundaryTol,
                                     double offset_scale = 1.0, unsigned threads = 0);

}  // namespace bftevo
