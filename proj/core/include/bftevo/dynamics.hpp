#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bftevo/model.hpp"
#include "bftevo/payoff.hpp"

namespace bftevo {

/// Constant added to both expected payoffs before the imitative ratio so that
/// the weights are non-negative. Fixed points and drift direction are unchanged.
struct UpdateOffset {
  double value = 0.0;
};

/// check_cost + penalty: the negation of the most negative conditional payoff.
UpdateOffset default_offset(const PayoffParams& payoffs);

struct PopulationState {
  int round = 1;
  double honest_fraction = 0.0;
  PivotalityRegime regime = PivotalityRegime::NeitherPivotal;
  ExpectedPayoffs expected;
  std::optional<int> honest_count;  // agent-based runs only
};

struct TerminalInfo {
  EquilibriumClass equilibrium = EquilibriumClass::NotConverged;
  double final_fraction = 0.0;
  int rounds = 0;  // index of the last recorded round
  bool converged = false;
  bool frozen = false;
};

struct Trajectory {
  std::vector<PopulationState> states;
  TerminalInfo terminal;
};

/// Next-round honest fraction x * Vh / (x * Vh + (1 - x) * Vb) on shifted weights.
/// Returns x unchanged when the two payoffs are equal. Returns nullopt when
/// both shifted weights vanish at an interior x (a frozen step).
/// Throws std::invalid_argument if a shifted weight is negative.
std::optional<double> imitative_update(double honest_fraction, const ExpectedPayoffs& expected,
                                       UpdateOffset offset);

/// |Vh - Vb| relative to the update denominator; the per-unit drift rate of the map.
double relative_drift(double honest_fraction, const ExpectedPayoffs& expected, UpdateOffset offset);

Trajectory simulate_mean_field(const ValidatedModel& model, UpdateOffset offset);

class AgentPopulation {
 public:
  AgentPopulation(std::vector<Strategy> strategies, std::uint64_t rng_seed);

  /// round(N * x) honest agents, ties toward honest; honest agents come first.
  static AgentPopulation with_fraction(int size, double honest_fraction, std::uint64_t rng_seed);

  [[nodiscard]] const std::vector<Strategy>& strategies() const noexcept { return strategies_; }
  [[nodiscard]] std::uint64_t rng_seed() const noexcept { return rng_seed_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(strategies_.size()); }
  [[nodiscard]] int honest_count() const noexcept;
  [[nodiscard]] double honest_fraction() const noexcept;

  void set(std::size_t i, Strategy s) { strategies_.at(i) = s; }

 private:
  std::vector<Strategy> strategies_;
  std::uint64_t rng_seed_;
};

int initial_honest_count(int size, double honest_fraction);

/// Stochastic counterpart of simulate_mean_field: every agent independently
/// turns honest with the imitative probability computed from the previous
/// round. Bit-reproducible from model.config().rng_seed.
Trajectory simulate_agents(const ValidatedModel& model, UpdateOffset offset);

/// Root of Vh - Vb on (0, 1) in the both-pivotal regime, by bisection to 1e-12.
/// nullopt if there is no sign change (including m = 1, where every x is fixed).
std::optional<double> solve_interior_fixed_point(const PayoffParams& payoffs, const Belief& belief);

}  // namespace bftevo
