#pragma once

#include <array>
#include <cstdint>

#include "bftevo/dynamics.hpp"
#include "bftevo/payoff.hpp"

namespace bftevo {

/// Empirical same-strategy meeting frequencies from the assortative matching process.
struct MatchStats {
  std::int64_t trials = 0;
  std::array<std::int64_t, 2> trials_by_strategy{};           // indexed by Strategy
  std::array<std::int64_t, 2> same_strategy_matches{};        // indexed by Strategy
  std::int64_t fallback_count = 0;  // sole member of its strategy drew the assortative branch
  MeetingProbabilities empirical_pi;
  MeetingProbabilities std_errors;  // binomial, from the empirical frequencies
};

/// Each round every agent is matched once: with probability m to a uniformly
/// random other agent of its own strategy, otherwise to a uniformly random
/// other agent. Self-matches never occur. An agent with no same-strategy
/// partner falls back to the uniform branch and bumps `fallback_count`.
/// Throws std::invalid_argument for fewer than 2 agents or negative rounds.
MatchStats run_matching(const AgentPopulation& population, const Belief& belief, int rounds, std::uint64_t seed);

/// Finite-population meeting probabilities with self-exclusion:
/// same-strategy share m + (1 - m)(k - 1)/(N - 1) for a group of size k,
/// or 0 when the agent is alone in its group.
MeetingProbabilities corrected_meeting_probabilities(const Belief& belief, int honest_count, int population_size);

struct DeviationReport {
  MeetingProbabilities mean_field_target;
  MeetingProbabilities corrected_target;
  // z-scores of the honest and Byzantine same-strategy frequencies; the
  // cross-strategy frequencies are complements and share |z|.
  double z_hh_mean_field = 0.0;
  double z_bb_mean_field = 0.0;
  double z_hh_corrected = 0.0;
  double z_bb_corrected = 0.0;
  bool pass = false;  // both corrected |z| < 3
};

inline constexpr double kZScoreLimit = 3.0;

/// z = (p_hat - p) / sqrt(p (1 - p) / n); for a degenerate target p in {0, 1}
/// the score is 0 on an exact hit and infinite otherwise.
double binomial_z_score(double empirical, double target, std::int64_t trials);

DeviationReport matching_deviation(const MatchStats& stats, const Belief& belief, double honest_fraction,
                                 int population_size);

}  // namespace bftevo
