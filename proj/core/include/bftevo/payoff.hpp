#pragma once

#include <string_view>

#include "bftevo/model.hpp"

namespace bftevo {

/// Which strategy groups can clear the vote threshold on their own.
enum class PivotalityRegime { BothPivotal, HonestOnlyPivotal, ByzantineOnlyPivotal, NeitherPivotal };

std::string_view to_string(PivotalityRegime r);

/// Mean-field regime: honest side pivotal iff N*x >= nu, Byzantine side iff N*(1-x) >= nu.
/// Evaluated on reals, no rounding of N*x.
PivotalityRegime pivotality_regime(double honest_fraction, const ProtocolParams& protocol);

/// Same rule on exact integer head counts (agent-based path).
PivotalityRegime pivotality_regime(int honest_count, const ProtocolParams& protocol);

/// True when N*x or N*(1-x) lies within `tol` of nu, where the weak/strict
/// reading of the pivotality rule changes the regime.
bool on_pivotality_boundary(double honest_fraction, const ProtocolParams& protocol, double tol = 1e-12);

[[nodiscard]] constexpr bool honest_pivotal(PivotalityRegime r) noexcept {
  return r == PivotalityRegime::BothPivotal || r == PivotalityRegime::HonestOnlyPivotal;
}
[[nodiscard]] constexpr bool byzantine_pivotal(PivotalityRegime r) noexcept {
  return r == PivotalityRegime::BothPivotal || r == PivotalityRegime::ByzantineOnlyPivotal;
}

/// Payoff of a validator with strategy i meeting a proposer with strategy j.
struct ConditionalPayoffs {
  double v_hh = 0.0;
  double v_hb = 0.0;
  double v_bh = 0.0;
  double v_bb = 0.0;
};

struct MeetingProbabilities {
  double pi_hh = 0.0;
  double pi_hb = 0.0;
  double pi_bh = 0.0;
  double pi_bb = 0.0;
};

struct ExpectedPayoffs {
  double v_h = 0.0;
  double v_b = 0.0;
};

ConditionalPayoffs conditional_payoffs(const PayoffParams& payoffs, PivotalityRegime regime);

/// Subjective meeting probabilities under assortativity m at honest fraction x.
MeetingProbabilities meeting_probabilities(const Belief& belief, double honest_fraction);

/// Belief-weighted expected payoff of each strategy. Proposers are paid like
/// same-strategy validators, so these are also the proposer payoffs.
ExpectedPayoffs expected_payoffs(const PayoffParams& payoffs, const Belief& belief, double honest_fraction,
                                 PivotalityRegime regime);

}  // namespace bftevo
