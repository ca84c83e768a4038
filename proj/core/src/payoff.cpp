#include "bftevo/payoff.hpp"

#include <cmath>

namespace bftevo {

std::string_view to_string(PivotalityRegime r) {
  switch (r) {
    case PivotalityRegime::BothPivotal: return "BothPivotal";
    case PivotalityRegime::HonestOnlyPivotal: return "HonestOnlyPivotal";
    case PivotalityRegime::ByzantineOnlyPivotal: return "ByzantineOnlyPivotal";
    case PivotalityRegime::NeitherPivotal: return "NeitherPivotal";
  }
  return "Unknown";
}

namespace {

constexpr PivotalityRegime combine(bool honest, bool byzantine) {
  if (honest && byzantine) return PivotalityRegime::BothPivotal;
  if (honest) return PivotalityRegime::HonestOnlyPivotal;
  if (byzantine) return PivotalityRegime::ByzantineOnlyPivotal;
  return PivotalityRegime::NeitherPivotal;
}

}  // namespace

PivotalityRegime pivotality_regime(double honest_fraction, const ProtocolParams& protocol) {
  const double n = protocol.committee_size;
  const double nu = protocol.threshold;
  return combine(n * honest_fraction >= nu, n * (1.0 - honest_fraction) >= nu);
}

PivotalityRegime pivotality_regime(int honest_count, const ProtocolParams& protocol) {
  return combine(honest_count >= protocol.threshold,
                 protocol.committee_size - honest_count >= protocol.threshold);
}

bool on_pivotality_boundary(double honest_fraction, const ProtocolParams& protocol, double tol) {
  const double n = protocol.committee_size;
  const double nu = protocol.threshold;
  return std::abs(n * honest_fraction - nu) <= tol || std::abs(n * (1.0 - honest_fraction) - nu) <= tol;
}

ConditionalPayoffs conditional_payoffs(const PayoffParams& p, PivotalityRegime regime) {
  const double accepted = p.reward - p.check_cost - p.send_cost;
  switch (regime) {
    case PivotalityRegime::BothPivotal:
      // every proposal is accepted; honest validators eat the penalty on invalid blocks
      return {accepted, -p.check_cost - p.penalty, -p.check_cost, accepted};
    case PivotalityRegime::HonestOnlyPivotal:
      // invalid proposals are rejected; Byzantine validators stay idle
      return {accepted, -p.check_cost, 0.0, 0.0};
    case PivotalityRegime::ByzantineOnlyPivotal:
      // valid proposals are rejected; honest validators stay idle
      return {0.0, -p.penalty, -p.check_cost, accepted};
    case PivotalityRegime::NeitherPivotal:
      return {};
  }
  return {};
}

MeetingProbabilities meeting_probabilities(const Belief& belief, double x) {
  const double m = belief.assortativity;
  return {m + (1.0 - m) * x, (1.0 - m) * (1.0 - x), (1.0 - m) * x, 1.0 - (1.0 - m) * x};
}

ExpectedPayoffs expected_payoffs(const PayoffParams& payoffs, const Belief& belief, double x,
                                 PivotalityRegime regime) {
  if (regime == PivotalityRegime::NeitherPivotal) return {};
  const auto v = conditional_payoffs(payoffs, regime);
  const auto pi = meeting_probabilities(belief, x);
  return {pi.pi_hh * v.v_hh + pi.pi_hb * v.v_hb, pi.pi_bh * v.v_bh + pi.pi_bb * v.v_bb};
}

}  // namespace bftevo
