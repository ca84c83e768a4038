#include "bftevo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bftevo/random.hpp"

namespace bftevo {

UpdateOffset default_offset(const PayoffParams& payoffs) {
  return {payoffs.check_cost + payoffs.penalty};
}

std::optional<double> imitative_update(double x, const ExpectedPayoffs& expected, UpdateOffset offset) {
  // Equal payoffs fix every point; short-circuit so the result is exact.
  if (expected.v_h == expected.v_b) return x;
  const double wh = expected.v_h + offset.value;
  const double wb = expected.v_b + offset.value;
  if (wh < 0.0 || wb < 0.0) {
    throw std::invalid_argument("imitative_update: offset too small, shifted payoff is negative");
  }
  if (x <= 0.0) return wb > 0.0 ? std::optional<double>(0.0) : std::nullopt;
  if (x >= 1.0) return wh > 0.0 ? std::optional<double>(1.0) : std::nullopt;
  const double honest_mass = x * wh;
  const double denom = honest_mass + (1.0 - x) * wb;
  if (denom <= 0.0) return std::nullopt;
  return std::clamp(honest_mass / denom, 0.0, 1.0);
}

double relative_drift(double x, const ExpectedPayoffs& expected, UpdateOffset offset) {
  const double wh = expected.v_h + offset.value;
  const double wb = expected.v_b + offset.value;
  const double denom = x * wh + (1.0 - x) * wb;
  const double gap = std::abs(expected.v_h - expected.v_b);
  if (gap == 0.0) return 0.0;
  return denom > 0.0 ? gap / denom : INFINITY;
}

namespace {

struct Stepper {
  const ValidatedModel& model;
  UpdateOffset offset;
  Trajectory trajectory;

  void finish(EquilibriumClass c) {
    auto& t = trajectory.terminal;
    t.equilibrium = c;
    t.final_fraction = trajectory.states.back().honest_fraction;
    t.rounds = trajectory.states.back().round;
    t.frozen = c == EquilibriumClass::Frozen;
    t.converged = c == EquilibriumClass::HonestStable || c == EquilibriumClass::ByzantineStable ||
                  c == EquilibriumClass::PoolingStable;
  }

  // Terminal check shared by both simulation modes; nullopt means keep going.
  std::optional<EquilibriumClass> terminal_before_step(const PopulationState& s) const {
    const double tol = model.config().convergence_tol;
    if (std::abs(s.honest_fraction - 1.0) < tol) return EquilibriumClass::HonestStable;
    if (s.honest_fraction < tol) return EquilibriumClass::ByzantineStable;
    if (s.regime == PivotalityRegime::NeitherPivotal) return EquilibriumClass::Frozen;
    if (s.round >= model.config().max_rounds) return EquilibriumClass::NotConverged;
    return std::nullopt;
  }

  // Stationary when the step is below tolerance and the payoff gap driving it
  // is negligible, which rules out slow geometric approach to 0 or 1.
  bool stationary(const PopulationState& s, double next) const {
    const double tol = model.config().convergence_tol;
    return std::abs(next - s.honest_fraction) < tol && relative_drift(s.honest_fraction, s.expected, offset) < tol;
  }
};

}  // namespace

Trajectory simulate_mean_field(const ValidatedModel& model, UpdateOffset offset) {
  const auto& cfg = model.config();
  auto make_state = [&](int round, double x) {
    PopulationState s;
    s.round = round;
    s.honest_fraction = x;
    s.regime = pivotality_regime(x, cfg.protocol);
    s.expected = expected_payoffs(cfg.payoffs, cfg.belief, x, s.regime);
    return s;
  };

  Stepper st{model, offset, {}};
  st.trajectory.states.push_back(make_state(1, cfg.initial_honest_fraction));
  for (;;) {
    const PopulationState s = st.trajectory.states.back();
    if (auto c = st.terminal_before_step(s)) {
      st.finish(*c);
      break;
    }
    const auto next = imitative_update(s.honest_fraction, s.expected, offset);
    if (!next) {
      st.finish(EquilibriumClass::Frozen);
      break;
    }
    const bool still = st.stationary(s, *next);
    st.trajectory.states.push_back(make_state(s.round + 1, *next));
    if (still) {
      st.finish(EquilibriumClass::PoolingStable);
      break;
    }
  }
  return std::move(st.trajectory);
}

AgentPopulation::AgentPopulation(std::vector<Strategy> strategies, std::uint64_t rng_seed)
    : strategies_(std::move(strategies)), rng_seed_(rng_seed) {}

int initial_honest_count(int size, double honest_fraction) {
  return static_cast<int>(std::floor(size * honest_fraction + 0.5));
}

AgentPopulation AgentPopulation::with_fraction(int size, double honest_fraction, std::uint64_t rng_seed) {
  if (size < 0 || !(honest_fraction >= 0.0 && honest_fraction <= 1.0)) {
    throw std::invalid_argument("AgentPopulation: size must be >= 0 and fraction in [0, 1]");
  }
  const int honest = initial_honest_count(size, honest_fraction);
  std::vector<Strategy> s(static_cast<std::size_t>(size), Strategy::Byzantine);
  std::fill_n(s.begin(), honest, Strategy::Honest);
  return {std::move(s), rng_seed};
}

int AgentPopulation::honest_count() const noexcept {
  int n = 0;
  for (auto s : strategies_) n += s == Strategy::Honest;
  return n;
}

double AgentPopulation::honest_fraction() const noexcept {
  return strategies_.empty() ? 0.0 : static_cast<double>(honest_count()) / static_cast<double>(size());
}

Trajectory simulate_agents(const ValidatedModel& model, UpdateOffset offset) {
  const auto& cfg = model.config();
  const int n = cfg.protocol.committee_size;
  auto population = AgentPopulation::with_fraction(n, cfg.initial_honest_fraction, cfg.rng_seed);
  Rng rng(cfg.rng_seed);

  auto make_state = [&](int round, int honest) {
    PopulationState s;
    s.round = round;
    s.honest_count = honest;
    s.honest_fraction = static_cast<double>(honest) / n;
    s.regime = pivotality_regime(honest, cfg.protocol);
    s.expected = expected_payoffs(cfg.payoffs, cfg.belief, s.honest_fraction, s.regime);
    return s;
  };

  Stepper st{model, offset, {}};
  st.trajectory.states.push_back(make_state(1, population.honest_count()));
  for (;;) {
    const PopulationState s = st.trajectory.states.back();
    // counts 0 and N are absorbing; the tolerance rule in the stepper covers them exactly
    if (auto c = st.terminal_before_step(s)) {
      st.finish(*c);
      break;
    }
    const auto p_honest = imitative_update(s.honest_fraction, s.expected, offset);
    if (!p_honest) {
      st.finish(EquilibriumClass::Frozen);
      break;
    }
    if (st.stationary(s, *p_honest)) {
      st.finish(EquilibriumClass::PoolingStable);
      break;
    }
    int honest = 0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      const bool h = uniform01(rng) < *p_honest;
      population.set(i, h ? Strategy::Honest : Strategy::Byzantine);
      honest += h;
    }
    st.trajectory.states.push_back(make_state(s.round + 1, honest));
  }
  return std::move(st.trajectory);
}

std::optional<double> solve_interior_fixed_point(const PayoffParams& payoffs, const Belief& belief) {
  auto gap = [&](double x) {
    const auto e = expected_payoffs(payoffs, belief, x, PivotalityRegime::BothPivotal);
    return e.v_h - e.v_b;
  };
  double lo = 0.0;
  double hi = 1.0;
  double f_lo = gap(lo);
  const double f_hi = gap(hi);
  if (f_lo == 0.0 || f_hi == 0.0 || (f_lo < 0.0) == (f_hi < 0.0)) return std::nullopt;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = gap(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace bftevo
