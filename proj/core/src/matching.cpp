#include "bftevo/matching.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bftevo/random.hpp"

namespace bftevo {

namespace {

constexpr std::size_t idx(Strategy s) { return static_cast<std::size_t>(s); }

double binomial_se(double p, std::int64_t n) {
  return n > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
}

// Uniform pick from `members` excluding the entry at position `self_pos`.
std::size_t pick_other(Rng& rng, const std::vector<std::size_t>& members, std::size_t self_pos) {
  auto k = uniform_below(rng, members.size() - 1);
  if (k >= self_pos) ++k;
  return members[k];
}

}  // namespace

MatchStats run_matching(const AgentPopulation& population, const Belief& belief, int rounds, std::uint64_t seed) {
  const auto& strategies = population.strategies();
  const std::size_t n = strategies.size();
  if (n < 2) throw std::invalid_argument("run_matching: need at least 2 agents");
  if (rounds < 0) throw std::invalid_argument("run_matching: rounds must be >= 0");

  std::array<std::vector<std::size_t>, 2> groups;
  std::vector<std::size_t> position(n);  // index of agent i inside its strategy group
  for (std::size_t i = 0; i < n; ++i) {
    auto& g = groups[idx(strategies[i])];
    position[i] = g.size();
    g.push_back(i);
  }

  Rng rng(seed);
  const double m = belief.assortativity;
  MatchStats stats;
  for (int t = 0; t < rounds; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto own = idx(strategies[i]);
      std::size_t partner;
      if (uniform01(rng) < m) {
        if (groups[own].size() >= 2) {
          partner = pick_other(rng, groups[own], position[i]);
        } else {
          ++stats.fallback_count;
          auto k = uniform_below(rng, n - 1);
          partner = k >= i ? k + 1 : k;
        }
      } else {
        auto k = uniform_below(rng, n - 1);
        partner = k >= i ? k + 1 : k;
      }
      ++stats.trials_by_strategy[own];
      stats.same_strategy_matches[own] += strategies[partner] == strategies[i];
    }
  }
  stats.trials = stats.trials_by_strategy[0] + stats.trials_by_strategy[1];

  auto freq = [&](Strategy s) {
    const auto tr = stats.trials_by_strategy[idx(s)];
    return tr > 0 ? static_cast<double>(stats.same_strategy_matches[idx(s)]) / static_cast<double>(tr) : 0.0;
  };
  const double hh = freq(Strategy::Honest);
  const double bb = freq(Strategy::Byzantine);
  const auto th = stats.trials_by_strategy[idx(Strategy::Honest)];
  const auto tb = stats.trials_by_strategy[idx(Strategy::Byzantine)];
  // a strategy with no members has no frequencies to report
  stats.empirical_pi = {hh, th > 0 ? 1.0 - hh : 0.0, tb > 0 ? 1.0 - bb : 0.0, bb};
  stats.std_errors = {binomial_se(hh, th), binomial_se(hh, th), binomial_se(bb, tb), binomial_se(bb, tb)};
  return stats;
}

MeetingProbabilities corrected_meeting_probabilities(const Belief& belief, int honest_count, int n) {
  const double m = belief.assortativity;
  auto same = [&](int k) {
    if (k <= 1) return 0.0;
    return m + (1.0 - m) * static_cast<double>(k - 1) / static_cast<double>(n - 1);
  };
  const double hh = same(honest_count);
  const double bb = same(n - honest_count);
  return {hh, 1.0 - hh, 1.0 - bb, bb};
}

double binomial_z_score(double empirical, double target, std::int64_t trials) {
  if (trials <= 0) return 0.0;
  const double se = binomial_se(target, trials);
  if (se == 0.0) return empirical == target ? 0.0 : std::numeric_limits<double>::infinity();
  return (empirical - target) / se;
}

DeviationReport matching_deviation(const MatchStats& stats, const Belief& belief, double honest_fraction, int n) {
  DeviationReport r;
  r.mean_field_target = meeting_probabilities(belief, honest_fraction);
  r.corrected_target = corrected_meeting_probabilities(belief, initial_honest_count(n, honest_fraction), n);
  const auto th = stats.trials_by_strategy[idx(Strategy::Honest)];
  const auto tb = stats.trials_by_strategy[idx(Strategy::Byzantine)];
  r.z_hh_mean_field = binomial_z_score(stats.empirical_pi.pi_hh, r.mean_field_target.pi_hh, th);
  r.z_bb_mean_field = binomial_z_score(stats.empirical_pi.pi_bb, r.mean_field_target.pi_bb, tb);
  r.z_hh_corrected = binomial_z_score(stats.empirical_pi.pi_hh, r.corrected_target.pi_hh, th);
  r.z_bb_corrected = binomial_z_score(stats.empirical_pi.pi_bb, r.corrected_target.pi_bb, tb);
  r.pass = std::abs(r.z_hh_corrected) < kZScoreLimit && std::abs(r.z_bb_corrected) < kZScoreLimit;
  return r;
}

}  // namespace bftevo
