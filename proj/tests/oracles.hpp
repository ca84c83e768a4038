#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Formulas are written out longhand from the model definitions; the exact
// agent chain is the one place that borrows the library's per-round update.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bftevo/dynamics.hpp"
#include "bftevo/model.hpp"

namespace bftevo::oracle {

/// Both-pivotal expected payoffs written out term by term.
struct BothPivotalPayoffs {
  double v_h;
  double v_b;
};

inline BothPivotalPayoffs both_pivotal_longhand(const PayoffParams& p, double m, double x) {
  const double accepted = p.reward - p.check_cost - p.send_cost;
  const double v_h = (m + (1 - m) * x) * accepted + (1 - m) * (1 - x) * (-p.check_cost - p.penalty);
  const double v_b = x * (1 - m) * (-p.check_cost) + (m + (1 - m) * (1 - x)) * accepted;
  return {v_h, v_b};
}

/// Closed-form payoff gap in the both-pivotal regime.
inline double payoff_gap_closed_form(const PayoffParams& p, double m, double x) {
  return -(1 - m) * ((1 - 2 * x) * (p.reward - p.send_cost) + (1 - x) * p.penalty);
}

/// Bisection on the longhand gap, independent of solve_interior_fixed_point.
inline double bisect_frontier(const PayoffParams& p, double m) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto v = both_pivotal_longhand(p, m, mid);
    if (v.v_h - v.v_b < 0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Pivotality by counting an explicit agent vector.
struct CountedPivotality {
  bool honest;
  bool byzantine;
};

inline CountedPivotality count_pivotality(int honest_agents, int committee, int threshold) {
  std::vector<int> votes(static_cast<std::size_t>(committee), 0);
  std::fill_n(votes.begin(), honest_agents, 1);
  int h = 0, b = 0;
  for (int v : votes) (v ? h : b)++;
  return {h >= threshold, b >= threshold};
}

/// Uniform benchmark-ordered payoffs: four sorted U(0, 10) draws.
inline PayoffParams random_benchmark_payoffs(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (;;) {
    double a[4] = {u(rng), u(rng), u(rng), u(rng)};
    std::sort(a, a + 4, [](double l, double r) { return l > r; });
    PayoffParams p{a[0], a[1], a[2], a[3]};
    if (p.benchmark_ordering() && p.penalty > 1e-3) return p;
  }
}

/// Random model with gamma <= 1/2 and x1 at least `band` away from gamma,
/// 1 - gamma and the both-pivotal frontier.
inline ModelConfig random_model(std::mt19937_64& rng, double band) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    ModelConfig c;
    c.payoffs = random_benchmark_payoffs(rng);
    const int n = 4 + static_cast<int>(u(rng) * 97);
    const int nu = 1 + static_cast<int>(u(rng) * (n / 2));
    c.protocol = {n, std::min(nu, n / 2)};
    c.belief.assortativity = u(rng);
    c.initial_honest_fraction = u(rng);
    const double g = static_cast<double>(c.protocol.threshold) / n;
    const double margin = c.payoffs.reward - c.payoffs.send_cost;
    const double xs = (margin + c.payoffs.penalty) / (2 * margin + c.payoffs.penalty);
    const double x = c.initial_honest_fraction;
    if (std::abs(x - g) < band || std::abs(x - (1 - g)) < band || std::abs(x - xs) < band) continue;
    return c;
  }
}

/// Exact mean honest fraction of the agent-level Markov chain for rounds
/// 1..rounds (index 0 unused), by propagating the full distribution over
/// honest counts through Binomial(N, P_H) transitions. Counts 0 and N are
/// absorbing, as are counts where neither side is pivotal. Only the per-count
/// adoption probability is taken from the library.
inline std::vector<double> exact_agent_chain_means(const ModelConfig& c, int rounds) {
  const int n = c.protocol.committee_size;
  const auto w = default_offset(c.payoffs);
  std::vector<double> p(static_cast<std::size_t>(n + 1), 0.0);
  p[static_cast<std::size_t>(initial_honest_count(n, c.initial_honest_fraction))] = 1.0;
  std::vector<double> means(static_cast<std::size_t>(rounds + 1), 0.0);
  for (int r = 1; r <= rounds; ++r) {
    for (int k = 0; k <= n; ++k) means[static_cast<std::size_t>(r)] += p[static_cast<std::size_t>(k)] * k / n;
    std::vector<double> q(p.size(), 0.0);
    for (int k = 0; k <= n; ++k) {
      const double pk = p[static_cast<std::size_t>(k)];
      if (pk < 1e-300) continue;
      const double x = static_cast<double>(k) / n;
      const auto regime = pivotality_regime(k, c.protocol);
      if (k == 0 || k == n || regime == PivotalityRegime::NeitherPivotal) {
        q[static_cast<std::size_t>(k)] += pk;
        continue;
      }
      const double ph = *imitative_update(x, expected_payoffs(c.payoffs, c.belief, x, regime), w);
      for (int j = 0; j <= n; ++j) {
        double log_pmf = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
        log_pmf += j == 0 ? 0.0 : (ph > 0 ? j * std::log(ph) : -INFINITY);
        log_pmf += j == n ? 0.0 : (ph < 1 ? (n - j) * std::log1p(-ph) : -INFINITY);
        q[static_cast<std::size_t>(j)] += pk * std::exp(log_pmf);
      }
    }
    p = std::move(q);
  }
  return means;
}

}  // namespace bftevo::oracle
