// SPDX-FileCopyrightText: 2026 The countaug Authors
// SPDX-License-Identifier: Apache-2.0

// Statistical oracles for the feed checks.

#pragma once

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <cstddef>
#include <span>

namespace countaug::testing {

// Exact two-sided binomial test p-value: total mass of outcomes no more likely than k.
inline double binomial_two_sided_p(unsigned k, unsigned n, double p) {
  const boost::math::binomial_distribution<double> dist(n, p);
  const double observed = boost::math::pdf(dist, k);
  double total = 0.0;
  for (unsigned i = 0; i <= n; ++i) {
    const double pi = boost::math::pdf(dist, i);
    if (pi <= observed * (1.0 + 1e-7)) total += pi;
  }
  return total < 1.0 ? total : 1.0;
}

// Probability that a single Binomial(n, p) draw is rejected at level alpha.
inline double binomial_rejection_probability(unsigned n, double p, double alpha) {
  const boost::math::binomial_distribution<double> dist(n, p);
  double total = 0.0;
  for (unsigned k = 0; k <= n; ++k) {
    if (binomial_two_sided_p(k, n, p) <= alpha) total += boost::math::pdf(dist, k);
  }
  return total;
}

// Largest count c with P(X > c) <= alpha for X ~ Binomial(trials, p).
inline std::size_t binomial_upper_quantile(std::size_t trials, double p, double alpha) {
  const boost::math::binomial_distribution<double> dist(static_cast<double>(trials), p);
  std::size_t c = 0;
  while (boost::math::cdf(boost::math::complement(dist, static_cast<double>(c))) > alpha) ++c;
  return c;
}

struct ChiSquared {
  double statistic = 0.0;
  double critical = 0.0;
  bool pass() const { return statistic <= critical; }
};

// Goodness of fit of observed counts against a uniform distribution.
inline ChiSquared chi_squared_uniform(std::span<const std::size_t> counts, double alpha) {
  double total = 0.0;
  for (const auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  ChiSquared out;
  for (const auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    out.statistic += d * d / expected;
  }
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(counts.size() - 1));
  out.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  return out;
}

}  // namespace countaug::testing
