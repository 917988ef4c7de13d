#pragma once

#include "gist/exact_flow.hpp"
#include "gist/gist.hpp"
#include "gist/rng.hpp"

namespace gist {

/// Randomized HMC on the exact Gaussian flow: full momentum refresh and an
/// exponential(lambda) integration time. Always accepted.
inline TransitionReport rhmc_exact_transition(const ExactFlowSpec& spec, const Vector& theta, double lambda,
                                              Rng& rng) {
  if (!(lambda > 0.0)) throw error("randomized HMC rate must be positive");
  if (theta.size() != spec.dim()) throw dimension_error("theta dimension does not match the Gaussian spec");
  PhaseState z{theta, Vector::NullaryExpr(spec.dim(), [&](Index) { return rng.normal(); })};
  const double t = rng.exponential(lambda);
  TransitionReport report;
  report.next = exact_flow(spec, z, t);
  report.accepted = true;
  report.accept_prob = 1.0;
  report.log_accept_ratio = 0.0;
  report.path_length = t;
  report.tau = t;
  return report;
}

}  // namespace gist
