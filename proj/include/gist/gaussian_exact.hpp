#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "gist/exact_flow.hpp"
#include "gist/gist.hpp"
#include "gist/rhmc.hpp"
#include "gist/rng.hpp"
#include "gist/uturn.hpp"

namespace gist {

// Deterministic part of an exact-flow GIST step for a given momentum and path
// length alpha: tau_1 at z, tau_2 at S(phi_alpha(z)), and the acceptance
// 1 ^ (tau_1 / tau_2) 1{tau_2 >= alpha}. `next` holds the flipped proposal.
inline TransitionReport gist_exact_evaluate(const ExactFlowSpec& spec, const PhaseState& z, double alpha,
                                            UTurnCriterion criterion) {
  TransitionReport report;
  report.tau = tau_exact(spec, z, criterion);
  report.path_length = alpha;
  report.next = flip(exact_flow(spec, z, alpha));
  const double tau_back = tau_exact(spec, report.next, criterion);
  if (!(tau_back >= alpha)) {
    report.no_return = true;
    report.log_accept_ratio = kNegInf;
    report.accept_prob = 0.0;
    return report;
  }
  report.log_accept_ratio = std::log(report.tau) - std::log(tau_back);
  report.accept_prob = accept_probability(report.log_accept_ratio);
  return report;
}

inline TransitionReport gist_exact_transition(const ExactFlowSpec& spec, const Vector& theta,
                                              UTurnCriterion criterion, Rng& rng) {
  if (theta.size() != spec.dim()) throw dimension_error("theta dimension does not match the Gaussian spec");
  PhaseState z{theta, Vector::NullaryExpr(spec.dim(), [&](Index) { return rng.normal(); })};
  const double tau = tau_exact(spec, z, criterion);
  const double alpha = tau * rng.uniform();
  TransitionReport report = gist_exact_evaluate(spec, z, alpha, criterion);
  report.accepted = std::log(rng.uniform()) < report.log_accept_ratio;
  if (!report.accepted) report.next = std::move(z);
  return report;
}

enum class ExactVariant { rhmc, gist_angle, gist_dist };

inline std::string to_string(ExactVariant v) {
  switch (v) {
    case ExactVariant::rhmc: return "rhmc";
    case ExactVariant::gist_angle: return "gist_angle";
    case ExactVariant::gist_dist: return "gist_dist";
  }
  return "unknown";
}

struct ExperimentSummary {
  ExactVariant variant = ExactVariant::rhmc;
  Index dim = 0;
  std::int64_t n_steps = 0;
  std::uint64_t seed = 0;
  double mean_accept = 0.0;  // mean acceptance probability a_e
  double accept_rate = 0.0;  // fraction of accepted proposals
  double no_return_rate = 0.0;
  double msjd = 0.0;
  double mean_tau = 0.0;            // integration time of the proposal (alpha, or t for rhmc)
  double mean_uturn_time = 0.0;     // forward U-turn time tau_1 (rhmc: same as mean_tau)
  double mean_accepted_path = 0.0;  // path length of the move actually made (0 on rejection)
};

/// Runs one chain on the diagonal Gaussian with sigma_i = i / d, started from
/// an exact draw of the target.
inline ExperimentSummary run_gaussian_experiment(Index d, std::int64_t n_steps, ExactVariant variant,
                                                 std::uint64_t seed, double lambda = 1.0,
                                                 std::uint64_t stream_id = 0) {
  if (n_steps < 1) throw error("experiment needs at least one step");
  const ExactFlowSpec spec = ExactFlowSpec::truncated(d);
  Rng rng = Rng::stream(seed, stream_id);
  Vector theta = spec.draw_position(rng);

  ExperimentSummary out;
  out.variant = variant;
  out.dim = d;
  out.n_steps = n_steps;
  out.seed = seed;
  double sum_accept = 0.0, sum_sq_jump = 0.0, sum_uturn = 0.0, sum_alpha = 0.0, sum_path = 0.0;
  std::int64_t accepted = 0, no_return = 0;
  for (std::int64_t n = 0; n < n_steps; ++n) {
    TransitionReport r;
    switch (variant) {
      case ExactVariant::rhmc: r = rhmc_exact_transition(spec, theta, lambda, rng); break;
      case ExactVariant::gist_angle: r = gist_exact_transition(spec, theta, UTurnCriterion::angle, rng); break;
      case ExactVariant::gist_dist: r = gist_exact_transition(spec, theta, UTurnCriterion::distance, rng); break;
    }
    sum_accept += r.accept_prob;
    sum_uturn += r.tau;
    sum_alpha += r.path_length;
    if (r.accepted) {
      ++accepted;
      sum_path += r.path_length;
      sum_sq_jump += (r.next.theta - theta).squaredNorm();
      theta = std::move(r.next.theta);
    }
    if (r.no_return) ++no_return;
  }
  const auto n = static_cast<double>(n_steps);
  out.mean_accept = sum_accept / n;
  out.accept_rate = static_cast<double>(accepted) / n;
  out.no_return_rate = static_cast<double>(no_return) / n;
  out.msjd = sum_sq_jump / n;
  out.mean_tau = sum_alpha / n;
  out.mean_uturn_time = sum_uturn / n;
  out.mean_accepted_path = sum_path / n;
  return out;
}

}  // namespace gist
