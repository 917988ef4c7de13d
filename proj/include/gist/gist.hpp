#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gist/integrator.hpp"
#include "gist/model.hpp"
#include "gist/rng.hpp"
#include "gist/uturn.hpp"

namespace gist {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// min(1, exp(log_ratio)), with exp(-inf) = 0.
inline double accept_probability(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

// Log Metropolis ratio for an involutive proposal on the enlarged space
// (state, tuning parameter): the ratio of the joint densities
// e^{-H} p(alpha | state) at the image and at the source.
inline double involutive_log_ratio(double log_joint_from, double log_joint_to) {
  if (log_joint_to == kNegInf) return kNegInf;
  return log_joint_to - log_joint_from;
}

/// Conditional distribution of the number of leapfrog steps L given the
/// U-turn count M.
class StepDistribution {
 public:
  enum class Kind { uniform_fraction, binomial };

  // uniform on {lo, ..., M} with lo = max(1, floor(fraction * M))
  static StepDistribution uniform(double fraction = 0.0) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw error("lower-bound fraction must lie in [0, 1)");
    return StepDistribution(Kind::uniform_fraction, fraction, 0.0);
  }

  // binomial(M, psi) truncated to {1, ..., M}
  static StepDistribution binomial(double psi) {
    if (!(psi > 0.0 && psi < 1.0)) throw error("binomial probability must lie in (0, 1)");
    return StepDistribution(Kind::binomial, 0.0, psi);
  }

  Kind kind() const { return kind_; }
  double fraction() const { return fraction_; }
  double psi() const { return psi_; }

  std::int64_t lower_bound(std::int64_t m) const {
    if (kind_ == Kind::binomial) return 1;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(fraction_ * static_cast<double>(m))));
  }

  double log_pmf(std::int64_t steps, std::int64_t m) const {
    if (m < 1) throw error("U-turn count must be at least 1");
    if (steps < lower_bound(m) || steps > m) return kNegInf;
    if (kind_ == Kind::uniform_fraction) return -std::log(static_cast<double>(m - lower_bound(m) + 1));
    const double n = static_cast<double>(m);
    const double k = static_cast<double>(steps);
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double log_zero = n * std::log1p(-psi_);  // log P(L = 0) before truncation
    return log_choose + k * std::log(psi_) + (n - k) * std::log1p(-psi_) - std::log1p(-std::exp(log_zero));
  }

  std::int64_t sample(std::int64_t m, Rng& rng) const {
    if (m < 1) throw error("U-turn count must be at least 1");
    const std::int64_t lo = lower_bound(m);
    if (kind_ == Kind::uniform_fraction) {
      return lo + static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(m - lo + 1)));
    }
    // inverse CDF over {1, ..., m}
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::int64_t k = 1; k < m; ++k) {
      cumulative += std::exp(log_pmf(k, m));
      if (u < cumulative) return k;
    }
    return m;
  }

 private:
  StepDistribution(Kind kind, double fraction, double psi) : kind_(kind), fraction_(fraction), psi_(psi) {}

  Kind kind_;
  double fraction_;
  double psi_;
};

inline double steps_logpmf(const StepDistribution& dist, std::int64_t steps, std::int64_t m) {
  return dist.log_pmf(steps, m);
}

inline std::int64_t sample_steps(const StepDistribution& dist, std::int64_t m, Rng& rng) {
  return dist.sample(m, rng);
}

/// Outcome of one transition of any sampler in this library. Fields that do
/// not apply to a sampler stay at their defaults.
struct TransitionReport {
  PhaseState next;
  bool accepted = false;
  std::int64_t steps = 0;           // L, leapfrog steps to the proposal
  std::int64_t offset = 0;          // signed leapfrog index of the proposal (path samplers)
  std::int64_t forward_steps = 0;   // M, U-turn count from the start
  std::int64_t backward_steps = 0;  // N, U-turn count from the flipped proposal
  bool no_return = false;           // L outside the backward support
  bool diverged = false;
  bool capped = false;
  double log_accept_ratio = 0.0;
  double accept_prob = 1.0;
  std::int64_t gradient_evals = 0;
  double path_length = 0.0;  // integration time of the proposal
  double tau = 0.0;          // forward U-turn time (exact-flow samplers)
};

/// Self-tuned path-length HMC: momentum refresh, L ~ p(L | M) with M the
/// forward U-turn count, L leapfrog steps, momentum flip, and a Metropolis
/// test with the backward U-turn count N.
template <LogDensityModel M>
class GistSampler {
 public:
  GistSampler(const M& model, double step_size, MassMatrix mass, StepDistribution dist, std::int64_t cap = 1024)
      : model_(&model), step_size_(step_size), mass_(std::move(mass)), dist_(dist), cap_(cap) {
    if (!(step_size > 0.0)) throw error("step size must be positive");
    if (cap < 1) throw error("U-turn cap must be at least 1");
    if (mass_.dim() != model.dim()) throw dimension_error("mass matrix dimension does not match model");
  }

  TransitionReport transition(const Vector& theta, Rng& rng) const {
    PhaseState z{theta, mass_.draw(rng)};
    Leapfrog<M> integrator(*model_, mass_, step_size_);
    const Point start = integrator.start(z);
    std::vector<Point> trail;
    trail.reserve(64);
    const UTurnResult forward = detail::uturn_search(integrator, start, cap_, &trail);
    const std::int64_t steps = dist_.sample(forward.steps, rng);
    TransitionReport report = finish(integrator, start, forward, trail, steps);
    report.accepted = std::log(rng.uniform()) < report.log_accept_ratio;
    if (report.accepted) {
      report.next = trail[static_cast<std::size_t>(steps - 1)].state();
      report.next.rho = -report.next.rho;
    } else {
      report.next = std::move(z);
    }
    return report;
  }

  // Deterministic part of a transition for a given momentum and step count:
  // everything except the accept draw. `next` holds the flipped proposal.
  TransitionReport evaluate(const PhaseState& z, std::int64_t steps) const {
    detail::check_dims(z, mass_, model_->dim());
    Leapfrog<M> integrator(*model_, mass_, step_size_);
    const Point start = integrator.start(z);
    std::vector<Point> trail;
    const UTurnResult forward = detail::uturn_search(integrator, start, cap_, &trail);
    TransitionReport report = finish(integrator, start, forward, trail, steps);
    if (static_cast<std::int64_t>(trail.size()) >= steps) {
      report.next = trail[static_cast<std::size_t>(steps - 1)].state();
      report.next.rho = -report.next.rho;
    }
    return report;
  }

  double step_size() const { return step_size_; }
  const MassMatrix& mass() const { return mass_; }
  const StepDistribution& distribution() const { return dist_; }
  std::int64_t cap() const { return cap_; }

 private:
  TransitionReport finish(Leapfrog<M>& integrator, const Point& start, const UTurnResult& forward,
                          const std::vector<Point>& trail, std::int64_t steps) const {
    TransitionReport report;
    report.steps = steps;
    report.forward_steps = forward.steps;
    report.capped = forward.capped;
    report.path_length = step_size_ * static_cast<double>(steps);

    if (steps < 1 || static_cast<std::int64_t>(trail.size()) < steps) {
      // proposal lies beyond a divergence
      report.diverged = true;
      report.log_accept_ratio = kNegInf;
      report.accept_prob = 0.0;
      report.gradient_evals = integrator.gradient_evals();
      return report;
    }

    Point proposal = trail[static_cast<std::size_t>(steps - 1)];
    proposal.rho = -proposal.rho;
    const UTurnResult backward = detail::uturn_search(integrator, proposal, cap_);
    report.backward_steps = backward.steps;
    report.capped = report.capped || backward.capped;
    report.diverged = forward.diverged || backward.diverged;
    report.gradient_evals = integrator.gradient_evals();

    const double log_fwd = dist_.log_pmf(steps, forward.steps);
    const double log_bwd = dist_.log_pmf(steps, backward.steps);
    if (log_bwd == kNegInf) {
      report.no_return = true;
      report.log_accept_ratio = kNegInf;
      report.accept_prob = 0.0;
      return report;
    }
    const double delta_h = integrator.hamiltonian(proposal) - integrator.hamiltonian(start);
    report.log_accept_ratio = -delta_h + log_bwd - log_fwd;
    report.accept_prob = accept_probability(report.log_accept_ratio);
    return report;
  }

  const M* model_;
  double step_size_;
  MassMatrix mass_;
  StepDistribution dist_;
  std::int64_t cap_;
};

template <LogDensityModel M>
TransitionReport gist_transition(const M& model, const Vector& theta, double eps, const MassMatrix& mass,
                                 const StepDistribution& dist, std::int64_t cap, Rng& rng) {
  return GistSampler<M>(model, eps, mass, dist, cap).transition(theta, rng);
}

}  // namespace gist
