#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "gist/exact_flow.hpp"
#include "gist/integrator.hpp"
#include "gist/model.hpp"

namespace gist {

struct UTurnResult {
  std::int64_t steps = 0;
  bool capped = false;
  bool diverged = false;
  std::int64_t leapfrog_cost = 0;  // gradient evaluations consumed by the search
};

namespace detail {

// Runs leapfrog steps from `start` until (theta_n - theta_0) . rho_n < 0, the
// cap, or a divergence. The search stops at the step before a divergent one
// (never below 1). Stable points visited are appended to `trail` if given.
template <LogDensityModel M>
UTurnResult uturn_search(Leapfrog<M>& integrator, const Point& start, std::int64_t cap,
                         std::vector<Point>* trail = nullptr) {
  const std::int64_t evals0 = integrator.gradient_evals();
  const double h0 = integrator.hamiltonian(start);
  UTurnResult result;
  Point p = start;
  for (std::int64_t n = 1; n <= cap; ++n) {
    if (!integrator.step(p) || !integrator.stable(p, h0)) {
      result.steps = std::max<std::int64_t>(1, n - 1);
      result.diverged = true;
      break;
    }
    if (trail) trail->push_back(p);
    if ((p.theta - start.theta).dot(p.rho) < 0.0) {
      result.steps = n;
      break;
    }
    if (n == cap) {
      result.steps = cap;
      result.capped = true;
    }
  }
  result.leapfrog_cost = integrator.gradient_evals() - evals0;
  return result;
}

}  // namespace detail

/// Smallest n >= 1 with (theta^(n) - theta^(0)) . rho^(n) < 0, or `cap`.
template <LogDensityModel M>
UTurnResult uturn_steps(const M& model, const PhaseState& z, double eps, const MassMatrix& mass, std::int64_t cap) {
  if (!(eps > 0.0)) throw error("step size must be positive");
  if (cap < 1) throw error("U-turn cap must be at least 1");
  detail::check_dims(z, mass, model.dim());
  Leapfrog<M> integrator(model, mass, eps);
  const Point start = integrator.start(z);
  UTurnResult result = detail::uturn_search(integrator, start, cap);
  result.leapfrog_cost = integrator.gradient_evals();
  return result;
}

// Continuous-time U-turn times for the exact diagonal-Gaussian flow.

enum class UTurnCriterion {
  angle,     // first t > 0 with rho_0 . rho_t <= 0
  distance,  // first t > 0 with d/dt |theta_t - theta_0|^2 < 0
};

/// Mean over coordinates of the first nonnegative root of each coordinate's
/// momentum, rho_t^i = 0. With time scaled by sigma_i this is
/// tau_i = sigma_i * (arctan(sigma_i rho_0^i / theta_0^i) + k* pi).
inline double seed_root(const ExactFlowSpec& spec, const PhaseState& z) {
  check_dims(spec, z);
  double total = 0.0;
  for (Index i = 0; i < spec.dim(); ++i) {
    const double s = spec.sigmas()[i];
    double angle;
    if (z.theta[i] == 0.0) {
      angle = 0.5 * std::numbers::pi;
    } else {
      angle = std::atan(s * z.rho[i] / z.theta[i]);
      if (angle < 0.0) angle += std::numbers::pi;
    }
    total += s * angle;
  }
  return total / static_cast<double>(spec.dim());
}

namespace detail {

// sum_i rho_0^i rho_t^i
inline double angle_function(const ExactFlowSpec& spec, const PhaseState& z, double t) {
  double f = 0.0;
  const auto n = spec.dim();
  const double* w = spec.inv_sigmas().data();
  const double* th = z.theta.data();
  const double* rh = z.rho.data();
  for (Index i = 0; i < n; ++i) {
    const double a = t * w[i];
    f += rh[i] * (std::cos(a) * rh[i] - w[i] * std::sin(a) * th[i]);
  }
  return f;
}

// sum_i (theta_t^i - theta_0^i) rho_t^i, i.e. half of d/dt |theta_t - theta_0|^2
inline double distance_function(const ExactFlowSpec& spec, const PhaseState& z, double t) {
  double g = 0.0;
  const auto n = spec.dim();
  const double* sg = spec.sigmas().data();
  const double* w = spec.inv_sigmas().data();
  const double* th = z.theta.data();
  const double* rh = z.rho.data();
  for (Index i = 0; i < n; ++i) {
    const double a = t * w[i];
    const double c = std::cos(a);
    const double s = std::sin(a);
    g += ((c - 1.0) * th[i] + sg[i] * s * rh[i]) * (c * rh[i] - w[i] * s * th[i]);
  }
  return g;
}

}  // namespace detail

inline double uturn_function(const ExactFlowSpec& spec, const PhaseState& z, UTurnCriterion criterion, double t) {
  return criterion == UTurnCriterion::angle ? detail::angle_function(spec, z, t)
                                            : detail::distance_function(spec, z, t);
}

namespace detail {

// Incremental evaluation of the U-turn function on the grid t_k = k h. Each
// coordinate's (cos, sin) pair is advanced by a fixed rotation, so the scan
// needs no trigonometric calls beyond the setup.
class RotatingScan {
 public:
  RotatingScan(const ExactFlowSpec& spec, const PhaseState& z, UTurnCriterion criterion, double h)
      : spec_(&spec), z_(&z), criterion_(criterion), c_(Vector::Ones(spec.dim())), s_(Vector::Zero(spec.dim())),
        step_c_(spec.dim()), step_s_(spec.dim()) {
    set_step(h);
  }

  void set_step(double h) {
    for (Index i = 0; i < spec_->dim(); ++i) {
      step_c_[i] = std::cos(h * spec_->inv_sigmas()[i]);
      step_s_[i] = std::sin(h * spec_->inv_sigmas()[i]);
    }
  }

  // Moves to the next grid point and returns the U-turn function there.
  double advance() {
    const auto n = spec_->dim();
    const double* sg = spec_->sigmas().data();
    const double* w = spec_->inv_sigmas().data();
    const double* th = z_->theta.data();
    const double* rh = z_->rho.data();
    double f = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double c = c_[i] * step_c_[i] - s_[i] * step_s_[i];
      const double s = s_[i] * step_c_[i] + c_[i] * step_s_[i];
      c_[i] = c;
      s_[i] = s;
      const double rho_t = c * rh[i] - w[i] * s * th[i];
      f += criterion_ == UTurnCriterion::angle ? rh[i] * rho_t : ((c - 1.0) * th[i] + sg[i] * s * rh[i]) * rho_t;
    }
    return f;
  }

 private:
  const ExactFlowSpec* spec_;
  const PhaseState* z_;
  UTurnCriterion criterion_;
  Vector c_, s_, step_c_, step_s_;
};

inline bool has_turned(UTurnCriterion criterion, double value) {
  return criterion == UTurnCriterion::angle ? value <= 0.0 : value < 0.0;
}

}  // namespace detail

// Seeded scan, then bracketed refinement. The scan starts at t = 0, where
// both criteria are on the "not yet turned" side, with a step of 5% of the
// seed, and doubles the step whenever it falls below 5% of t. A dip that
// touches zero between two grid points is caught by minimizing over the
// neighbourhood of every interior local minimum of the scan. The bracket is
// then narrowed to 1e-12 in t.
inline double tau_exact(const ExactFlowSpec& spec, const PhaseState& z, UTurnCriterion criterion) {
  check_dims(spec, z);
  if (!z.theta.allFinite() || !z.rho.allFinite()) throw root_error("non-finite phase state", z.theta, z.rho);
  if (criterion == UTurnCriterion::angle && z.rho.squaredNorm() == 0.0) {
    throw root_error("angle U-turn time undefined for zero momentum", z.theta, z.rho);
  }
  const double seed = seed_root(spec, z);
  double h = 0.05 * (seed > 0.0 ? seed : spec.sigmas().minCoeff());
  const double limit = std::max(40.0 * seed, 4.0 * std::numbers::pi * spec.sigmas().maxCoeff());
  auto f = [&](double t) { return uturn_function(spec, z, criterion, t); };

  detail::RotatingScan scan(spec, z, criterion, h);
  double before = 0.0;  // grid point preceding lo
  double lo = 0.0;
  double hi = 0.0;
  double f_prev = std::numeric_limits<double>::infinity();
  double f_at_lo = f(0.0);
  for (std::int64_t k = 1;; ++k) {
    if (lo >= 40.0 * h) {
      h *= 2.0;
      scan.set_step(h);
    }
    hi = lo + h;
    if (hi > limit) throw root_error("no U-turn found within the search window", z.theta, z.rho);
    const double f_hi = scan.advance();
    if (detail::has_turned(criterion, f_hi) && detail::has_turned(criterion, f(hi))) break;
    if (k >= 2 && f_at_lo < f_prev && f_at_lo <= f_hi) {
      const auto [t_min, f_min] = boost::math::tools::brent_find_minima(f, before, hi, 40);
      if (detail::has_turned(criterion, f_min)) {
        lo = before;
        hi = t_min;
        break;
      }
    }
    f_prev = f_at_lo;
    f_at_lo = f_hi;
    before = lo;
    lo = hi;
  }

  // The left end must sit strictly on the positive side; at t = 0 the
  // distance function vanishes, so step inward first.
  double f_lo = lo > 0.0 ? f(lo) : 0.0;
  double f_hi = f(hi);
  while (!(f_lo > 0.0)) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (detail::has_turned(criterion, f_mid)) {
      hi = mid;
      f_hi = f_mid;
    } else {
      lo = mid;
      f_lo = f_mid;
    }
    if (hi - lo <= 1e-12) return 0.5 * (lo + hi);
  }
  if (f_hi == 0.0) return hi;

  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, f_lo, f_hi, [](double a, double b) { return std::abs(b - a) <= 1e-12; }, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

inline double tau_angle_exact(const ExactFlowSpec& spec, const PhaseState& z) {
  return tau_exact(spec, z, UTurnCriterion::angle);
}

inline double tau_dist_exact(const ExactFlowSpec& spec, const PhaseState& z) {
  return tau_exact(spec, z, UTurnCriterion::distance);
}

}  // namespace gist
