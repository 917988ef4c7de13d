#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "gist/gist.hpp"
#include "gist/integrator.hpp"
#include "gist/model.hpp"
#include "gist/rng.hpp"

namespace gist {

/// Index set J = [first, last] of leapfrog iterates around the start, built by
/// randomized doubling. Its size is 2^depth.
struct Orbit {
  std::int64_t first = 0;
  std::int64_t last = 0;
  int depth = 0;
  bool uturn = false;     // finalized because the whole orbit made a U-turn
  bool rejected = false;  // finalized because an extension was rejected
  bool diverged = false;  // the rejected extension contained a divergence
  std::int64_t checks = 0;  // U-turn condition evaluations
  std::int64_t gradient_evals = 0;

  std::int64_t size() const { return last - first + 1; }
};

namespace detail {

// U-turn between the time-ordered endpoints of a set of iterates.
inline bool nuts_uturn(const Point& minus, const Point& plus) {
  const Vector span = plus.theta - minus.theta;
  return plus.rho.dot(span) < 0.0 || minus.rho.dot(span) < 0.0;
}

// log sum exp over a vector of finite values
inline double log_sum_exp(const std::vector<double>& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

// Draw an index with probability proportional to exp(log_weights[i]).
inline std::size_t categorical(const std::vector<double>& log_weights, Rng& rng) {
  const double total = log_sum_exp(log_weights);
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < log_weights.size(); ++i) {
    cumulative += std::exp(log_weights[i] - total);
    if (u < cumulative) return i;
  }
  return log_weights.size() - 1;
}

// Builds the orbit and leaves its iterates, time-ordered, in `points`.
template <LogDensityModel M>
Orbit build_orbit(const M& model, const MassMatrix& mass, double eps, int max_depth, const PhaseState& z, Rng& rng,
                  std::deque<Point>& points) {
  Leapfrog<M> forward(model, mass, eps);
  Leapfrog<M> backward(model, mass, -eps);
  Orbit orbit;
  points.clear();
  points.push_back(forward.start(z));
  const double h0 = forward.hamiltonian(points.front());

  std::vector<Point> ext;
  for (int depth = 0; depth < max_depth; ++depth) {
    const auto n = static_cast<std::int64_t>(points.size());
    const bool go_forward = rng.coin();
    Leapfrog<M>& integrator = go_forward ? forward : backward;
    Point p = go_forward ? points.back() : points.front();
    ext.clear();
    bool reject = false;
    for (std::int64_t j = 1; j <= n && !reject; ++j) {
      if (!integrator.step(p) || !integrator.stable(p, h0)) {
        reject = true;
        orbit.diverged = true;
        break;
      }
      ext.push_back(p);
      // every dyadic sub-interval of the extension that closes at j
      for (std::int64_t size = 2; size <= n && j % size == 0; size *= 2) {
        const Point& older = ext[static_cast<std::size_t>(j - size)];
        const Point& newer = ext[static_cast<std::size_t>(j - 1)];
        ++orbit.checks;
        if (go_forward ? nuts_uturn(older, newer) : nuts_uturn(newer, older)) {
          reject = true;
          break;
        }
      }
    }
    if (reject) {
      orbit.rejected = true;
      break;
    }
    if (go_forward) {
      for (auto& q : ext) points.push_back(std::move(q));
      orbit.last += n;
    } else {
      for (auto& q : ext) points.push_front(std::move(q));
      orbit.first -= n;
    }
    orbit.depth = depth + 1;
    ++orbit.checks;
    if (nuts_uturn(points.front(), points.back())) {
      orbit.uturn = true;
      break;
    }
  }
  orbit.gradient_evals = forward.gradient_evals() + backward.gradient_evals();
  return orbit;
}

}  // namespace detail

template <LogDensityModel M>
Orbit nuts_orbit(const M& model, const PhaseState& z, double eps, const MassMatrix& mass, int max_depth, Rng& rng) {
  if (!(eps > 0.0)) throw error("step size must be positive");
  if (max_depth < 0) throw error("max tree depth must be nonnegative");
  detail::check_dims(z, mass, model.dim());
  std::deque<Point> points;
  return detail::build_orbit(model, mass, eps, max_depth, z, rng, points);
}

/// Multinomial NUTS: doubling orbit with No-Intermediate-U-Turn checks and an
/// index drawn with Boltzmann weights e^{-H} over the whole orbit.
template <LogDensityModel M>
class NutsSampler {
 public:
  NutsSampler(const M& model, double step_size, MassMatrix mass, int max_depth = 10)
      : model_(&model), step_size_(step_size), mass_(std::move(mass)), max_depth_(max_depth) {
    if (!(step_size > 0.0)) throw error("step size must be positive");
    if (max_depth < 0) throw error("max tree depth must be nonnegative");
    if (mass_.dim() != model.dim()) throw dimension_error("mass matrix dimension does not match model");
  }

  TransitionReport transition(const Vector& theta, Rng& rng) const {
    PhaseState z{theta, mass_.draw(rng)};
    std::deque<Point> points;
    const Orbit orbit = detail::build_orbit(*model_, mass_, step_size_, max_depth_, z, rng, points);

    std::vector<double> log_weights(points.size());
    const Leapfrog<M> energy(*model_, mass_, step_size_);
    for (std::size_t i = 0; i < points.size(); ++i) log_weights[i] = -energy.hamiltonian(points[i]);
    const std::size_t pick = detail::categorical(log_weights, rng);

    TransitionReport report;
    report.next = points[pick].state();
    report.accepted = true;
    report.accept_prob = 1.0;
    report.log_accept_ratio = 0.0;
    report.offset = orbit.first + static_cast<std::int64_t>(pick);
    report.steps = std::abs(report.offset);
    report.forward_steps = orbit.size();
    report.diverged = orbit.diverged;
    report.capped = orbit.depth == max_depth_ && !orbit.uturn && max_depth_ > 0;
    report.gradient_evals = orbit.gradient_evals;
    report.path_length = step_size_ * static_cast<double>(report.steps);
    return report;
  }

  int max_depth() const { return max_depth_; }

 private:
  const M* model_;
  double step_size_;
  MassMatrix mass_;
  int max_depth_;
};

template <LogDensityModel M>
TransitionReport nuts_transition(const M& model, const Vector& theta, double eps, const MassMatrix& mass,
                                 int max_depth, Rng& rng) {
  return NutsSampler<M>(model, eps, mass, max_depth).transition(theta, rng);
}

}  // namespace gist
