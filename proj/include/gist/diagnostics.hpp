#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gist/gist.hpp"
#include "gist/types.hpp"

namespace gist {

enum class Transform { identity, square };

/// Mean squared Euclidean jump between consecutive draws, averaged over the
/// M - 1 jumps of M draws.
inline double msjd(std::span<const Vector> draws) {
  if (draws.size() < 2) throw error("MSJD needs at least two draws");
  double total = 0.0;
  for (std::size_t m = 1; m < draws.size(); ++m) total += (draws[m] - draws[m - 1]).squaredNorm();
  return total / static_cast<double>(draws.size() - 1);
}

namespace detail {

inline void check_draws(std::span<const Vector> draws, const Vector& reference) {
  if (draws.empty()) throw error("need at least one draw");
  for (const auto& d : draws) {
    if (d.size() != reference.size()) throw dimension_error("draw and reference dimensions differ");
  }
}

inline Vector apply(const Vector& v, Transform t) {
  return t == Transform::identity ? v : Vector(v.array().square());
}

}  // namespace detail

/// Root mean square, across coordinates, of the error of the Monte Carlo
/// estimate mean_m f(theta^(m)) against `reference`.
inline double rmse(std::span<const Vector> draws, const Vector& reference, Transform transform) {
  detail::check_draws(draws, reference);
  Vector sum = Vector::Zero(reference.size());
  for (const auto& d : draws) sum += detail::apply(d, transform);
  const Vector err = sum / static_cast<double>(draws.size()) - reference;
  return std::sqrt(err.squaredNorm() / static_cast<double>(reference.size()));
}

struct CurvePoint {
  std::int64_t n;
  double abs_error;
};

/// Absolute error of the running estimate after each draw, averaged over coordinates.
inline std::vector<CurvePoint> learning_curve(std::span<const Vector> draws, const Vector& reference,
                                              Transform transform) {
  detail::check_draws(draws, reference);
  std::vector<CurvePoint> curve;
  curve.reserve(draws.size());
  Vector sum = Vector::Zero(reference.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    sum += detail::apply(draws[m], transform);
    const auto n = static_cast<double>(m + 1);
    curve.push_back({static_cast<std::int64_t>(m + 1), (sum / n - reference).cwiseAbs().mean()});
  }
  return curve;
}

struct ChainSummary {
  double msjd = 0.0;
  double rmse_params = 0.0;
  double rmse_params_sq = 0.0;
  double accept_rate = 0.0;
  double mean_accept_prob = 0.0;
  double no_return_rate = 0.0;
  double divergence_rate = 0.0;
  double mean_leapfrog = 0.0;  // gradient evaluations per iteration
  double mean_steps = 0.0;     // steps L to the proposal per iteration
  double mean_path_length = 0.0;
  double mean_tau = 0.0;
  std::int64_t total_gradient_evals = 0;
  std::int64_t n_iterations = 0;
};

/// Streaming accumulator for a chain. The initial position counts as draw 0
/// for MSJD; RMSE uses the draws after each transition.
class ChainAccumulator {
 public:
  ChainAccumulator(Vector reference_mean, Vector reference_sq)
      : ref_mean_(std::move(reference_mean)), ref_sq_(std::move(reference_sq)),
        sum_(Vector::Zero(ref_mean_.size())), sum_sq_(Vector::Zero(ref_mean_.size())) {}

  void start(const Vector& theta) { last_ = theta; }

  void add(const TransitionReport& r) {
    const Vector& theta = r.next.theta;
    sq_jump_ += (theta - last_).squaredNorm();
    last_ = theta;
    sum_ += theta;
    sum_sq_ += theta.array().square().matrix();
    accepted_ += r.accepted ? 1 : 0;
    no_return_ += r.no_return ? 1 : 0;
    diverged_ += r.diverged ? 1 : 0;
    accept_prob_ += r.accept_prob;
    grads_ += r.gradient_evals;
    steps_ += r.steps;
    path_ += r.path_length;
    tau_ += r.tau;
    ++n_;
  }

  ChainSummary summary() const {
    ChainSummary s;
    s.n_iterations = n_;
    if (n_ == 0) return s;
    const auto n = static_cast<double>(n_);
    const auto d = static_cast<double>(ref_mean_.size());
    s.msjd = sq_jump_ / n;
    s.rmse_params = std::sqrt((sum_ / n - ref_mean_).squaredNorm() / d);
    s.rmse_params_sq = std::sqrt((sum_sq_ / n - ref_sq_).squaredNorm() / d);
    s.accept_rate = static_cast<double>(accepted_) / n;
    s.mean_accept_prob = accept_prob_ / n;
    s.no_return_rate = static_cast<double>(no_return_) / n;
    s.divergence_rate = static_cast<double>(diverged_) / n;
    s.mean_leapfrog = static_cast<double>(grads_) / n;
    s.mean_steps = static_cast<double>(steps_) / n;
    s.mean_path_length = path_ / n;
    s.mean_tau = tau_ / n;
    s.total_gradient_evals = grads_;
    return s;
  }

 private:
  Vector ref_mean_, ref_sq_;
  Vector sum_, sum_sq_;
  Vector last_;
  double sq_jump_ = 0.0, accept_prob_ = 0.0, path_ = 0.0, tau_ = 0.0;
  std::int64_t accepted_ = 0, no_return_ = 0, diverged_ = 0, grads_ = 0, steps_ = 0, n_ = 0;
};

}  // namespace gist
