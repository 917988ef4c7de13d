#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "gist/model.hpp"
#include "gist/rng.hpp"
#include "gist/types.hpp"

namespace gist {

struct PhaseState {
  Vector theta;
  Vector rho;

  Index dim() const { return theta.size(); }
};

inline PhaseState flip(PhaseState z) {
  z.rho = -z.rho;
  return z;
}

/// Momentum covariance. Only identity and diagonal forms are supported.
class MassMatrix {
 public:
  enum class Kind { identity, diagonal };

  static MassMatrix identity(Index dim) { return MassMatrix(Vector::Ones(dim), Kind::identity); }

  static MassMatrix diagonal(Vector diag) {
    if (diag.size() < 1 || !diag.allFinite() || !(diag.array() > 0.0).all()) {
      throw domain_error("mass matrix diagonal must be positive and finite", diag);
    }
    return MassMatrix(std::move(diag), Kind::diagonal);
  }

  Kind kind() const { return kind_; }
  Index dim() const { return diag_.size(); }
  const Vector& diag() const { return diag_; }

  // Sigma^{-1} rho
  Vector velocity(const Vector& rho) const {
    if (kind_ == Kind::identity) return rho;
    return (rho.array() * inv_diag_.array()).matrix();
  }

  // rho^T Sigma^{-1} rho / 2
  double kinetic_energy(const Vector& rho) const {
    if (kind_ == Kind::identity) return 0.5 * rho.squaredNorm();
    return 0.5 * (rho.array().square() * inv_diag_.array()).sum();
  }

  // rho ~ normal(0, Sigma)
  Vector draw(Rng& rng) const {
    if (kind_ == Kind::identity) return Vector::NullaryExpr(dim(), [&](Index) { return rng.normal(); });
    return Vector::NullaryExpr(dim(), [&](Index i) { return sqrt_diag_[i] * rng.normal(); });
  }

 private:
  MassMatrix(Vector diag, Kind kind)
      : diag_(std::move(diag)), inv_diag_(diag_.array().inverse()), sqrt_diag_(diag_.array().sqrt()), kind_(kind) {}

  Vector diag_;
  Vector inv_diag_;
  Vector sqrt_diag_;
  Kind kind_;
};

// Leapfrog trajectories abort once |H - H_start| exceeds this.
inline constexpr double kDivergenceThreshold = 1000.0;

namespace detail {

inline void check_dims(const PhaseState& z, const MassMatrix& mass, Index model_dim) {
  if (z.theta.size() != model_dim || z.rho.size() != model_dim || mass.dim() != model_dim) {
    throw dimension_error("phase state, mass matrix and model dimensions disagree");
  }
}

}  // namespace detail

template <LogDensityModel M>
double hamiltonian(const M& model, const PhaseState& z, const MassMatrix& mass) {
  detail::check_dims(z, mass, model.dim());
  if (!z.theta.allFinite() || !z.rho.allFinite()) throw domain_error("phase state has non-finite entries", z.theta);
  const double lp = model.log_density(z.theta);
  if (!std::isfinite(lp)) throw domain_error("log density is not finite", z.theta);
  return -lp + mass.kinetic_energy(z.rho);
}

/// Phase point with its log density and gradient cached.
struct Point {
  Vector theta;
  Vector rho;
  Vector grad;
  double log_density = 0.0;

  PhaseState state() const { return {theta, rho}; }
};

/// Leapfrog integrator carrying the gradient from one step to the next, so
/// n steps from a fresh start cost n + 1 gradient evaluations. A negative
/// step size integrates backward in time.
template <LogDensityModel M>
class Leapfrog {
 public:
  Leapfrog(const M& model, const MassMatrix& mass, double step_size)
      : model_(&model), mass_(&mass), step_size_(step_size) {}

  Point start(const PhaseState& z) {
    Point p{z.theta, z.rho, Vector(), 0.0};
    p.log_density = model_->log_density_gradient(p.theta, p.grad);
    ++gradient_evals_;
    return p;
  }

  // Advance one step in place; false if the new point is not finite.
  bool step(Point& p) {
    const double half = 0.5 * step_size_;
    p.rho.noalias() += half * p.grad;
    p.theta.noalias() += step_size_ * mass_->velocity(p.rho);
    p.log_density = model_->log_density_gradient(p.theta, p.grad);
    ++gradient_evals_;
    p.rho.noalias() += half * p.grad;
    return std::isfinite(p.log_density) && p.grad.allFinite() && p.theta.allFinite() && p.rho.allFinite();
  }

  double hamiltonian(const Point& p) const { return -p.log_density + mass_->kinetic_energy(p.rho); }

  // True when p is finite and within the divergence threshold of h0.
  bool stable(const Point& p, double h0) const {
    const double h = hamiltonian(p);
    return std::isfinite(h) && std::abs(h - h0) <= kDivergenceThreshold;
  }

  std::int64_t gradient_evals() const { return gradient_evals_; }
  double step_size() const { return step_size_; }
  const MassMatrix& mass() const { return *mass_; }
  const M& model() const { return *model_; }

 private:
  const M* model_;
  const MassMatrix* mass_;
  double step_size_;
  std::int64_t gradient_evals_ = 0;
};

template <LogDensityModel M>
PhaseState leapfrog_step(const M& model, const PhaseState& z, double eps, const MassMatrix& mass) {
  if (!(eps > 0.0)) throw error("step size must be positive");
  detail::check_dims(z, mass, model.dim());
  Leapfrog<M> integrator(model, mass, eps);
  Point p = integrator.start(z);
  if (!p.grad.allFinite()) throw divergence_error("non-finite gradient at trajectory start", 0);
  if (!integrator.step(p)) throw divergence_error("non-finite state after leapfrog step", 1);
  return p.state();
}

template <LogDensityModel M>
PhaseState leapfrog_trajectory(const M& model, const PhaseState& z, double eps, const MassMatrix& mass,
                               std::int64_t n) {
  if (!(eps > 0.0)) throw error("step size must be positive");
  if (n < 0) throw error("number of steps must be nonnegative");
  detail::check_dims(z, mass, model.dim());
  if (n == 0) return z;
  Leapfrog<M> integrator(model, mass, eps);
  Point p = integrator.start(z);
  if (!p.grad.allFinite()) throw divergence_error("non-finite gradient at trajectory start", 0);
  const double h0 = integrator.hamiltonian(p);
  for (std::int64_t k = 1; k <= n; ++k) {
    if (!integrator.step(p) || !integrator.stable(p, h0)) {
      throw divergence_error("leapfrog trajectory diverged at step " + std::to_string(k), k);
    }
  }
  return p.state();
}

}  // namespace gist
