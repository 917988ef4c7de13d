#pragma once

#include <cmath>

#include "gist/integrator.hpp"
#include "gist/types.hpp"

namespace gist {

/// Centered diagonal Gaussian target with standard deviations `sigmas` and
/// unit mass; its Hamiltonian flow is a per-coordinate rotation with angular
/// frequency 1 / sigma_i.
class ExactFlowSpec {
 public:
  explicit ExactFlowSpec(Vector sigmas) : sigmas_(std::move(sigmas)) {
    if (sigmas_.size() < 1) throw dimension_error("exact flow spec needs dim >= 1");
    if (!sigmas_.allFinite() || !(sigmas_.array() > 0.0).all()) {
      throw domain_error("sigmas must be positive and finite", sigmas_);
    }
    inv_sigmas_ = sigmas_.array().inverse();
  }

  // sigma_i = i / d, i = 1..d
  static ExactFlowSpec truncated(Index d) {
    if (d < 1) throw dimension_error("exact flow spec needs dim >= 1");
    return ExactFlowSpec(Vector::LinSpaced(d, 1.0, static_cast<double>(d)) / static_cast<double>(d));
  }

  Index dim() const { return sigmas_.size(); }
  const Vector& sigmas() const { return sigmas_; }
  const Vector& inv_sigmas() const { return inv_sigmas_; }

  double hamiltonian(const PhaseState& z) const {
    return 0.5 * (z.theta.array() * inv_sigmas_.array()).square().sum() + 0.5 * z.rho.squaredNorm();
  }

  Vector draw_position(Rng& rng) const {
    return Vector::NullaryExpr(dim(), [&](Index i) { return sigmas_[i] * rng.normal(); });
  }

 private:
  Vector sigmas_;
  Vector inv_sigmas_;
};

inline void check_dims(const ExactFlowSpec& spec, const PhaseState& z) {
  if (z.theta.size() != spec.dim() || z.rho.size() != spec.dim()) {
    throw dimension_error("phase state dimension does not match the Gaussian spec");
  }
}

// theta_t = cos(t/s) theta_0 + s sin(t/s) rho_0
// rho_t   = -(1/s) sin(t/s) theta_0 + cos(t/s) rho_0
inline PhaseState exact_flow(const ExactFlowSpec& spec, const PhaseState& z, double t) {
  check_dims(spec, z);
  if (!(t >= 0.0)) throw error("flow time must be nonnegative");
  PhaseState out{Vector(spec.dim()), Vector(spec.dim())};
  for (Index i = 0; i < spec.dim(); ++i) {
    const double s = spec.sigmas()[i];
    const double w = spec.inv_sigmas()[i];
    const double c = std::cos(t * w);
    const double sn = std::sin(t * w);
    out.theta[i] = c * z.theta[i] + s * sn * z.rho[i];
    out.rho[i] = -w * sn * z.theta[i] + c * z.rho[i];
  }
  return out;
}

}  // namespace gist
