#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "gist/gist.hpp"
#include "gist/integrator.hpp"
#include "gist/model.hpp"
#include "gist/nuts.hpp"
#include "gist/rng.hpp"

namespace gist {

enum class AapsWeight {
  boltzmann,         // w(z, z') = e^{-H(z')}
  boltzmann_sqjump,  // w(z, z') = e^{-H(z')} |theta - theta'|^2
};

// Metropolis-Hastings log ratio for moving z -> z':
//   -dH + log w(z', z) - log w(z, z') + log sum_w(z, .) - log sum_w(z', .)
inline double aaps_log_ratio(double energy_from, double energy_to, double log_w_to_from, double log_w_from_to,
                             double log_sum_from, double log_sum_to) {
  const double r = -(energy_to - energy_from) + log_w_to_from - log_w_from_to + log_sum_from - log_sum_to;
  return std::isnan(r) ? kNegInf : r;
}

namespace detail {

// True when U is instantaneously increasing at p, i.e. grad U . dtheta/dt > 0.
inline bool potential_rising(const Point& p, const MassMatrix& mass) {
  return -p.grad.dot(mass.velocity(p.rho)) > 0.0;
}

// An apogee lies between time-ordered neighbours a, b when U rises at a and
// falls at b.
inline bool apogee_between(const Point& earlier, const Point& later, const MassMatrix& mass) {
  return potential_rising(earlier, mass) && !potential_rising(later, mass);
}

struct SegmentedPath {
  std::deque<Point> points;      // time-ordered
  std::deque<std::int64_t> segment;  // segment index of each point
  std::int64_t first = 0;        // leapfrog offset of points.front()
  bool capped = false;
  bool diverged = false;
};

// Collects the iterates of segments [lowest, highest] around z (lowest <= 0 <= highest),
// walking at most `cap` steps in each direction.
template <LogDensityModel M>
SegmentedPath collect_segments(Leapfrog<M>& forward, Leapfrog<M>& backward, const MassMatrix& mass, const Point& start,
                               std::int64_t lowest, std::int64_t highest, std::int64_t cap) {
  SegmentedPath path;
  path.points.push_back(start);
  path.segment.push_back(0);
  const double h0 = forward.hamiltonian(start);

  Point p = start;
  std::int64_t seg = 0;
  for (std::int64_t n = 1;; ++n) {
    if (n > cap) {
      path.capped = true;
      break;
    }
    Point q = p;
    if (!forward.step(q) || !forward.stable(q, h0)) {
      path.diverged = true;
      break;
    }
    if (apogee_between(p, q, mass)) ++seg;
    if (seg > highest) break;
    path.points.push_back(q);
    path.segment.push_back(seg);
    p = std::move(q);
  }

  p = start;
  seg = 0;
  for (std::int64_t n = 1;; ++n) {
    if (n > cap) {
      path.capped = true;
      break;
    }
    Point q = p;
    if (!backward.step(q) || !backward.stable(q, h0)) {
      path.diverged = true;
      break;
    }
    if (apogee_between(q, p, mass)) --seg;
    if (seg < lowest) break;
    path.points.push_front(q);
    path.segment.push_front(seg);
    --path.first;
    p = std::move(q);
  }
  return path;
}

}  // namespace detail

/// Index of the apogee-to-apogee segment, counted from the segment holding z,
/// that contains the iterate Phi^offset(z).
template <LogDensityModel M>
std::int64_t segment_index(const M& model, const PhaseState& z, double eps, const MassMatrix& mass,
                           std::int64_t offset) {
  if (!(eps > 0.0)) throw error("step size must be positive");
  detail::check_dims(z, mass, model.dim());
  Leapfrog<M> integrator(model, mass, offset >= 0 ? eps : -eps);
  Point p = integrator.start(z);
  std::int64_t seg = 0;
  const std::int64_t n = offset >= 0 ? offset : -offset;
  for (std::int64_t k = 0; k < n; ++k) {
    Point q = p;
    if (!integrator.step(q)) throw divergence_error("non-finite state while locating segment", k + 1);
    if (offset >= 0) {
      if (detail::apogee_between(p, q, mass)) ++seg;
    } else {
      if (detail::apogee_between(q, p, mass)) --seg;
    }
    p = std::move(q);
  }
  return seg;
}

/// Apogee-to-Apogee Path Sampler: choose c uniformly in {0..K}, collect the
/// segments S_{-c}..S_{K-c}, pick an iterate with weight w, Metropolis-adjust.
template <LogDensityModel M>
class AapsSampler {
 public:
  AapsSampler(const M& model, double step_size, MassMatrix mass, std::int64_t segments, AapsWeight weight,
              std::int64_t cap = 1024)
      : model_(&model), step_size_(step_size), mass_(std::move(mass)), k_(segments), weight_(weight), cap_(cap) {
    if (!(step_size > 0.0)) throw error("step size must be positive");
    if (segments < 0) throw error("AAPS segment count K must be nonnegative");
    if (cap < 1) throw error("AAPS cap must be at least 1");
    if (mass_.dim() != model.dim()) throw dimension_error("mass matrix dimension does not match model");
  }

  TransitionReport transition(const Vector& theta, Rng& rng) const {
    PhaseState z{theta, mass_.draw(rng)};
    Leapfrog<M> forward(*model_, mass_, step_size_);
    Leapfrog<M> backward(*model_, mass_, -step_size_);
    const Point start = forward.start(z);
    const auto c = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(k_ + 1)));
    const detail::SegmentedPath path =
        detail::collect_segments(forward, backward, mass_, start, -c, k_ - c, cap_);

    const std::size_t origin = static_cast<std::size_t>(-path.first);
    std::vector<double> energy(path.points.size());
    for (std::size_t i = 0; i < path.points.size(); ++i) energy[i] = forward.hamiltonian(path.points[i]);

    const std::vector<double> from_start = log_weights(path, energy, origin);
    const double log_sum_start = detail::log_sum_exp(from_start);
    const std::size_t pick = std::isfinite(log_sum_start) ? detail::categorical(from_start, rng) : origin;
    const std::vector<double> from_pick = log_weights(path, energy, pick);

    TransitionReport report;
    report.offset = path.first + static_cast<std::int64_t>(pick);
    report.steps = std::abs(report.offset);
    report.forward_steps = static_cast<std::int64_t>(path.points.size());
    report.capped = path.capped;
    report.diverged = path.diverged;
    report.gradient_evals = forward.gradient_evals() + backward.gradient_evals();
    report.path_length = step_size_ * static_cast<double>(report.steps);

    report.log_accept_ratio = pick == origin ? 0.0
                                             : aaps_log_ratio(energy[origin], energy[pick], from_pick[origin],
                                                              from_start[pick], log_sum_start,
                                                              detail::log_sum_exp(from_pick));
    report.accept_prob = accept_probability(report.log_accept_ratio);
    report.accepted = std::log(rng.uniform()) < report.log_accept_ratio;
    report.next = report.accepted ? path.points[pick].state() : std::move(z);
    return report;
  }

  // log w(points[from], points[i]) for every i
  std::vector<double> log_weights(const detail::SegmentedPath& path, const std::vector<double>& energy,
                                  std::size_t from) const {
    std::vector<double> lw(path.points.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
      lw[i] = -energy[i];
      if (weight_ == AapsWeight::boltzmann_sqjump) {
        lw[i] += std::log((path.points[i].theta - path.points[from].theta).squaredNorm());
      }
    }
    return lw;
  }

 private:
  const M* model_;
  double step_size_;
  MassMatrix mass_;
  std::int64_t k_;
  AapsWeight weight_;
  std::int64_t cap_;
};

template <LogDensityModel M>
TransitionReport aaps_transition(const M& model, const Vector& theta, double eps, const MassMatrix& mass,
                                 std::int64_t segments, AapsWeight weight, std::int64_t cap, Rng& rng) {
  return AapsSampler<M>(model, eps, mass, segments, weight, cap).transition(theta, rng);
}

}  // namespace gist
