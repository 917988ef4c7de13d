#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gist/gaussian_exact.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace gist;
using std::numbers::pi;

namespace {

PhaseState random_state(const ExactFlowSpec& spec, Rng& rng) {
  return {spec.draw_position(rng), Vector::NullaryExpr(spec.dim(), [&](Index) { return rng.normal(); })};
}

double grid_tau(const ExactFlowSpec& spec, const PhaseState& z, UTurnCriterion c) {
  const oracle::DiagonalFlow flow{spec.sigmas(), z.theta, z.rho};
  if (c == UTurnCriterion::angle) {
    return oracle::grid_first_crossing([&](double t) { return flow.angle(t); }, [](double v) { return v <= 0.0; },
                                       1e-4, 200.0);
  }
  return oracle::grid_first_crossing([&](double t) { return flow.distance_rate(t); },
                                     [](double v) { return v < 0.0; }, 1e-4, 200.0);
}

}  // namespace

TEST(ExactFlow, QuarterPeriod) {
  const ExactFlowSpec one(Vector::Ones(1));
  const PhaseState out = exact_flow(one, {Vector::Ones(1), Vector::Zero(1)}, pi / 2);
  EXPECT_NEAR(out.theta[0], 0.0, 1e-15);
  EXPECT_NEAR(out.rho[0], -1.0, 1e-15);
}

TEST(ExactFlow, ZeroTimeIsIdentity) {
  const ExactFlowSpec spec = ExactFlowSpec::truncated(7);
  Rng rng(1, 0);
  const PhaseState z = random_state(spec, rng);
  const PhaseState out = exact_flow(spec, z, 0.0);
  EXPECT_EQ(out.theta, z.theta);
  EXPECT_EQ(out.rho, z.rho);
}

TEST(ExactFlow, MatchesCoordinateOracleAndConservesEnergy) {
  const ExactFlowSpec spec = ExactFlowSpec::truncated(20);
  Rng rng(2, 0);
  for (int k = 0; k < 100; ++k) {
    const PhaseState z = random_state(spec, rng);
    const double t = 5.0 * rng.uniform();
    const PhaseState out = exact_flow(spec, z, t);
    const oracle::DiagonalFlow flow{spec.sigmas(), z.theta, z.rho};
    for (Index i = 0; i < 20; ++i) {
      EXPECT_NEAR(out.theta[i], flow.theta(i, t), 1e-14);
      EXPECT_NEAR(out.rho[i], flow.rho(i, t), 1e-13);
    }
    const double h0 = spec.hamiltonian(z);
    EXPECT_LE(std::abs(spec.hamiltonian(out) - h0), 1e-10 * (1 + std::abs(h0)));
  }
}

TEST(ExactFlow, Composition) {
  const ExactFlowSpec spec = ExactFlowSpec::truncated(10);
  Rng rng(3, 0);
  for (int k = 0; k < 100; ++k) {
    const PhaseState z = random_state(spec, rng);
    const double t1 = 2.0 * rng.uniform(), t2 = 2.0 * rng.uniform();
    const PhaseState a = exact_flow(spec, exact_flow(spec, z, t1), t2);
    const PhaseState b = exact_flow(spec, z, t1 + t2);
    EXPECT_LE((a.theta - b.theta).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.rho - b.rho).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExactFlow, FlipIsInvolution) {
  // S(phi_a(S(phi_a(z)))) = z
  const ExactFlowSpec spec = ExactFlowSpec::truncated(5);
  Rng rng(4, 0);
  const PhaseState z = random_state(spec, rng);
  const PhaseState back = flip(exact_flow(spec, flip(exact_flow(spec, z, 0.7)), 0.7));
  EXPECT_LE((back.theta - z.theta).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((back.rho - z.rho).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GistExact, AcceptanceFormula) {
  const ExactFlowSpec spec = ExactFlowSpec::truncated(4);
  Rng rng(5, 0);
  int no_return = 0, full = 0;
  for (int k = 0; k < 300; ++k) {
    const PhaseState z = random_state(spec, rng);
    for (auto c : {UTurnCriterion::angle, UTurnCriterion::distance}) {
      const double tau1 = grid_tau(spec, z, c);
      const double alpha = tau1 * rng.uniform();
      const TransitionReport r = gist_exact_evaluate(spec, z, alpha, c);
      const double tau2 = grid_tau(spec, r.next, c);
      EXPECT_NEAR(r.tau, tau1, 1e-6);
      if (tau2 < alpha - 1e-6) {
        ++no_return;
        EXPECT_TRUE(r.no_return);
        EXPECT_EQ(r.log_accept_ratio, kNegInf);
        EXPECT_EQ(r.accept_prob, 0.0);
      } else if (tau2 > alpha + 1e-6) {
        EXPECT_FALSE(r.no_return);
        EXPECT_NEAR(r.accept_prob, std::min(1.0, tau1 / tau2), 1e-5);
        if (r.accept_prob == 1.0) ++full;
      }
    }
  }
  EXPECT_GT(no_return, 0);
  EXPECT_GT(full, 0);
}

TEST(GistExact, ShorterReturnAcceptsWithCertainty) {
  // alpha <= tau_2 <= tau_1 clips the ratio to exactly 1
  const ExactFlowSpec spec = ExactFlowSpec::truncated(3);
  Rng rng(6, 0);
  int seen = 0;
  for (int k = 0; k < 500; ++k) {
    const PhaseState z = random_state(spec, rng);
    const double tau1 = tau_angle_exact(spec, z);
    const TransitionReport r = gist_exact_evaluate(spec, z, 0.5 * tau1, UTurnCriterion::angle);
    if (r.no_return) continue;
    const double tau2 = tau_angle_exact(spec, r.next);
    ++seen;
    if (tau2 <= tau1) {
      EXPECT_EQ(r.accept_prob, 1.0);
      EXPECT_GE(r.log_accept_ratio, 0.0);
    } else {
      EXPECT_NEAR(r.accept_prob, tau1 / tau2, 1e-12);
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(GistExact, DetailedBalanceIdentity) {
  Rng rng(7, 0);
  const ExactFlowSpec spec = ExactFlowSpec::truncated(6);
  for (auto c : {UTurnCriterion::angle, UTurnCriterion::distance}) {
    const auto [worst, used] = props::exact_detailed_balance(spec, c, 300, rng);
    EXPECT_EQ(used, 300);
    EXPECT_LE(worst, 1e-12);
  }
}

TEST(GistExact, Stationarity) {
  // ill-conditioned target: z-test the standardized coordinates
  const ExactFlowSpec spec = ExactFlowSpec::truncated(3);
  Rng rng(8, 0);
  for (auto c : {UTurnCriterion::angle, UTurnCriterion::distance}) {
    const auto z = props::standard_normal_moments(
        [&](const Vector& u, Rng& r) {
          const Vector theta = (u.array() * spec.sigmas().array()).matrix();
          return Vector(gist_exact_transition(spec, theta, c, r).next.theta.array() / spec.sigmas().array());
        },
        3, 100000, rng);
    EXPECT_TRUE(z.pass()) << z.worst << " z=" << z.max_abs_z;
  }
}

TEST(Experiment, SingleStepIsOneReport) {
  for (auto v : {ExactVariant::rhmc, ExactVariant::gist_angle, ExactVariant::gist_dist}) {
    const ExperimentSummary s = run_gaussian_experiment(50, 1, v, 99);
    const ExactFlowSpec spec = ExactFlowSpec::truncated(50);
    Rng rng = Rng::stream(99, 0);
    const Vector theta = spec.draw_position(rng);
    TransitionReport r;
    if (v == ExactVariant::rhmc) r = rhmc_exact_transition(spec, theta, 1.0, rng);
    if (v == ExactVariant::gist_angle) r = gist_exact_transition(spec, theta, UTurnCriterion::angle, rng);
    if (v == ExactVariant::gist_dist) r = gist_exact_transition(spec, theta, UTurnCriterion::distance, rng);
    EXPECT_EQ(s.n_steps, 1);
    EXPECT_EQ(s.mean_accept, r.accept_prob);
    EXPECT_EQ(s.msjd, (r.next.theta - theta).squaredNorm());
    EXPECT_EQ(s.mean_tau, r.path_length);
    EXPECT_EQ(s.mean_uturn_time, r.tau);
    EXPECT_EQ(s.accept_rate, r.accepted ? 1.0 : 0.0);
  }
}

TEST(Experiment, RhmcAlwaysAcceptsAndIsDeterministic) {
  const ExperimentSummary a = run_gaussian_experiment(100, 2000, ExactVariant::rhmc, 5);
  const ExperimentSummary b = run_gaussian_experiment(100, 2000, ExactVariant::rhmc, 5);
  EXPECT_EQ(a.mean_accept, 1.0);
  EXPECT_EQ(a.accept_rate, 1.0);
  EXPECT_EQ(a.msjd, b.msjd);
  EXPECT_EQ(a.mean_tau, b.mean_tau);
  // analytic expectation for exponential(1) times: sum_i 2 sigma_i^2 / (1 + sigma_i^2)
  const ExactFlowSpec spec = ExactFlowSpec::truncated(100);
  double expected = 0.0;
  for (Index i = 0; i < 100; ++i) expected += 2 * spec.sigmas()[i] * spec.sigmas()[i] / (1 + spec.sigmas()[i] * spec.sigmas()[i]);
  EXPECT_NEAR(a.msjd, expected, 0.1 * expected);
}

TEST(Experiment, RejectsEmptyRun) { EXPECT_THROW(run_gaussian_experiment(10, 0, ExactVariant::rhmc, 1), error); }
