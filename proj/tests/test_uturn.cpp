#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gist/uturn.hpp"
#include "oracles.hpp"

using namespace gist;
using std::numbers::pi;

namespace {

PhaseState state1(double q, double p) { return {Vector::Constant(1, q), Vector::Constant(1, p)}; }

double grid_tau(const ExactFlowSpec& spec, const PhaseState& z, UTurnCriterion c, double step = 1e-4) {
  const oracle::DiagonalFlow flow{spec.sigmas(), z.theta, z.rho};
  if (c == UTurnCriterion::angle) {
    return oracle::grid_first_crossing([&](double t) { return flow.angle(t); }, [](double v) { return v <= 0.0; },
                                       step, 200.0);
  }
  return oracle::grid_first_crossing([&](double t) { return flow.distance_rate(t); },
                                     [](double v) { return v < 0.0; }, step, 200.0);
}

}  // namespace

TEST(UTurnSteps, MatchesScalarRollout) {
  StandardNormal m(1);
  const auto r = uturn_steps(m, state1(0, 1), 0.1, MassMatrix::identity(1), 1024);
  EXPECT_EQ(r.steps, oracle::scalar_uturn(0.0, 1.0, 0.1, 1024));
  EXPECT_EQ(r.steps, 16);
  EXPECT_FALSE(r.capped);
  EXPECT_FALSE(r.diverged);
  EXPECT_EQ(r.leapfrog_cost, 17);
}

TEST(UTurnSteps, RandomStatesMatchRollout) {
  StandardNormal m(1);
  Rng rng(1, 0);
  for (int k = 0; k < 200; ++k) {
    const double q = rng.normal(), p = rng.normal(), eps = 0.05 + 0.5 * rng.uniform();
    EXPECT_EQ(uturn_steps(m, state1(q, p), eps, MassMatrix::identity(1), 1024).steps,
              oracle::scalar_uturn(q, p, eps, 1024));
  }
}

TEST(UTurnSteps, FirstStepUTurn) {
  // one step of size 3 from (0, 1) lands at theta = 3 with rho = -3.5
  StandardNormal m(1);
  const auto r = uturn_steps(m, state1(0, 1), 3.0, MassMatrix::identity(1), 1024);
  EXPECT_EQ(r.steps, 1);
}

TEST(UTurnSteps, CapBinds) {
  StandardNormal m(1);
  const auto r = uturn_steps(m, state1(0, 1), 0.1, MassMatrix::identity(1), 4);
  EXPECT_EQ(r.steps, 4);
  EXPECT_TRUE(r.capped);
}

TEST(UTurnSteps, MonotoneInCapAndDeterministic) {
  CorrelatedNormal m(5, 0.9);
  const auto id = MassMatrix::identity(5);
  Rng rng(2, 0);
  for (int k = 0; k < 50; ++k) {
    const PhaseState z{m.draw(rng), id.draw(rng)};
    const auto full = uturn_steps(m, z, 0.2, id, 1024);
    EXPECT_EQ(full.steps, uturn_steps(m, z, 0.2, id, 1024).steps);
    for (std::int64_t cap : {1, 2, 5, 10, 50}) {
      const auto c = uturn_steps(m, z, 0.2, id, cap);
      if (c.capped) {
        EXPECT_GE(full.steps, c.steps);
      } else {
        EXPECT_EQ(full.steps, c.steps);
      }
    }
  }
}

TEST(UTurnSteps, DivergenceStopsBeforeDivergentStep) {
  // potential with a wall: log p = -theta^4 blows up the energy quickly for large eps
  struct Quartic {
    Index dim() const { return 1; }
    double log_density(const Vector& x) const { return -std::pow(x[0], 4); }
    double log_density_gradient(const Vector& x, Vector& g) const {
      g = Vector::Constant(1, -4.0 * std::pow(x[0], 3));
      return log_density(x);
    }
  } m;
  const auto r = uturn_steps(m, state1(0.0, 3.0), 1.0, MassMatrix::identity(1), 1024);
  EXPECT_TRUE(r.diverged);
  EXPECT_GE(r.steps, 1);
  // rollout: theta_1 = 3, then rho drops by 54 and theta_2 = 3 - 51 -> |dH| huge at step 2
  EXPECT_EQ(r.steps, 1);
}

TEST(SeedRoot, Examples) {
  const ExactFlowSpec one(Vector::Ones(1));
  EXPECT_NEAR(seed_root(one, state1(1, 1)), pi / 4, 1e-15);
  EXPECT_NEAR(seed_root(one, state1(1, -1)), 3 * pi / 4, 1e-15);
  EXPECT_NEAR(seed_root(one, state1(0, 1)), pi / 2, 1e-15);
  const ExactFlowSpec two(Vector::Ones(2));
  EXPECT_NEAR(seed_root(two, {Vector{{2.0, 2.0}}, Vector{{1.0, 1.0}}}), std::atan(0.5), 1e-15);
}

TEST(SeedRoot, IsFirstRootOfEachMomentum) {
  // every coordinate's rho_t^i vanishes at its own per-coordinate root
  Rng rng(3, 0);
  for (int k = 0; k < 100; ++k) {
    const ExactFlowSpec s(Vector::Constant(1, 0.2 + rng.uniform()));
    const PhaseState z = state1(rng.normal(), rng.normal());
    const double t = seed_root(s, z);
    const oracle::DiagonalFlow flow{s.sigmas(), z.theta, z.rho};
    EXPECT_NEAR(flow.rho(0, t), 0.0, 1e-12);
    const double first = oracle::grid_first_crossing([&](double u) { return flow.rho(0, u) * z.rho[0]; },
                                                     [](double v) { return v <= 0.0; }, 1e-4, 50.0);
    EXPECT_NEAR(t, first, 1e-8);
  }
}

TEST(TauAngle, Examples) {
  const ExactFlowSpec one(Vector::Ones(1));
  EXPECT_NEAR(tau_angle_exact(one, state1(1, 1)), pi / 4, 1e-11);
  EXPECT_NEAR(tau_angle_exact(one, state1(0, 1)), pi / 2, 1e-11);
  EXPECT_NEAR(grid_tau(one, state1(1, 1), UTurnCriterion::angle, 1e-5), pi / 4, 1e-11);
  const ExactFlowSpec two(Vector::Ones(2));
  const PhaseState z{Vector{{1.0, 0.0}}, Vector{{1.0, 1.0}}};
  EXPECT_NEAR(tau_angle_exact(two, z), grid_tau(two, z, UTurnCriterion::angle), 1e-8);
}

TEST(TauDist, Examples) {
  const ExactFlowSpec one(Vector::Ones(1));
  EXPECT_NEAR(tau_dist_exact(one, state1(0, 1)), pi / 2, 1e-11);
  EXPECT_NEAR(tau_dist_exact(one, state1(1, 0)), pi, 1e-11);
  EXPECT_NEAR(grid_tau(one, state1(0, 1), UTurnCriterion::distance), pi / 2, 1e-11);
  EXPECT_NEAR(grid_tau(one, state1(1, 0), UTurnCriterion::distance), pi, 1e-11);
  Rng rng(4, 0);
  const ExactFlowSpec three(Vector{{0.3, 0.6, 1.0}});
  const PhaseState z{Vector::NullaryExpr(3, [&](Index) { return rng.normal(); }),
                     Vector::NullaryExpr(3, [&](Index) { return rng.normal(); })};
  EXPECT_NEAR(tau_dist_exact(three, z), grid_tau(three, z, UTurnCriterion::distance), 1e-8);
}

TEST(TauExact, ResidualIsSmall) {
  Rng rng(5, 0);
  const ExactFlowSpec spec = ExactFlowSpec::truncated(10);
  for (int k = 0; k < 100; ++k) {
    const PhaseState z{spec.draw_position(rng), Vector::NullaryExpr(10, [&](Index) { return rng.normal(); })};
    const double t = tau_angle_exact(spec, z);
    EXPECT_LE(std::abs(uturn_function(spec, z, UTurnCriterion::angle, t)),
              1e-10 * std::abs(uturn_function(spec, z, UTurnCriterion::angle, 0.0)));
  }
}

TEST(TauExact, AgreesWithGridOracle) {
  Rng rng(6, 0);
  int cases = 0;
  for (Index d : {1, 2, 10}) {
    for (int k = 0; k < 167; ++k, ++cases) {
      const ExactFlowSpec spec(Vector::NullaryExpr(d, [&](Index) { return 0.2 + 0.8 * rng.uniform(); }));
      const PhaseState z{spec.draw_position(rng), Vector::NullaryExpr(d, [&](Index) { return rng.normal(); })};
      for (auto c : {UTurnCriterion::angle, UTurnCriterion::distance}) {
        ASSERT_NEAR(tau_exact(spec, z, c), grid_tau(spec, z, c), 1e-6) << "d=" << d << " case " << k;
      }
    }
  }
  EXPECT_GE(cases, 500);
}

TEST(TauExact, SmallSeedStillReachesLateTurn) {
  // slow momentum nearly aligned with position: the seed is far below the turn time
  const ExactFlowSpec spec = ExactFlowSpec::truncated(3);
  const PhaseState z{Vector{{-0.449567, -0.404263, -0.936696}}, Vector{{-0.100305, -0.00504327, -0.107804}}};
  EXPECT_LT(seed_root(spec, z), 0.05);
  const double t = tau_dist_exact(spec, z);
  EXPECT_GT(t, 2.0);
  EXPECT_NEAR(t, grid_tau(spec, z, UTurnCriterion::distance), 1e-6);
}

TEST(TauExact, RejectsDegenerateInput) {
  const ExactFlowSpec one(Vector::Ones(1));
  EXPECT_THROW(tau_angle_exact(one, state1(1, 0)), root_error);
  EXPECT_THROW(tau_angle_exact(one, state1(NAN, 1)), root_error);
}

TEST(UTurnConsistency, DiscreteApproachesContinuous) {
  StandardNormal m(1);
  const ExactFlowSpec one(Vector::Ones(1));
  const PhaseState z = state1(0.3, 0.8);
  const double tau = tau_dist_exact(one, z);
  double previous = INFINITY;
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto r = uturn_steps(m, z, eps, MassMatrix::identity(1), 100000);
    const double gap = std::abs(eps * static_cast<double>(r.steps) - tau) / tau;
    EXPECT_LT(gap, previous) << "eps=" << eps;
    previous = gap;
  }
  // the discrete count always lands within about one step of the continuous time
  Rng rng(7, 0);
  for (int k = 0; k < 200; ++k) {
    const PhaseState w = state1(rng.normal(), rng.normal());
    const double t = tau_dist_exact(one, w);
    if (t < 0.1) continue;  // excursions shorter than a few steps are invisible to the discrete check
    const auto r = uturn_steps(m, w, 0.01, MassMatrix::identity(1), 100000);
    EXPECT_NEAR(0.01 * static_cast<double>(r.steps), t, 0.011 + 1e-3 * t);
  }
}
