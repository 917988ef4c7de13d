// GIST with uniform step counts against NUTS on a 10-dimensional standard normal.
#include <cstdio>
#include <vector>

#include "gist/diagnostics.hpp"
#include "gist/gist.hpp"
#include "gist/nuts.hpp"

using namespace gist;

template <class Sampler>
ChainSummary run(const Sampler& sampler, const StandardNormal& model, int n, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  Vector theta = model.draw(rng);
  ChainAccumulator acc(model.mean(), model.second_moment());
  acc.start(theta);
  for (int i = 0; i < n; ++i) {
    TransitionReport r = sampler.transition(theta, rng);
    acc.add(r);
    theta = std::move(r.next.theta);
  }
  return acc.summary();
}

int main() {
  const StandardNormal model(10);
  const auto mass = MassMatrix::identity(10);
  const int n = 20000;

  const GistSampler<StandardNormal> gist(model, 0.3, mass, StepDistribution::uniform(0.0));
  const NutsSampler<StandardNormal> nuts(model, 0.3, mass);

  std::printf("%-14s %8s %8s %10s %10s %12s\n", "sampler", "accept", "msjd", "rmse", "rmse_sq", "grads/iter");
  for (const auto& [name, s] : {std::pair{"gist_uniform", run(gist, model, n, 7)}, std::pair{"nuts", run(nuts, model, n, 7)}}) {
    std::printf("%-14s %8.3f %8.2f %10.4f %10.4f %12.1f\n", name, s.accept_rate, s.msjd, s.rmse_params,
                s.rmse_params_sq, s.mean_leapfrog);
  }
}
