#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gist/integrator.hpp"
#include "gist/rng.hpp"
#include "gist/uturn.hpp"
#include "harness/runner.hpp"

namespace {

using namespace harness;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
  std::string config;
  std::optional<std::string> model, data, reference, sampler, aaps_weight, out;
  std::optional<Index> dim;
  std::optional<double> correlation, eps, fraction, psi, lambda;
  std::optional<std::int64_t> K, cap, iterations, chains;
  std::optional<int> max_depth, workers;
  std::optional<std::uint64_t> seed;
  std::vector<double> sweep_eps, sweep_fraction, sweep_psi;
  std::vector<std::int64_t> sweep_K;
};

void add_run_options(CLI::App* app, Overrides& o, bool sweep_axes) {
  app->add_option("-c,--config", o.config, "JSON config file (sections model, sampler, run, sweep)");
  app->add_option("--model", o.model, "model name");
  app->add_option("--dim", o.dim, "model dimension");
  app->add_option("--correlation", o.correlation, "correlated_normal correlation");
  app->add_option("--data", o.data, "eight schools data file");
  app->add_option("--reference", o.reference, "eight schools reference moments file");
  app->add_option("--sampler", o.sampler, "sampler name");
  app->add_option("--eps", o.eps, "leapfrog step size");
  app->add_option("--fraction", o.fraction, "uniform lower-bound fraction");
  app->add_option("--psi", o.psi, "binomial success probability");
  app->add_option("--K", o.K, "AAPS segment count");
  app->add_option("--aaps-weight", o.aaps_weight, "boltzmann or boltzmann_sqjump");
  app->add_option("--lambda", o.lambda, "randomized HMC integration-time rate");
  app->add_option("--cap", o.cap, "U-turn step cap");
  app->add_option("--max-depth", o.max_depth, "NUTS maximum tree depth");
  app->add_option("-n,--iterations", o.iterations, "transitions per chain");
  app->add_option("--chains", o.chains, "chains (repetitions) per cell");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("-j,--workers", o.workers, "worker threads (default: GIST_WORKERS or all cores)");
  app->add_option("-o,--out", o.out, "output CSV path, - for stdout");
  if (sweep_axes) {
    app->add_option("--sweep-eps", o.sweep_eps, "step sizes")->delimiter(',');
    app->add_option("--sweep-fraction", o.sweep_fraction, "lower-bound fractions")->delimiter(',');
    app->add_option("--sweep-psi", o.sweep_psi, "binomial probabilities")->delimiter(',');
    app->add_option("--sweep-K", o.sweep_K, "AAPS segment counts")->delimiter(',');
  }
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.model) c.model.name = *o.model;
  if (o.dim) c.model.dim = *o.dim;
  if (o.correlation) c.model.correlation = *o.correlation;
  if (o.data) c.model.data = *o.data;
  if (o.reference) c.model.reference = *o.reference;
  if (o.sampler) c.sampler = *o.sampler;
  if (o.eps) c.eps = *o.eps;
  if (o.fraction) c.fraction = *o.fraction;
  if (o.psi) c.psi = *o.psi;
  if (o.K) c.K = *o.K;
  if (o.aaps_weight) c.aaps_weight = *o.aaps_weight;
  if (o.lambda) c.lambda = *o.lambda;
  if (o.cap) c.cap = *o.cap;
  if (o.max_depth) c.max_depth = *o.max_depth;
  if (o.iterations) c.n_iterations = *o.iterations;
  if (o.chains) c.n_chains = *o.chains;
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.output = *o.out;
  if (!o.sweep_eps.empty()) c.sweep_eps = o.sweep_eps;
  if (!o.sweep_fraction.empty()) c.sweep_fraction = o.sweep_fraction;
  if (!o.sweep_psi.empty()) c.sweep_psi = o.sweep_psi;
  if (!o.sweep_K.empty()) c.sweep_K = o.sweep_K;
  validate(c);
  return c;
}

// The whole table is built in memory so a failed run leaves no partial file.
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int list_models() {
  std::cout << "name,dim,parameters\n"
            << "standard_normal,configurable,dim\n"
            << "ill_conditioned_normal,configurable,dim (scales i/dim)\n"
            << "correlated_normal,configurable,dim correlation\n"
            << "eight_schools,10,data reference mu_scale tau_scale\n";
  return kOk;
}

// Quick structural checks; the full statistical suite lives in the tests.
int selftest() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    failures += ok ? 0 : 1;
  };

  const auto block = gist::Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  report("philox known answer", block == gist::Philox4x32::block_type{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  bool gradients = true;
  gist::Rng rng(2024, 0);
  for (const auto& name : model_names()) {
    ModelConfig m;
    m.name = name;
    m.dim = 5;
    const Target t = make_target(m);
    const Vector x = t.model.draw(rng);
    Vector g;
    t.model.log_density_gradient(x, g);
    for (Index i = 0; i < x.size(); ++i) {
      const double h = 1e-5 * (1.0 + std::abs(x[i]));
      Vector a = x, b = x;
      a[i] += h;
      b[i] -= h;
      const double fd = (t.model.log_density(a) - t.model.log_density(b)) / (2 * h);
      gradients = gradients && std::abs(fd - g[i]) <= 1e-5 * (1.0 + std::abs(g[i]));
    }
  }
  report("model gradients match finite differences", gradients);

  const gist::CorrelatedNormal corr(6, 0.7);
  const auto mass = gist::MassMatrix::identity(6);
  const gist::PhaseState z{corr.draw(rng), mass.draw(rng)};
  const auto there = gist::leapfrog_trajectory(corr, z, 0.2, mass, 40);
  const auto back = gist::flip(gist::leapfrog_trajectory(corr, gist::flip(there), 0.2, mass, 40));
  report("leapfrog reversibility", (back.theta - z.theta).norm() <= 1e-10 && (back.rho - z.rho).norm() <= 1e-10);

  const gist::ExactFlowSpec spec = gist::ExactFlowSpec::truncated(50);
  bool roots = true;
  for (int k = 0; k < 20; ++k) {
    const gist::PhaseState w{spec.draw_position(rng), Vector::NullaryExpr(50, [&](Index) { return rng.normal(); })};
    for (auto c : {gist::UTurnCriterion::angle, gist::UTurnCriterion::distance}) {
      const double t = gist::tau_exact(spec, w, c);
      const double scale = std::abs(gist::uturn_function(spec, w, c, 0.5 * t)) + 1.0;
      roots = roots && std::abs(gist::uturn_function(spec, w, c, t)) <= 1e-9 * scale;
    }
  }
  report("exact U-turn roots", roots);

  RunConfig c;
  c.model.dim = 3;
  c.n_iterations = 50;
  c.n_chains = 2;
  std::ostringstream a, b;
  write_chains(a, c, 2, false);
  write_chains(b, c, 1, false);
  report("run output independent of worker count", a.str() == b.str());

  return failures == 0 ? kOk : kRuntimeError;
}

struct ReferenceOptions {
  std::uint64_t seed = 20240611;
  std::int64_t draws = 1000000;
  std::int64_t chains = 4;
  std::int64_t burn_in = 2000;
  double eps = 0.2;
  int max_depth = 10;
  std::string data;
  std::string out = "-";
  std::optional<int> workers;
};

// Long NUTS run on eight schools; writes the reference moments used for RMSE.
int reference(const ReferenceOptions& o, const std::string& command) {
  if (o.chains < 1 || o.draws < o.chains) throw ConfigError("draws: need at least one draw per chain");
  if (o.burn_in < 0) throw ConfigError("burn-in: must be nonnegative");
  if (!(o.eps > 0.0)) throw ConfigError("eps: must be positive");
  RunConfig c;
  c.model.name = "eight_schools";
  c.model.data = o.data;
  c.model.reference = "";
  c.sampler = "nuts";
  c.eps = o.eps;
  c.max_depth = o.max_depth;
  c.seed = o.seed;
  validate(c);
  const Target target = make_target(c.model);
  const auto d = target.model.dim();
  const auto per_chain = o.draws / o.chains;
  std::vector<Vector> sums(static_cast<std::size_t>(o.chains), Vector::Zero(d));
  std::vector<Vector> sums_sq = sums;
  parallel_for(static_cast<std::size_t>(o.chains), resolve_workers(o.workers.value_or(0)), [&](std::size_t k) {
    RunConfig chain = c;
    chain.n_iterations = o.burn_in + per_chain;
    std::int64_t n = 0;
    run_chain(chain, target, k, [&](const Vector& t) {
      if (n++ < o.burn_in) return;
      sums[k] += t;
      sums_sq[k] += t.array().square().matrix();
    });
  });
  Vector mean = Vector::Zero(d), sq = Vector::Zero(d);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    mean += sums[k];
    sq += sums_sq[k];
  }
  const auto total = static_cast<double>(per_chain * o.chains);
  mean /= total;
  sq /= total;
  nlohmann::json j;
  j["model"] = "eight_schools";
  j["parameterization"] = "mu, log tau, theta_tilde[1..8]";
  j["sampler"] = "nuts";
  j["eps"] = o.eps;
  j["max_depth"] = o.max_depth;
  j["seed"] = o.seed;
  j["rng"] = kRngName;
  j["chains"] = o.chains;
  j["burn_in"] = o.burn_in;
  j["draws"] = per_chain * o.chains;
  j["command"] = command;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + d);
  j["second_moment"] = std::vector<double>(sq.data(), sq.data() + d);
  emit(o.out, j.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gist: Gibbs self-tuning HMC experiments"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, curve_o;
  auto* run = app.add_subcommand("run", "run chains and write one CSV row per chain");
  add_run_options(run, run_o, false);
  auto* sweep = app.add_subcommand("sweep", "run a parameter grid and write one CSV row per cell");
  add_run_options(sweep, sweep_o, true);
  auto* curve = app.add_subcommand("learning-curve", "running absolute error per iteration, averaged over chains");
  add_run_options(curve, curve_o, false);

  ExactConfig exact;
  std::optional<int> exact_workers;
  std::string exact_out = "-";
  auto* gx = app.add_subcommand("gaussian-exact", "exact-flow experiment on the sigma_i = i/d Gaussian");
  gx->add_option("--dim", exact.dim, "dimension")->capture_default_str();
  gx->add_option("--steps", exact.n_steps, "transitions per chain")->capture_default_str();
  gx->add_option("--seeds", exact.n_seeds, "independent replicates")->capture_default_str();
  gx->add_option("--seed", exact.seed, "master seed")->capture_default_str();
  gx->add_option("--lambda", exact.lambda, "randomized HMC integration-time rate")->capture_default_str();
  gx->add_option("--variants", exact.variants, "rhmc, gist_angle, gist_dist")->delimiter(',');
  gx->add_flag("--per-seed", exact.per_seed, "one row per replicate instead of the average");
  gx->add_option("-j,--workers", exact_workers, "worker threads");
  gx->add_option("-o,--out", exact_out, "output CSV path");

  auto* models = app.add_subcommand("models", "model registry");
  models->add_subcommand("list", "list available models");
  models->require_subcommand(1);

  auto* self = app.add_subcommand("selftest", "quick structural checks");

  ReferenceOptions ref;
  auto* refcmd = app.add_subcommand("reference", "regenerate the eight schools reference moments");
  refcmd->add_option("--seed", ref.seed)->capture_default_str();
  refcmd->add_option("--draws", ref.draws)->capture_default_str();
  refcmd->add_option("--chains", ref.chains)->capture_default_str();
  refcmd->add_option("--burn-in", ref.burn_in)->capture_default_str();
  refcmd->add_option("--eps", ref.eps)->capture_default_str();
  refcmd->add_option("--max-depth", ref.max_depth)->capture_default_str();
  refcmd->add_option("--data", ref.data);
  refcmd->add_option("-j,--workers", ref.workers);
  refcmd->add_option("-o,--out", ref.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run || *sweep || *curve) {
      const Overrides& o = *run ? run_o : *sweep ? sweep_o : curve_o;
      const RunConfig c = resolve(o);
      const unsigned workers = resolve_workers(c.workers);
      std::ostringstream text;
      if (*curve) {
        write_learning_curve(text, c, workers);
      } else {
        write_chains(text, c, workers, static_cast<bool>(*sweep));
      }
      emit(c.output, text.str());
      return kOk;
    }
    if (*gx) {
      validate(exact);
      std::ostringstream text;
      write_exact(text, exact, resolve_workers(exact_workers.value_or(0)));
      emit(exact_out, text.str());
      return kOk;
    }
    if (*models) return list_models();
    if (*self) return selftest();
    if (*refcmd) {
      std::string command = "gist";
      for (int i = 1; i < argc; ++i) command += std::string(" ") + argv[i];
      return reference(ref, command);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
